#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polarity/model.hpp"

namespace polarity {

// Type indices ordered by ascending delta: position 0 leans most to B.
using Ranking = std::vector<std::size_t>;

inline constexpr std::size_t kDefaultFactorialCap = 8;

struct EnumerationOptions {
  std::size_t factorial_cap = kDefaultFactorialCap;
  unsigned threads = 1;
};

// None when two adjacent deltas are closer than tol.
std::optional<Ranking> induced_ranking(const PlatformPair& pair,
                                       const VoterDistribution& dist,
                                       double tol = kTieTolerance);

// Weights are indexed by ranking position.
struct RankedPlatforms {
  Point x_high;
  Point x_low;
  std::vector<double> weights_high;
  std::vector<double> weights_low;
};
RankedPlatforms platforms_for_ranking(const Ranking& ranking,
                                      const VoterDistribution& dist,
                                      const ReducedPayoff& nu);

struct LocalEquilibrium {
  PlatformPair pair;  // (x_high(R), x_low(R))
  Ranking ranking;
  double distance_sq = 0.0;
  double payoff = 0.0;
  bool interior = true;  // every delta inside [-phi, phi]
};

// Self-consistent rankings in lexicographic order. Throws PreconditionError
// above the factorial cap; use ranking_fixed_point for larger electorates.
std::vector<LocalEquilibrium> enumerate_local_equilibria(
    const VoterDistribution& dist, const ReducedPayoff& nu, const Shock& shock,
    const EnumerationOptions& opts = {});

// Argmax of the party's expected payoff over {x_high(R), x_low(R)}.
Point best_response(const Point& opponent, const VoterDistribution& dist,
                    const ReducedPayoff& nu, const Shock& shock, Party party,
                    const EnumerationOptions& opts = {});

struct BrTrajectory {
  std::vector<PlatformPair> steps;  // steps[0] is the start
  PlatformPair terminal;
  bool converged = false;
  bool symmetric = false;  // monotonicity checked only when true
  bool monotone = true;
  std::string warning;
};
// A moves at odd steps, B at even steps; a party already best responding
// stays put. Stops after two consecutive non-moves or max_iters steps.
BrTrajectory br_dynamics(const PlatformPair& start, const VoterDistribution& dist,
                         const ReducedPayoff& nu, const Shock& shock,
                         std::size_t max_iters, const EnumerationOptions& opts = {});

struct NashReport {
  std::vector<LocalEquilibrium> preferred;
  double max_distance_sq = 0.0;
  std::vector<LocalEquilibrium> inventory;
};
NashReport party_preferred(const VoterDistribution& dist, const ReducedPayoff& nu,
                           const Shock& shock, const EnumerationOptions& opts = {});

bool is_symmetric(const VoterDistribution& dist);

// Position whose cumulative mass from below spans 1/2; none when a boundary
// between two positions carries exactly half the mass.
std::optional<std::size_t> divide_position(const Ranking& ranking,
                                           const VoterDistribution& dist);

double local_divide_gradient(const Ranking& ranking, const VoterDistribution& dist,
                             const ReducedPayoff& nu, const Shock& shock,
                             std::size_t position, std::size_t dim);

// Heuristic for electorates above the cap: rank, rebuild platforms, re-rank
// until a ranking repeats. Not guaranteed to find any local equilibrium.
struct FixedPointResult {
  std::optional<LocalEquilibrium> equilibrium;
  std::size_t iterations = 0;
  bool cycled = false;
};
FixedPointResult ranking_fixed_point(const VoterDistribution& dist,
                                     const ReducedPayoff& nu, const Shock& shock,
                                     const Point& direction, std::size_t max_iters = 100);

// Inner products with d; coincident projections merged with summed shares.
VoterDistribution project_onto(const VoterDistribution& dist, const Point& d);

bool is_d_spread(const VoterDistribution& base, const VoterDistribution& candidate,
                 const Point& d);

struct DSpreadComparison {
  Point direction;
  double base_distance_sq = 0.0;
  double candidate_distance_sq = 0.0;
  double base_payoff = 0.0;
  double candidate_payoff = 0.0;
};
DSpreadComparison d_spread_payoff_compare(const VoterDistribution& base,
                                          const VoterDistribution& candidate,
                                          const ReducedPayoff& nu, const Shock& shock,
                                          const EnumerationOptions& opts = {});

// Marginal-preserving coherence increase for a symmetric distribution: for
// each mirrored pair, swap one coordinate between the two types whenever that
// moves both further from the center along d. Throws if nothing moves.
VoterDistribution coherence_swap(const VoterDistribution& dist, const Point& d);

}  // namespace polarity
