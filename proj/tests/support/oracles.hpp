#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "polarity/model.hpp"

namespace oracle {

using polarity::PlatformPair;
using polarity::Point;
using polarity::ReducedPayoff;
using polarity::Shock;
using polarity::VoterDistribution;

// Party A payoff by telescoping over types sorted by descending delta:
// nu(0) + sum_k P(eps <= delta_(k)) [nu(T_k) - nu(T_{k-1})], T_k the top-k share.
double payoff_a(const VoterDistribution& dist, const ReducedPayoff& nu, const Shock& shock,
                const PlatformPair& pair);

// (A share, probability) cells from descending-delta cutoffs.
struct Cell {
  double share_a;
  double probability;
};
std::vector<Cell> share_cells(const VoterDistribution& dist, const Shock& shock,
                              const PlatformPair& pair);

// Expected quadratic welfare of x_B + Lambda (x_A - x_B), Lambda = rho(s)/rho_bar.
double expected_welfare(const VoterDistribution& dist, const ReducedPayoff& nu,
                        const Shock& shock, const PlatformPair& pair);

// Best payoff party A can reach against `opponent` over a uniform grid of
// `points` candidates in [lo, hi], polished by golden-section search.
struct GridBest {
  double x = 0.0;
  double payoff = 0.0;
};
GridBest grid_best_response_1d(const VoterDistribution& dist, const ReducedPayoff& nu,
                               const Shock& shock, double opponent, double lo, double hi,
                               int points = 10000);

// Central difference of f at x with step h.
template <class F>
double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Random electorates. Shares are positive and sum to one; bliss points are
// separated by at least 0.05 in every pairwise distance.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  VoterDistribution line(std::size_t n);
  // Symmetric about the origin: n/2 mirrored pairs plus a central type when n is odd.
  VoterDistribution symmetric(std::size_t n, int dim);
  VoterDistribution general(std::size_t n, int dim);
  // phi large enough for every delta to stay inside [-phi, phi].
  Shock covering_shock(const VoterDistribution& dist);
  ReducedPayoff concave_nu();

  double uniform(double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::vector<double> shares(std::size_t n);
  Point point(int dim);
  bool separated(const std::vector<Point>& pts, const Point& p) const;
  std::mt19937_64 rng_;
};

}  // namespace oracle
