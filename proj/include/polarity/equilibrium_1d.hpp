#pragma once

#include <vector>

#include "polarity/model.hpp"

namespace polarity {

// Unidimensional equilibrium (x_A, x_B) = (x_high, x_low). Per-type vectors
// are indexed like the input distribution, not by sorted position.
struct Equilibrium1D {
  double x_low = 0.0;
  double x_high = 0.0;
  std::vector<double> weights_low;
  std::vector<double> weights_high;
  double payoff = 0.0;
  double x_rn = 0.0;
  double median = 0.0;
  bool diverse = true;
  bool support_ok = true;

  double distance() const { return x_high - x_low; }
  PlatformPair pair() const;
};

// Raw weight formulas without any validation of nu or the result.
struct ClosedForm1D {
  double x_low = 0.0;
  double x_high = 0.0;
  std::vector<double> weights_low;
  std::vector<double> weights_high;
};
ClosedForm1D closed_form_platforms_1d(const VoterDistribution& dist,
                                      const ReducedPayoff& nu);

// Requires K = 1, a normalized increasing nu and the catch-up property. A
// single-type electorate yields the converged point with diverse = false.
// Throws ConsistencyError if any invariant of the result fails.
Equilibrium1D equilibrium_1d(const VoterDistribution& dist, const ReducedPayoff& nu,
                             const Shock& shock);

double risk_neutral_benchmark(const VoterDistribution& dist, const PowerMap& power);
double median_type(const VoterDistribution& dist);

// Derivative of the equilibrium payoff with respect to x_i; identical for
// both parties since their equilibrium payoffs coincide.
double payoff_gradient_bliss(const VoterDistribution& dist, const ReducedPayoff& nu,
                             const Shock& shock, std::size_t i, Party party);

enum class GroupEffect { kAttract, kAlienate, kUnclassified };
const char* to_string(GroupEffect effect);

GroupEffect classify_group(const VoterDistribution& dist, const ReducedPayoff& nu,
                           const Shock& shock, std::size_t i, Party party);

VoterDistribution center_at_median(const VoterDistribution& dist);

// Each side of the distribution relative to its own median, with the median
// type's mass split so both sides carry exactly one half.
struct MedianSplit {
  std::vector<double> left_values, left_mass;
  std::vector<double> right_values, right_mass;
};
MedianSplit split_at_median(const VoterDistribution& dist);

// Compares raw positions: the below-median conditional of `base` dominates
// that of `candidate` and the above-median conditional of `candidate`
// dominates that of `base`, one of them strictly. Center both inputs first
// to compare shapes rather than locations.
bool is_spread(const VoterDistribution& base, const VoterDistribution& candidate);

struct SpreadComparison {
  double base_distance = 0.0;
  double candidate_distance = 0.0;
  double base_payoff = 0.0;
  double candidate_payoff = 0.0;
};
// Requires the median-centered candidate to be a spread of the centered base.
SpreadComparison spread_payoff_compare(const VoterDistribution& base,
                                       const VoterDistribution& candidate,
                                       const ReducedPayoff& nu, const Shock& shock);

}  // namespace polarity
