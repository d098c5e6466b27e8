#pragma once

#include <string>
#include <vector>

#include "polarity/model.hpp"

namespace polarity {

// Implemented policy X* = x_B + Lambda (x_A - x_B), Lambda = rho(s_A)/rho_bar.
struct PolicyLottery {
  struct Outcome {
    double policy;
    double lambda;
    double probability;
  };
  std::vector<Outcome> outcomes;  // in shock order, zero-probability dropped
  double x_a = 0.0;
  double x_b = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

PolicyLottery policy_lottery(const PlatformPair& pair, const VoterDistribution& dist,
                             const PowerMap& power, const Shock& shock);

struct WelfareReport {
  double w_star = 0.0;
  double w_opt = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
  double x_opt = 0.0;
  double mean = 0.0;
  double w_direct = 0.0;  // sum over outcomes of realized welfare
};

// Throws ConsistencyError if the three-term identity and the direct
// expectation differ by more than 1e-10.
WelfareReport welfare_decomposition(const PolicyLottery& lottery,
                                    const VoterDistribution& dist);

struct PremiumRow {
  double rho_m = 0.0;
  double x_low = 0.0;
  double x_high = 0.0;
  double distance = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double bias_sq = 0.0;
  double welfare = 0.0;
  double median_weight_high = 0.0;
  double median_weight_low = 0.0;
};

struct PremiumSweep {
  std::vector<PremiumRow> rows;
  double median = 0.0;
  double median_mass = 0.0;
  double x_opt = 0.0;
  double w_opt = 0.0;
  double limit_welfare = 0.0;  // W(x^o) - (x_m - x^o)^2
  bool limit_checked = false;
  std::vector<std::string> warnings;
};

inline constexpr double kMaxPremiumFraction = 1.0 - 1e-6;

// Premiums must lie in [0, rho_bar * kMaxPremiumFraction]. Median weights
// must be nondecreasing along ascending premiums or ConsistencyError.
PremiumSweep premium_sweep(const VoterDistribution& dist, const PowerUtility& utility,
                           double rho_bar, const std::vector<double>& premiums,
                           const Shock& shock, unsigned threads = 1);

}  // namespace polarity
