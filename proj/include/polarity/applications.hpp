#pragma once

#include <string>
#include <vector>

#include "polarity/model.hpp"

namespace polarity {

// 2 nu(1/2) - nu(1) - nu(0); positive for strictly concave nu.
double gamma(const ReducedPayoff& nu);

// Equilibrium payoff when the conflict issue carries salience alpha in
// (0, 1] and parties converge on the common-interest issue.
double conflict_premium(const VoterDistribution& dist, const ReducedPayoff& nu,
                        const Shock& shock, double alpha);

struct InfoScenario {
  double alpha = 0.5;
  double pi_q = 0.5;
  double pi_x = 0.5;
  double posterior = 0.5;  // belief that the conflict state favors type R
  void validate() const;
};

struct InfoPlatforms {
  double x_high = 0.0;
  double x_low = 0.0;
  double separation = 0.0;  // negative when the targets swap
};
InfoPlatforms info_platforms(const InfoScenario& scenario, const ReducedPayoff& nu);

// Both voter types agree on the common issue, so revealing its state moves
// both platforms identically and leaves party payoffs unchanged. Payoffs
// here come from the two-issue equilibrium with salience-scaled coordinates.
struct InfoReport {
  InfoPlatforms platforms;
  double gamma = 0.0;
  double payoff_common_revealed = 0.0;
  double payoff_common_unrevealed = 0.0;
  double common_interest_gain = 0.0;
  // Conflict-issue welfare per voter under the posterior, including the
  // belief variance of each voter's bliss point, scaled by alpha.
  double conflict_welfare = 0.0;
};
InfoReport info_report(const InfoScenario& scenario, const ReducedPayoff& nu,
                       const Shock& shock);

double common_interest_welfare_gain(double alpha, double pi_q);

struct IdentityShift {
  VoterDistribution shifted;
  std::vector<bool> unshifted;  // equidistant from both platforms
};
IdentityShift identity_shift(const VoterDistribution& dist, const PlatformPair& pair,
                             double theta);

enum class InvestmentRule { kWhenAmplified, kAlways };

struct DynamicsParams {
  double gap = 1.0;  // |x_L - x_R| between the two rational bliss points
  double theta_high = 0.4;
  double theta_low = 0.2;
  double cost = 0.01;
  double phi = 1.0;
  double gamma = 0.5;
  std::size_t periods = 10;
  InvestmentRule rule = InvestmentRule::kWhenAmplified;
  void validate() const;
};

struct DynamicsRecord {
  std::size_t t = 0;
  double theta = 0.0;
  double voter_gap = 0.0;
  double platform_gap = 0.0;
  double closed_form = 0.0;
  double x_a = 0.0;
  double x_b = 0.0;
};

struct DynamicsTrajectory {
  std::vector<DynamicsRecord> records;  // t = 0..periods
  bool amplified = false;
  double theta = 0.0;  // per-period shift actually applied
  double ratio = 0.0;  // 2 theta gamma
  std::string regime;  // converging, diverging or knife-edge
  double limit = 0.0;  // limiting platform gap; infinite unless converging
  bool eq1d_checked = false;
};

// With `nu`, each period is also re-solved by equilibrium_1d; its gamma must
// match params.gamma.
DynamicsTrajectory dynamics_trajectory(const DynamicsParams& params,
                                       const ReducedPayoff* nu = nullptr);

bool amplification_check(const DynamicsParams& params);

}  // namespace polarity
