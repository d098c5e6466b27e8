#pragma once

#include <string>
#include <vector>

#include "polarity/model.hpp"

namespace polarity {

// Affiliate placements of value q(k), filled from the most valuable one.
struct PlacementProfile {
  RealFn value;            // strictly decreasing on [0, capacity]
  double capacity = 1.0;   // >= rho_bar
  double rho_bar = 1.0;
};

// Power shared equally among `insiders` party members with utility u.
struct RentSharingProfile {
  RealFn insider_utility;
  int insiders = 1;
  double rho_bar = 1.0;
  std::string name = "u";
};

// Governance cost c with c' > 0, c'' > 0.
struct CostProfile {
  RealFn cost;
  double rho_bar = 1.0;
};

inline constexpr int kSimpsonPanels = 2048;

// Composite Simpson rule. Error is at most (b-a) h^4 max|f''''| / 180 with
// h = (b-a)/panels; exact for cubics.
double simpson(const RealFn& f, double a, double b, int panels = kSimpsonPanels);

PowerUtility u_from_placements(const PlacementProfile& p);
PowerUtility u_from_rent_sharing(const RentSharingProfile& r);
PowerUtility u_from_convex_cost(const CostProfile& c);

// rho(s) = (rho_bar - premium) s below 1/2, rho_bar/2 at 1/2, and
// (rho_bar - premium) s + premium above.
PowerMap majority_premium_power(double rho_bar, double premium);

ReducedPayoff compose_nu(const PowerUtility& utility, const PowerMap& power,
                         bool normalize = true);

// "quadratic": U(r) = 2r - r^2 with rho(s) = s, so nu(s) = 2s - s^2.
// "sqrt-sharing": four insiders with u = sqrt, so nu(s) = sqrt(s).
// "placement-linear": q(k) = 1 - k/2, so U(r) = r - r^2/4.
// "linear": nu(s) = s; fails the catch-up check by construction.
ReducedPayoff nu_preset(const std::string& name);
const std::vector<std::string>& nu_preset_names();

}  // namespace polarity
