#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace polarity {

using Point = Eigen::VectorXd;
using RealFn = std::function<double(double)>;

enum class Party { kA, kB };

const char* to_string(Party party);
Party other(Party party);

inline constexpr double kShareTolerance = 1e-12;
inline constexpr double kTieTolerance = 1e-9;
inline constexpr int kGridPoints = 1001;
inline constexpr double kDerivativeStep = 1e-4;

struct VoterType {
  Point bliss;
  double share = 0.0;
  std::string label;
};

// Finite electorate. Shares sum to one and bliss points are pairwise
// distinct; construction throws PreconditionError otherwise.
class VoterDistribution {
 public:
  explicit VoterDistribution(std::vector<VoterType> types);

  // One-dimensional convenience constructor; labels default to "t<i>".
  static VoterDistribution line(const std::vector<double>& bliss,
                                const std::vector<double>& shares);

  int dimension() const { return static_cast<int>(types_.front().bliss.size()); }
  std::size_t size() const { return types_.size(); }
  const VoterType& operator[](std::size_t i) const { return types_[i]; }
  const std::vector<VoterType>& types() const { return types_; }

  Point mean() const;
  Point coord_max() const;
  Point coord_min() const;
  VoterDistribution translated(const Point& offset) const;

 private:
  std::vector<VoterType> types_;
};

// Uniform popularity shock on [-phi, phi].
class Shock {
 public:
  explicit Shock(double phi);
  double phi() const { return phi_; }
  double density() const { return 1.0 / (2.0 * phi_); }

 private:
  double phi_;
};

// Grid diagnostics for a scalar function on [lo, hi], using central
// differences at interior points of a kGridPoints grid.
struct ShapeReport {
  bool increasing = true;
  bool strictly_concave = true;
  double worst_slope = 0.0;      // smallest first difference quotient
  double worst_curvature = 0.0;  // largest second difference quotient
  std::string diagnostic;
};
ShapeReport check_shape(const RealFn& f, double lo, double hi);

// Vote share to political power. Monotone and constant-sum; an optional
// jump of size jump() sits at s = 1/2, where the value is total()/2.
class PowerMap {
 public:
  PowerMap(std::string name, double total, RealFn fn, double jump = 0.0);
  static PowerMap proportional(double total = 1.0);

  double operator()(double s) const { return fn_(s); }
  double total() const { return total_; }
  double jump() const { return jump_; }
  double left_of_half() const { return 0.5 * (total_ - jump_); }
  double right_of_half() const { return 0.5 * (total_ + jump_); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  double total_;
  RealFn fn_;
  double jump_;
};

// Party utility over power on [0, domain_max]; strictly increasing and
// strictly concave on the validation grid or construction throws.
class PowerUtility {
 public:
  PowerUtility(std::string name, RealFn fn, double domain_max);

  double operator()(double r) const { return fn_(r); }
  double domain_max() const { return domain_max_; }
  const std::string& name() const { return name_; }
  const RealFn& fn() const { return fn_; }

 private:
  std::string name_;
  RealFn fn_;
  double domain_max_;
};

// Catch-up property: nu(s') - nu(s) > nu(1-s) - nu(1-s') for 0 <= s < s' <= 1/2,
// i.e. a trailing party gains more from a share shift than the leader loses.
struct CatchUpReport {
  bool holds = false;
  // Variants at s' = 1/2 where both nu(s') and nu(1-s') take the one-sided
  // limit nu(1/2-) (left) or nu(1/2+) (right). Equal to `holds` without a jump.
  bool left_limit_holds = false;
  bool right_limit_holds = false;
  double worst_margin = 0.0;
  double worst_at = 0.0;
};

struct NuDiagnostics {
  bool increasing = false;
  bool normalized = false;
  bool strictly_concave = false;
  CatchUpReport catch_up;
  std::string diagnostic;
};

// Reduced-form party payoff over vote share, nu = (U o rho - offset) / scale.
class ReducedPayoff {
 public:
  // Direct nu over share with proportional power.
  static ReducedPayoff direct(std::string name, RealFn fn, bool normalize = true);
  static ReducedPayoff composed(const PowerUtility& utility,
                                const PowerMap& power, bool normalize = true);

  double operator()(double s) const;
  double left_of_half() const;
  double right_of_half() const;

  const std::string& provenance() const { return provenance_; }
  const PowerMap& power() const { return power_; }
  const std::optional<PowerUtility>& utility() const { return utility_; }
  const NuDiagnostics& diagnostics() const { return diagnostics_; }
  double offset() const { return offset_; }
  double scale() const { return scale_; }

  // Throw PreconditionError naming `op` when the property is missing.
  void require_normalized(const char* op) const;
  void require_catch_up(const char* op) const;
  void require_strictly_concave(const char* op) const;

 private:
  ReducedPayoff(std::string provenance, RealFn raw, PowerMap power,
                std::optional<PowerUtility> utility, double raw_left,
                double raw_right, bool normalize);

  std::string provenance_;
  RealFn raw_;
  PowerMap power_;
  std::optional<PowerUtility> utility_;
  double raw_left_;
  double raw_right_;
  double offset_ = 0.0;
  double scale_ = 1.0;
  NuDiagnostics diagnostics_;
};

struct PlatformPair {
  Point a;
  Point b;
};

// Quadratic-loss utility difference ||x_B - x_i||^2 - ||x_A - x_i||^2.
double delta(const PlatformPair& pair, const Point& bliss);
double vote_prob(double delta, const Shock& shock);

struct SupportReport {
  bool ok = true;
  double extreme_delta = 0.0;
  std::string diagnostic;
};
SupportReport support_check(const VoterDistribution& dist, const Shock& shock);

// Piecewise-constant A vote share over consecutive shock intervals,
// ordered from -phi to phi. Zero-length intervals are dropped.
struct ShareInterval {
  double share_a;
  double probability;
};
std::vector<ShareInterval> share_lottery(const VoterDistribution& dist,
                                         const Shock& shock,
                                         const PlatformPair& pair);

double expected_payoff(const VoterDistribution& dist, const ReducedPayoff& nu,
                       const Shock& shock, const PlatformPair& pair,
                       Party party);

double mc_payoff(const VoterDistribution& dist, const ReducedPayoff& nu,
                 const Shock& shock, const PlatformPair& pair, Party party,
                 std::uint64_t n_draws, std::uint64_t seed);

}  // namespace polarity
