#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "polarity/applications.hpp"
#include "polarity/equilibrium_1d.hpp"
#include "polarity/equilibrium_kd.hpp"
#include "polarity/error.hpp"
#include "polarity/foundations.hpp"
#include "polarity/scenario.hpp"
#include "polarity/welfare.hpp"

namespace polarity {

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::uint64_t kDefaultMcDraws = 100000;

// Rows of already formatted cells; the header fixes the column order.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += cells[k];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

std::string cell(double v) { return format_number(v); }
std::string cell(bool v) { return v ? "true" : "false"; }
std::string cell(std::size_t v) { return std::to_string(v); }

// Labels are free text; quote when a comma, quote or newline would break the row.
std::string cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

Json point_json(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p[k]);
  return a;
}

std::string label_of(const VoterDistribution& dist, std::size_t i) {
  return dist[i].label.empty() ? fmt::format("t{}", i) : dist[i].label;
}

Json types_json(const VoterDistribution& dist) {
  Json out = Json::array();
  for (std::size_t i = 0; i < dist.size(); ++i)
    out.push_back({{"label", label_of(dist, i)},
                   {"bliss", point_json(dist[i].bliss)},
                   {"share", dist[i].share}});
  return out;
}

Json nu_json(const ReducedPayoff& nu) {
  return {{"provenance", nu.provenance()},
          {"power", nu.power().name()},
          {"rho_bar", nu.power().total()},
          {"jump", nu.power().jump()}};
}

const Json& task_block(const Scenario& sc, const std::string& name) {
  static const Json empty = Json::object();
  return sc.tasks.contains(name) ? sc.tasks.at(name) : empty;
}

double task_number(const Json& task, const char* key, double fallback,
                   const std::string& where) {
  if (!task.contains(key)) return fallback;
  if (!task.at(key).is_number())
    throw SchemaError(fmt::format("{}.{} must be a number", where, key));
  return task.at(key).get<double>();
}

std::uint64_t task_count(const Json& task, const char* key, std::uint64_t fallback,
                         const std::string& where) {
  if (!task.contains(key)) return fallback;
  if (!task.at(key).is_number_unsigned())
    throw SchemaError(fmt::format("{}.{} must be a nonnegative integer", where, key));
  return task.at(key).get<std::uint64_t>();
}

bool task_bool(const Json& task, const char* key, bool fallback, const std::string& where) {
  if (!task.contains(key)) return fallback;
  if (!task.at(key).is_boolean())
    throw SchemaError(fmt::format("{}.{} must be boolean", where, key));
  return task.at(key).get<bool>();
}

Point task_point(const Json& v, int dim, const std::string& where) {
  if (v.is_number() && dim == 1) return Point::Constant(1, v.get<double>());
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    throw SchemaError(fmt::format("{} must be an array of {} numbers", where, dim));
  Point p(dim);
  for (int k = 0; k < dim; ++k) {
    if (!v[k].is_number()) throw SchemaError(fmt::format("{}[{}] must be a number", where, k));
    p[k] = v[k].get<double>();
  }
  return p;
}

PlatformPair task_pair(const Json& v, int dim, const std::string& where) {
  check_fields(v, {"a", "b"}, where);
  if (!v.contains("a") || !v.contains("b"))
    throw SchemaError(where + " needs both 'a' and 'b'");
  return {task_point(v["a"], dim, where + ".a"), task_point(v["b"], dim, where + ".b")};
}

struct Output {
  Json result = Json::object();
  std::vector<std::pair<std::string, Table>> tables;  // file stem, table
};

// --- subcommands ----------------------------------------------------------

Output run_eq1d(const Scenario& sc, std::uint64_t seed) {
  const std::string where = "tasks.eq1d";
  const auto& task = task_block(sc, "eq1d");
  check_fields(task, {"mc_draws"}, where);
  const auto draws = task_count(task, "mc_draws", kDefaultMcDraws, where);
  const auto& dist = sc.distribution;
  const auto eq = equilibrium_1d(dist, sc.nu, sc.shock);

  Output out;
  auto& r = out.result;
  r["x_low"] = eq.x_low;
  r["x_high"] = eq.x_high;
  r["distance"] = eq.distance();
  r["payoff"] = eq.payoff;
  r["x_rn"] = eq.x_rn;
  r["median"] = eq.median;
  r["diverse"] = eq.diverse;
  r["support_ok"] = eq.support_ok;
  r["gamma"] = gamma(sc.nu);
  r["payoff_integrated_a"] = expected_payoff(dist, sc.nu, sc.shock, eq.pair(), Party::kA);
  r["payoff_integrated_b"] = expected_payoff(dist, sc.nu, sc.shock, eq.pair(), Party::kB);
  if (draws > 0)
    r["monte_carlo"] = {
        {"draws", draws},
        {"seed", seed},
        {"payoff_a", mc_payoff(dist, sc.nu, sc.shock, eq.pair(), Party::kA, draws, seed)}};
  r["nu"] = nu_json(sc.nu);

  Table t{{"label", "bliss", "share", "weight_low", "weight_high", "gradient", "effect_a",
           "effect_b"},
          {}};
  Json types = Json::array();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double grad = payoff_gradient_bliss(dist, sc.nu, sc.shock, i, Party::kA);
    const std::string ea = to_string(classify_group(dist, sc.nu, sc.shock, i, Party::kA));
    const std::string eb = to_string(classify_group(dist, sc.nu, sc.shock, i, Party::kB));
    types.push_back({{"label", label_of(dist, i)},
                     {"bliss", dist[i].bliss[0]},
                     {"share", dist[i].share},
                     {"weight_low", eq.weights_low[i]},
                     {"weight_high", eq.weights_high[i]},
                     {"gradient", grad},
                     {"effect_a", ea},
                     {"effect_b", eb}});
    t.add({cell(label_of(dist, i)), cell(dist[i].bliss[0]), cell(dist[i].share),
           cell(eq.weights_low[i]), cell(eq.weights_high[i]), cell(grad), ea, eb});
  }
  r["types"] = std::move(types);
  out.tables.emplace_back("eq1d", std::move(t));
  return out;
}

Json equilibrium_json(const LocalEquilibrium& e, const VoterDistribution& dist,
                      bool preferred) {
  Json ranking = Json::array();
  for (auto i : e.ranking) ranking.push_back(label_of(dist, i));
  return {{"ranking", std::move(ranking)}, {"x_a", point_json(e.pair.a)},
          {"x_b", point_json(e.pair.b)},   {"distance_sq", e.distance_sq},
          {"payoff", e.payoff},            {"interior", e.interior},
          {"preferred", preferred}};
}

std::string ranking_cell(const Ranking& r, const VoterDistribution& dist) {
  std::string s;
  for (std::size_t k = 0; k < r.size(); ++k) s += (k ? ">" : "") + label_of(dist, r[k]);
  return cell(s);
}

// kind,label,share,x_1..x_K rows for types, both platforms and the direction.
Table scatter_table(const VoterDistribution& dist, const PlatformPair* pair,
                    const Point* direction) {
  Table t{{"kind", "label", "share"}, {}};
  for (int k = 0; k < dist.dimension(); ++k) t.header.push_back(fmt::format("x_{}", k + 1));
  auto row = [&](const std::string& kind, const std::string& label, double share,
                 const Point& p) {
    std::vector<std::string> cells{kind, cell(label), cell(share)};
    for (Eigen::Index k = 0; k < p.size(); ++k) cells.push_back(cell(p[k]));
    t.add(std::move(cells));
  };
  for (std::size_t i = 0; i < dist.size(); ++i)
    row("type", label_of(dist, i), dist[i].share, dist[i].bliss);
  if (pair) {
    row("platform", "A", 0.0, pair->a);
    row("platform", "B", 0.0, pair->b);
  }
  if (direction) row("direction", "d", 0.0, *direction);
  return t;
}

Point unit_direction(const PlatformPair& pair) {
  const Point d = pair.a - pair.b;
  return d.norm() > 0.0 ? Point(d / d.norm()) : d;
}

Output run_eqkd(const Scenario& sc, unsigned threads) {
  const std::string where = "tasks.eqkd";
  const auto& task = task_block(sc, "eqkd");
  check_fields(task, {"factorial_cap", "start", "max_iters", "direction"}, where);
  const auto& dist = sc.distribution;
  EnumerationOptions opts;
  opts.factorial_cap = task_count(task, "factorial_cap", kDefaultFactorialCap, where);
  opts.threads = threads;
  const auto max_iters = task_count(task, "max_iters", 100, where);

  Output out;
  auto& r = out.result;
  const bool symmetric = is_symmetric(dist);
  r["symmetric"] = symmetric;
  r["factorial_cap"] = opts.factorial_cap;
  r["dimension"] = dist.dimension();

  std::vector<LocalEquilibrium> inventory;
  std::vector<bool> preferred;
  std::string method;
  if (dist.size() > opts.factorial_cap) {
    method = "fixed-point";
    Point d = Point::Unit(dist.dimension(), 0);
    if (task.contains("direction")) d = task_point(task["direction"], dist.dimension(),
                                                   where + ".direction");
    const auto fp = ranking_fixed_point(dist, sc.nu, sc.shock, d, max_iters);
    r["fixed_point"] = {{"iterations", fp.iterations}, {"cycled", fp.cycled},
                        {"found", fp.equilibrium.has_value()}};
    if (fp.equilibrium) {
      inventory.push_back(*fp.equilibrium);
      preferred.push_back(false);
    }
  } else if (symmetric) {
    method = "party-preferred";
    const auto nash = party_preferred(dist, sc.nu, sc.shock, opts);
    inventory = nash.inventory;
    for (const auto& e : inventory)
      preferred.push_back(std::any_of(nash.preferred.begin(), nash.preferred.end(),
                                      [&](const LocalEquilibrium& p) {
                                        return p.ranking == e.ranking;
                                      }));
    r["max_distance_sq"] = nash.max_distance_sq;
  } else {
    method = "enumerate";
    inventory = enumerate_local_equilibria(dist, sc.nu, sc.shock, opts);
    preferred.assign(inventory.size(), false);
  }
  r["method"] = method;

  Table t{{"index", "ranking", "distance_sq", "payoff", "preferred", "interior"}, {}};
  for (int k = 0; k < dist.dimension(); ++k) t.header.push_back(fmt::format("x_a_{}", k + 1));
  for (int k = 0; k < dist.dimension(); ++k) t.header.push_back(fmt::format("x_b_{}", k + 1));
  Json list = Json::array();
  const LocalEquilibrium* first_preferred = nullptr;
  for (std::size_t j = 0; j < inventory.size(); ++j) {
    const auto& e = inventory[j];
    if (preferred[j] && !first_preferred) first_preferred = &e;
    list.push_back(equilibrium_json(e, dist, preferred[j]));
    std::vector<std::string> row{cell(j), ranking_cell(e.ranking, dist), cell(e.distance_sq),
                                 cell(e.payoff), cell(static_cast<bool>(preferred[j])),
                                 cell(e.interior)};
    for (Eigen::Index k = 0; k < e.pair.a.size(); ++k) row.push_back(cell(e.pair.a[k]));
    for (Eigen::Index k = 0; k < e.pair.b.size(); ++k) row.push_back(cell(e.pair.b[k]));
    t.add(std::move(row));
  }
  r["local_equilibria"] = std::move(list);

  std::optional<Point> direction;
  if (first_preferred) {
    direction = unit_direction(first_preferred->pair);
    r["direction"] = point_json(*direction);
  } else {
    r["direction"] = nullptr;
  }

  if (task.contains("start")) {
    const auto start = task_pair(task["start"], dist.dimension(), where + ".start");
    const auto br = br_dynamics(start, dist, sc.nu, sc.shock, max_iters, opts);
    Json steps = Json::array();
    for (const auto& s : br.steps)
      steps.push_back({{"x_a", point_json(s.a)}, {"x_b", point_json(s.b)}});
    r["dynamics"] = {{"converged", br.converged},
                     {"symmetric", br.symmetric},
                     {"monotone", br.monotone},
                     {"warning", br.warning},
                     {"terminal", {{"x_a", point_json(br.terminal.a)},
                                   {"x_b", point_json(br.terminal.b)}}},
                     {"steps", std::move(steps)}};
  }

  out.tables.emplace_back("eqkd", std::move(t));
  out.tables.emplace_back(
      "eqkd_scatter",
      scatter_table(dist, first_preferred ? &first_preferred->pair : nullptr,
                    direction ? &*direction : nullptr));
  return out;
}

Output run_classify(const Scenario& sc) {
  check_fields(task_block(sc, "classify"), {}, "tasks.classify");
  const auto& dist = sc.distribution;
  const auto eq = equilibrium_1d(dist, sc.nu, sc.shock);
  Output out;
  auto& r = out.result;
  r["x_low"] = eq.x_low;
  r["x_high"] = eq.x_high;
  r["median"] = eq.median;
  Table t{{"label", "bliss", "share", "gradient", "effect_a", "effect_b"}, {}};
  Json groups = Json::array();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double grad = payoff_gradient_bliss(dist, sc.nu, sc.shock, i, Party::kA);
    const std::string ea = to_string(classify_group(dist, sc.nu, sc.shock, i, Party::kA));
    const std::string eb = to_string(classify_group(dist, sc.nu, sc.shock, i, Party::kB));
    groups.push_back({{"label", label_of(dist, i)},
                      {"bliss", dist[i].bliss[0]},
                      {"share", dist[i].share},
                      {"gradient", grad},
                      {"effect_a", ea},
                      {"effect_b", eb}});
    t.add({cell(label_of(dist, i)), cell(dist[i].bliss[0]), cell(dist[i].share), cell(grad),
           ea, eb});
  }
  r["groups"] = std::move(groups);
  out.tables.emplace_back("classify", std::move(t));
  return out;
}

// Moves types strictly above the center by +amount along d and those below
// by -amount; types at the center stay.
VoterDistribution push_outward(const VoterDistribution& dist, const Point& d, double center,
                               double amount) {
  if (!(amount > 0.0)) throw PreconditionError("outward amount must be positive");
  auto types = dist.types();
  for (auto& t : types) {
    const double proj = t.bliss.dot(d);
    if (proj > center) t.bliss += amount * d;
    if (proj < center) t.bliss -= amount * d;
  }
  return VoterDistribution(std::move(types));
}

Output run_spread(const Scenario& sc) {
  const std::string where = "tasks.spread";
  const auto& task = task_block(sc, "spread");
  check_fields(task, {"candidate", "outward"}, where);
  if (task.contains("candidate") == task.contains("outward"))
    throw SchemaError(where + " needs exactly one of 'candidate' or 'outward'");
  const auto& base = sc.distribution;
  if (base.dimension() != 1) throw PreconditionError("spread needs K = 1");
  const auto candidate =
      task.contains("candidate")
          ? parse_distribution(task["candidate"], where + ".candidate")
          : push_outward(base, Point::Ones(1), median_type(base),
                         task_number(task, "outward", 0.0, where));
  const bool spread = is_spread(center_at_median(base), center_at_median(candidate));
  if (!spread)
    throw PreconditionError("candidate is not a spread of the base around their medians");
  const auto cmp = spread_payoff_compare(base, candidate, sc.nu, sc.shock);
  const auto eb = equilibrium_1d(base, sc.nu, sc.shock);
  const auto ec = equilibrium_1d(candidate, sc.nu, sc.shock);

  Output out;
  auto& r = out.result;
  r["is_spread"] = spread;
  auto side = [](const Equilibrium1D& e, double distance, double payoff) {
    return Json{{"median", e.median}, {"x_low", e.x_low},     {"x_high", e.x_high},
                {"distance", distance}, {"payoff", payoff}};
  };
  r["base"] = side(eb, cmp.base_distance, cmp.base_payoff);
  r["candidate"] = side(ec, cmp.candidate_distance, cmp.candidate_payoff);
  r["candidate"]["types"] = types_json(candidate);
  r["payoff_increase"] = cmp.candidate_payoff - cmp.base_payoff;

  Table t{{"role", "median", "x_low", "x_high", "distance", "payoff"}, {}};
  t.add({"base", cell(eb.median), cell(eb.x_low), cell(eb.x_high), cell(cmp.base_distance),
         cell(cmp.base_payoff)});
  t.add({"candidate", cell(ec.median), cell(ec.x_low), cell(ec.x_high),
         cell(cmp.candidate_distance), cell(cmp.candidate_payoff)});
  out.tables.emplace_back("spread", std::move(t));
  return out;
}

// Same positions and masses up to the merge tolerance of project_onto.
bool same_marginal(const VoterDistribution& a, const VoterDistribution& b) {
  if (a.size() != b.size()) return false;
  auto sorted = [](const VoterDistribution& d) {
    std::vector<std::pair<double, double>> v;
    for (const auto& t : d.types()) v.emplace_back(t.bliss[0], t.share);
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto sa = sorted(a);
  const auto sb = sorted(b);
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (std::abs(sa[i].first - sb[i].first) > 1e-12 * std::max(1.0, std::abs(sa[i].first)) ||
        std::abs(sa[i].second - sb[i].second) > kShareTolerance)
      return false;
  return true;
}

Output run_dspread(const Scenario& sc, unsigned threads) {
  const std::string where = "tasks.dspread";
  const auto& task = task_block(sc, "dspread");
  check_fields(task, {"candidate", "recipe", "outward", "factorial_cap"}, where);
  const int modes = task.contains("candidate") + task.contains("recipe") +
                    task.contains("outward");
  if (modes != 1)
    throw SchemaError(where + " needs exactly one of 'candidate', 'recipe' or 'outward'");
  const auto& base = sc.distribution;
  if (!is_symmetric(base)) throw PreconditionError("dspread needs a symmetric base");
  EnumerationOptions opts;
  opts.factorial_cap = task_count(task, "factorial_cap", kDefaultFactorialCap, where);
  opts.threads = threads;

  const auto nash = party_preferred(base, sc.nu, sc.shock, opts);
  const Point d = unit_direction(nash.preferred.front().pair);
  std::string recipe = "explicit";
  std::optional<VoterDistribution> candidate;
  if (task.contains("candidate")) {
    candidate = parse_distribution(task["candidate"], where + ".candidate");
  } else if (task.contains("recipe")) {
    if (task["recipe"] != "coherence-swap")
      throw SchemaError(where + ".recipe must be \"coherence-swap\"");
    recipe = "coherence-swap";
    candidate = coherence_swap(base, d);
  } else {
    recipe = "outward";
    candidate = push_outward(base, d, base.mean().dot(d),
                             task_number(task, "outward", 0.0, where));
  }
  if (candidate->dimension() != base.dimension())
    throw SchemaError(where + ".candidate dimension differs from the base");

  const auto cmp = d_spread_payoff_compare(base, *candidate, sc.nu, sc.shock, opts);
  const auto cand_nash = party_preferred(*candidate, sc.nu, sc.shock, opts);

  Output out;
  auto& r = out.result;
  r["recipe"] = recipe;
  r["direction"] = point_json(cmp.direction);
  r["is_d_spread"] = true;
  r["base"] = {{"distance_sq", cmp.base_distance_sq}, {"payoff", cmp.base_payoff}};
  r["candidate"] = {{"distance_sq", cmp.candidate_distance_sq},
                    {"payoff", cmp.candidate_payoff},
                    {"types", types_json(*candidate)}};
  Json marginals = Json::array();
  for (int k = 0; k < base.dimension(); ++k) {
    const Point e = Point::Unit(base.dimension(), k);
    const auto mb = project_onto(base, e);
    const auto mc = project_onto(*candidate, e);
    marginals.push_back({{"dimension", k + 1},
                         {"unchanged", same_marginal(mb, mc)},
                         {"spread", is_spread(mb, mc)}});
  }
  r["marginals"] = std::move(marginals);

  Table t{{"role", "distance_sq", "payoff"}, {}};
  t.add({"base", cell(cmp.base_distance_sq), cell(cmp.base_payoff)});
  t.add({"candidate", cell(cmp.candidate_distance_sq), cell(cmp.candidate_payoff)});
  out.tables.emplace_back("dspread", std::move(t));
  out.tables.emplace_back("scatter_base",
                          scatter_table(base, &nash.preferred.front().pair, &cmp.direction));
  const Point cand_d = unit_direction(cand_nash.preferred.front().pair);
  out.tables.emplace_back(
      "scatter_candidate",
      scatter_table(*candidate, &cand_nash.preferred.front().pair, &cand_d));
  return out;
}

Output run_welfare(const Scenario& sc) {
  const std::string where = "tasks.welfare";
  const auto& task = task_block(sc, "welfare");
  check_fields(task, {"platforms"}, where);
  const auto& dist = sc.distribution;
  const auto pair = task.contains("platforms")
                        ? task_pair(task["platforms"], dist.dimension(), where + ".platforms")
                        : equilibrium_1d(dist, sc.nu, sc.shock).pair();
  const auto lottery = policy_lottery(pair, dist, sc.nu.power(), sc.shock);
  const auto w = welfare_decomposition(lottery, dist);

  Output out;
  auto& r = out.result;
  r["x_a"] = lottery.x_a;
  r["x_b"] = lottery.x_b;
  r["mean"] = w.mean;
  r["variance"] = w.variance;
  r["x_opt"] = w.x_opt;
  r["w_opt"] = w.w_opt;
  r["bias_sq"] = w.bias_sq;
  r["w_star"] = w.w_star;
  r["w_direct"] = w.w_direct;
  Json outcomes = Json::array();
  Table t{{"policy", "lambda", "probability"}, {}};
  for (const auto& o : lottery.outcomes) {
    outcomes.push_back({{"policy", o.policy}, {"lambda", o.lambda},
                        {"probability", o.probability}});
    t.add({cell(o.policy), cell(o.lambda), cell(o.probability)});
  }
  r["outcomes"] = std::move(outcomes);
  out.tables.emplace_back("welfare", std::move(t));
  return out;
}

Output run_premium_sweep(const Scenario& sc, unsigned threads) {
  const std::string where = "tasks.premium-sweep";
  const auto& task = task_block(sc, "premium-sweep");
  check_fields(task, {"premiums"}, where);
  if (!sc.nu.utility())
    throw PreconditionError("premium-sweep needs a nu block with an explicit utility");
  const double rho_bar = sc.nu.power().total();
  std::vector<double> premiums{0.0, 0.25 * rho_bar, 0.5 * rho_bar, 0.9 * rho_bar,
                               0.99 * rho_bar, rho_bar * kMaxPremiumFraction};
  if (task.contains("premiums")) {
    const auto& list = task["premiums"];
    if (!list.is_array() || list.empty())
      throw SchemaError(where + ".premiums must be a non-empty array");
    premiums.clear();
    for (const auto& v : list) {
      if (!v.is_number()) throw SchemaError(where + ".premiums entries must be numbers");
      premiums.push_back(v.get<double>());
    }
  }
  const auto sweep = premium_sweep(sc.distribution, *sc.nu.utility(), rho_bar, premiums,
                                   sc.shock, threads);

  Output out;
  auto& r = out.result;
  r["rho_bar"] = rho_bar;
  r["median"] = sweep.median;
  r["median_mass"] = sweep.median_mass;
  r["x_opt"] = sweep.x_opt;
  r["w_opt"] = sweep.w_opt;
  r["limit_welfare"] = sweep.limit_welfare;
  r["limit_checked"] = sweep.limit_checked;
  r["warnings"] = sweep.warnings;
  Table t{{"rho_m", "x_low", "x_high", "distance", "mean", "variance", "bias_sq", "welfare",
           "median_weight_high", "median_weight_low"},
          {}};
  Json rows = Json::array();
  for (const auto& row : sweep.rows) {
    rows.push_back({{"rho_m", row.rho_m},
                    {"x_low", row.x_low},
                    {"x_high", row.x_high},
                    {"distance", row.distance},
                    {"mean", row.mean},
                    {"variance", row.variance},
                    {"bias_sq", row.bias_sq},
                    {"welfare", row.welfare},
                    {"median_weight_high", row.median_weight_high},
                    {"median_weight_low", row.median_weight_low}});
    t.add({cell(row.rho_m), cell(row.x_low), cell(row.x_high), cell(row.distance),
           cell(row.mean), cell(row.variance), cell(row.bias_sq), cell(row.welfare),
           cell(row.median_weight_high), cell(row.median_weight_low)});
  }
  r["rows"] = std::move(rows);
  out.tables.emplace_back("premium-sweep", std::move(t));
  return out;
}

Output run_info(const Scenario& sc) {
  const std::string where = "tasks.info";
  const auto& task = task_block(sc, "info");
  check_fields(task, {"alpha", "pi_q", "pi_x", "posterior"}, where);
  InfoScenario info;
  info.alpha = task_number(task, "alpha", info.alpha, where);
  info.pi_q = task_number(task, "pi_q", info.pi_q, where);
  info.pi_x = task_number(task, "pi_x", info.pi_x, where);
  info.posterior = task_number(task, "posterior", info.pi_x, where);
  const auto rep = info_report(info, sc.nu, sc.shock);

  Output out;
  auto& r = out.result;
  r["alpha"] = info.alpha;
  r["pi_q"] = info.pi_q;
  r["pi_x"] = info.pi_x;
  r["posterior"] = info.posterior;
  r["gamma"] = rep.gamma;
  r["x_high"] = rep.platforms.x_high;
  r["x_low"] = rep.platforms.x_low;
  r["separation"] = rep.platforms.separation;
  r["payoff_common_revealed"] = rep.payoff_common_revealed;
  r["payoff_common_unrevealed"] = rep.payoff_common_unrevealed;
  r["common_interest_gain"] = rep.common_interest_gain;
  r["conflict_welfare"] = rep.conflict_welfare;

  Table t{{"posterior", "x_high", "x_low", "separation"}, {}};
  constexpr int kPosteriorSteps = 20;
  for (int k = 0; k <= kPosteriorSteps; ++k) {
    InfoScenario at = info;
    at.posterior = static_cast<double>(k) / kPosteriorSteps;
    const auto p = info_platforms(at, sc.nu);
    t.add({cell(at.posterior), cell(p.x_high), cell(p.x_low), cell(p.separation)});
  }
  out.tables.emplace_back("info", std::move(t));
  return out;
}

Output run_dynamics(const Scenario& sc) {
  const std::string where = "tasks.dynamics";
  const auto& task = task_block(sc, "dynamics");
  check_fields(task, {"theta_high", "theta_low", "cost", "periods", "gamma", "investment",
                      "cross_check"},
               where);
  const auto& dist = sc.distribution;
  if (dist.dimension() != 1 || dist.size() != 2)
    throw PreconditionError("dynamics needs two types on a line");
  DynamicsParams p;
  p.gap = std::abs(dist[1].bliss[0] - dist[0].bliss[0]);
  p.phi = sc.shock.phi();
  p.theta_high = task_number(task, "theta_high", p.theta_high, where);
  p.theta_low = task_number(task, "theta_low", p.theta_low, where);
  p.cost = task_number(task, "cost", p.cost, where);
  p.periods = task_count(task, "periods", p.periods, where);
  const bool own_gamma = task.contains("gamma");
  p.gamma = own_gamma ? task_number(task, "gamma", 0.0, where) : gamma(sc.nu);
  if (task.contains("investment")) {
    const auto& v = task["investment"];
    if (v == "when-amplified") {
      p.rule = InvestmentRule::kWhenAmplified;
    } else if (v == "always") {
      p.rule = InvestmentRule::kAlways;
    } else {
      throw SchemaError(where + ".investment must be \"when-amplified\" or \"always\"");
    }
  }
  const bool cross = task_bool(task, "cross_check", !own_gamma, where);
  const auto traj = dynamics_trajectory(p, cross ? &sc.nu : nullptr);

  Output out;
  auto& r = out.result;
  r["gap"] = p.gap;
  r["gamma"] = p.gamma;
  r["theta_high"] = p.theta_high;
  r["theta_low"] = p.theta_low;
  r["cost"] = p.cost;
  r["phi"] = p.phi;
  r["investment"] = p.rule == InvestmentRule::kAlways ? "always" : "when-amplified";
  r["amplified"] = traj.amplified;
  r["theta_applied"] = traj.theta;
  r["ratio"] = traj.ratio;
  r["regime"] = traj.regime;
  r["limit"] = traj.limit;
  r["eq1d_checked"] = traj.eq1d_checked;
  Table t{{"t", "theta", "voter_gap", "platform_gap", "closed_form", "x_a", "x_b"}, {}};
  Json records = Json::array();
  for (const auto& rec : traj.records) {
    records.push_back({{"t", rec.t},
                       {"theta", rec.theta},
                       {"voter_gap", rec.voter_gap},
                       {"platform_gap", rec.platform_gap},
                       {"closed_form", rec.closed_form},
                       {"x_a", rec.x_a},
                       {"x_b", rec.x_b}});
    t.add({cell(rec.t), cell(rec.theta), cell(rec.voter_gap), cell(rec.platform_gap),
           cell(rec.closed_form), cell(rec.x_a), cell(rec.x_b)});
  }
  r["records"] = std::move(records);
  out.tables.emplace_back("dynamics", std::move(t));
  return out;
}

Output run_validate(const Scenario& sc, std::string& failure) {
  check_fields(task_block(sc, "validate"), {}, "tasks.validate");
  const auto& dist = sc.distribution;
  const auto& diag = sc.nu.diagnostics();
  const auto support = support_check(dist, sc.shock);

  Output out;
  auto& r = out.result;
  r["distribution"] = {{"dimension", dist.dimension()}, {"types", types_json(dist)}};
  r["support"] = {{"ok", support.ok},
                  {"extreme_delta", support.extreme_delta},
                  {"diagnostic", support.diagnostic}};
  r["nu"] = nu_json(sc.nu);
  r["nu"]["increasing"] = diag.increasing;
  r["nu"]["normalized"] = diag.normalized;
  r["nu"]["strictly_concave"] = diag.strictly_concave;
  r["nu"]["catch_up"] = {{"holds", diag.catch_up.holds},
                        {"left_limit_holds", diag.catch_up.left_limit_holds},
                        {"right_limit_holds", diag.catch_up.right_limit_holds},
                        {"worst_margin", diag.catch_up.worst_margin},
                        {"worst_at", diag.catch_up.worst_at}};
  r["nu"]["gamma"] = gamma(sc.nu);
  r["nu"]["diagnostic"] = diag.diagnostic;

  std::vector<std::pair<std::string, std::pair<bool, std::string>>> checks{
      {"nu_increasing", {diag.increasing, ""}},
      {"nu_normalized", {diag.normalized, ""}},
      {"nu_catch_up",
       {diag.catch_up.holds,
        diag.catch_up.holds
            ? ""
            : fmt::format("nu(s)+nu(1-s) not increasing on [0,1/2]; worst margin {} at s={}",
                          format_number(diag.catch_up.worst_margin),
                          format_number(diag.catch_up.worst_at))}},
      {"nu_strictly_concave", {diag.strictly_concave, ""}},
      {"support", {support.ok, support.diagnostic}}};
  bool ok = true;
  Table t{{"check", "passed", "detail"}, {}};
  for (const auto& [name, res] : checks) {
    t.add({name, cell(res.first), cell(res.second)});
    // Strict concavity only gates multidimensional solving, not validity.
    if (!res.first && name != "nu_strictly_concave") {
      ok = false;
      if (!failure.empty()) failure += "; ";
      failure += res.second.empty() ? name + " failed" : name + ": " + res.second;
    }
  }
  r["assumptions_ok"] = ok;
  out.tables.emplace_back("validate", std::move(t));
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f << content;
  if (!f) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

void dump(std::string& out, const Json& v, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  if (v.is_object()) {
    if (v.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    std::size_t k = 0;
    for (const auto& [key, val] : v.items()) {
      out += inner + Json(key).dump() + ": ";
      dump(out, val, indent + 1);
      out += ++k < v.size() ? ",\n" : "\n";
    }
    out += pad + "}";
  } else if (v.is_array()) {
    if (v.empty()) {
      out += "[]";
      return;
    }
    const bool flat = std::none_of(v.begin(), v.end(), [](const Json& e) {
      return e.is_object() || e.is_array();
    });
    if (flat) {
      out += "[";
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ", ";
        dump(out, v[k], indent + 1);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t k = 0; k < v.size(); ++k) {
      out += inner;
      dump(out, v[k], indent + 1);
      out += k + 1 < v.size() ? ",\n" : "\n";
    }
    out += pad + "]";
  } else if (v.is_number_float()) {
    const double d = v.get<double>();
    out += std::isfinite(d) ? format_number(d) : "null";
  } else {
    out += v.dump();
  }
}

const std::map<std::string, std::vector<const char*>>& required_keys() {
  static const std::map<std::string, std::vector<const char*>> keys{
      {"eq1d", {"x_low", "x_high", "distance", "payoff", "x_rn", "median", "types"}},
      {"eqkd", {"symmetric", "method", "local_equilibria", "direction"}},
      {"classify", {"x_low", "x_high", "median", "groups"}},
      {"spread", {"is_spread", "base", "candidate", "payoff_increase"}},
      {"dspread", {"recipe", "direction", "base", "candidate", "marginals"}},
      {"welfare", {"x_a", "x_b", "mean", "variance", "bias_sq", "w_star", "outcomes"}},
      {"premium-sweep", {"rho_bar", "median", "limit_welfare", "rows"}},
      {"info", {"x_high", "x_low", "separation", "payoff_common_revealed", "conflict_welfare"}},
      {"dynamics", {"gamma", "amplified", "ratio", "regime", "records"}},
      {"validate", {"support", "nu", "assumptions_ok"}},
  };
  return keys;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.17g}", v);
}

std::string format_json(const Json& value) {
  std::string out;
  dump(out, value, 0);
  out += '\n';
  return out;
}

void validate_record(const Json& record) {
  if (!record.is_object()) throw SchemaError("record must be an object");
  check_fields(record, {"schema_version", "subcommand", "seed", "result"}, "record");
  for (const char* k : {"schema_version", "subcommand", "seed", "result"})
    if (!record.contains(k)) throw SchemaError(fmt::format("record is missing '{}'", k));
  if (record["schema_version"] != kSchemaVersion)
    throw SchemaError("unsupported schema_version");
  if (!record["subcommand"].is_string()) throw SchemaError("subcommand must be a string");
  const auto sub = record["subcommand"].get<std::string>();
  const auto it = required_keys().find(sub);
  if (it == required_keys().end())
    throw SchemaError(fmt::format("unknown subcommand '{}'", sub));
  if (!record["seed"].is_number_unsigned()) throw SchemaError("seed must be unsigned");
  const auto& result = record["result"];
  if (!result.is_object()) throw SchemaError("result must be an object");
  for (const char* k : it->second)
    if (!result.contains(k))
      throw SchemaError(fmt::format("{} result is missing '{}'", sub, k));
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return 2;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  if (dynamic_cast<const ConsistencyError*>(&e)) return 4;
  return 1;
}

RunResult run(const RunOptions& options, const Scenario& scenario) {
  const auto& sub = options.subcommand;
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), sub) == names.end())
    throw SchemaError(fmt::format("unknown subcommand '{}'", sub));
  const std::string format = options.format.empty() ? scenario.format : options.format;
  if (format != "json" && format != "csv" && format != "both")
    throw SchemaError("format must be json, csv or both");
  const std::uint64_t seed = options.seed.value_or(scenario.seed);
  const unsigned threads = std::max(1u, options.threads);

  RunResult res;
  std::string failure;
  Output out;
  if (sub == "eq1d") out = run_eq1d(scenario, seed);
  else if (sub == "eqkd") out = run_eqkd(scenario, threads);
  else if (sub == "classify") out = run_classify(scenario);
  else if (sub == "spread") out = run_spread(scenario);
  else if (sub == "dspread") out = run_dspread(scenario, threads);
  else if (sub == "welfare") out = run_welfare(scenario);
  else if (sub == "premium-sweep") out = run_premium_sweep(scenario, threads);
  else if (sub == "info") out = run_info(scenario);
  else if (sub == "dynamics") out = run_dynamics(scenario);
  else out = run_validate(scenario, failure);

  Json record = Json::object();
  record["schema_version"] = kSchemaVersion;
  record["subcommand"] = sub;
  record["seed"] = seed;
  record["result"] = std::move(out.result);
  validate_record(record);

  const std::filesystem::path dir =
      !options.out_dir.empty()
          ? options.out_dir
          : (!scenario.output_dir.empty() ? scenario.output_dir : std::string("out"));
  std::filesystem::create_directories(dir);
  if (format != "csv") {
    const auto path = dir / (sub + ".json");
    write_file(path, format_json(record));
    res.files.push_back(path.string());
  }
  if (format != "json") {
    for (const auto& [stem, table] : out.tables) {
      const auto path = dir / (stem + ".csv");
      write_file(path, table.str());
      res.files.push_back(path.string());
    }
  }
  if (!failure.empty()) {
    res.exit_code = 3;
    res.message = failure;
  }
  return res;
}

}  // namespace polarity
