#include "polarity/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "polarity/error.hpp"
#include "polarity/foundations.hpp"

namespace polarity {

void check_fields(const Json& obj, std::initializer_list<const char*> keys,
                  const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw SchemaError(fmt::format("unknown field '{}' in {}", k, where));
  }
}

namespace {

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw SchemaError(fmt::format("{} is missing '{}'", where, key));
  return obj.at(key);
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + " must be a number");
  return v.get<double>();
}

double number_or(const Json& obj, const char* key, double fallback,
                 const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

Point vector_of(const Json& v, const std::string& where) {
  if (v.is_number()) return Point::Constant(1, v.get<double>());
  if (!v.is_array() || v.empty())
    throw SchemaError(where + " must be a number or a non-empty array of numbers");
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k)
    p[static_cast<Eigen::Index>(k)] = number(v[k], fmt::format("{}[{}]", where, k));
  return p;
}

PowerUtility parse_utility(const Json& block, double rho_bar) {
  const std::string where = "nu.utility";
  if (!block.is_object()) throw SchemaError(where + " must be an object");
  const auto& kind_v = require(block, "kind", where);
  if (!kind_v.is_string()) throw SchemaError(where + ".kind must be a string");
  const auto kind = kind_v.get<std::string>();
  if (kind == "quadratic") {
    check_fields(block, {"kind"}, where);
    return PowerUtility("2r - r^2", [](double r) { return 2.0 * r - r * r; }, rho_bar);
  }
  if (kind == "placements") {
    check_fields(block, {"kind", "intercept", "slope", "capacity"}, where);
    const double a = number(require(block, "intercept", where), where + ".intercept");
    const double b = number(require(block, "slope", where), where + ".slope");
    const double cap = number_or(block, "capacity", rho_bar, where);
    return u_from_placements({[a, b](double k) { return a - b * k; }, cap, rho_bar});
  }
  if (kind == "rent-sharing") {
    check_fields(block, {"kind", "insiders", "insider_utility"}, where);
    const auto& n = require(block, "insiders", where);
    if (!n.is_number_integer()) throw SchemaError(where + ".insiders must be an integer");
    const auto& u = require(block, "insider_utility", where);
    if (!u.is_string()) throw SchemaError(where + ".insider_utility must be a string");
    RealFn fn;
    if (u == "sqrt") {
      fn = [](double z) { return std::sqrt(z); };
    } else if (u == "log1p") {
      fn = [](double z) { return std::log1p(z); };
    } else {
      throw SchemaError(fmt::format("unknown insider_utility '{}'", u.get<std::string>()));
    }
    return u_from_rent_sharing({fn, n.get<int>(), rho_bar, u.get<std::string>()});
  }
  if (kind == "convex-cost") {
    check_fields(block, {"kind", "coefficient", "exponent"}, where);
    const double a = number(require(block, "coefficient", where), where + ".coefficient");
    const double p = number(require(block, "exponent", where), where + ".exponent");
    return u_from_convex_cost({[a, p](double r) { return a * std::pow(r, p); }, rho_bar});
  }
  throw SchemaError(fmt::format("unknown utility kind '{}'", kind));
}

}  // namespace

VoterDistribution parse_distribution(const Json& block, const std::string& where) {
  check_fields(block, {"dimension", "types"}, where);
  const auto& list = require(block, "types", where);
  if (!list.is_array() || list.empty())
    throw SchemaError(where + ".types must be a non-empty array");
  std::vector<VoterType> types;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string at = fmt::format("{}.types[{}]", where, i);
    check_fields(list[i], {"bliss", "share", "label"}, at);
    VoterType t;
    t.bliss = vector_of(require(list[i], "bliss", at), at + ".bliss");
    t.share = number(require(list[i], "share", at), at + ".share");
    if (list[i].contains("label")) {
      if (!list[i]["label"].is_string()) throw SchemaError(at + ".label must be a string");
      t.label = list[i]["label"].get<std::string>();
    }
    types.push_back(std::move(t));
  }
  if (block.contains("dimension")) {
    const auto& k = block["dimension"];
    if (!k.is_number_integer() || k.get<long>() < 1)
      throw SchemaError(where + ".dimension must be a positive integer");
    for (const auto& t : types)
      if (t.bliss.size() != k.get<long>())
        throw SchemaError(fmt::format("{}: bliss of '{}' has dimension {}, declared {}",
                                      where, t.label, t.bliss.size(), k.get<long>()));
  }
  return VoterDistribution(std::move(types));
}

ReducedPayoff parse_nu(const Json& block) {
  if (!block.is_object()) throw SchemaError("nu must be an object");
  if (block.contains("preset")) {
    check_fields(block, {"preset"}, "nu");
    if (!block["preset"].is_string()) throw SchemaError("nu.preset must be a string");
    const auto name = block["preset"].get<std::string>();
    const auto& names = nu_preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw SchemaError(fmt::format("unknown nu preset '{}'", name));
    return nu_preset(name);
  }
  check_fields(block, {"utility", "power", "normalize"}, "nu");
  double rho_bar = 1.0;
  double premium = 0.0;
  if (block.contains("power")) {
    check_fields(block["power"], {"rho_bar", "premium"}, "nu.power");
    rho_bar = number_or(block["power"], "rho_bar", 1.0, "nu.power");
    premium = number_or(block["power"], "premium", 0.0, "nu.power");
  }
  bool normalize = true;
  if (block.contains("normalize")) {
    if (!block["normalize"].is_boolean()) throw SchemaError("nu.normalize must be boolean");
    normalize = block["normalize"].get<bool>();
  }
  const auto utility = parse_utility(require(block, "utility", "nu"), rho_bar);
  const auto power = premium == 0.0 ? PowerMap::proportional(rho_bar)
                                    : majority_premium_power(rho_bar, premium);
  return compose_nu(utility, power, normalize);
}

Scenario parse_scenario(const Json& doc) {
  check_fields(doc, {"description", "distribution", "nu", "shock", "seed", "tasks", "output"},
             "scenario");
  if (doc.contains("description") && !doc["description"].is_string())
    throw SchemaError("description must be a string");
  const auto& shock_block = require(doc, "shock", "scenario");
  check_fields(shock_block, {"phi"}, "shock");
  Scenario sc{parse_distribution(require(doc, "distribution", "scenario"), "distribution"),
              parse_nu(require(doc, "nu", "scenario")),
              Shock(number(require(shock_block, "phi", "shock"), "shock.phi")),
              0,
              Json::object(),
              "",
              "json"};
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw SchemaError("seed must be a nonnegative integer");
    sc.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("tasks")) {
    const auto& tasks = doc["tasks"];
    if (!tasks.is_object()) throw SchemaError("tasks must be an object");
    for (const auto& [k, v] : tasks.items()) {
      const auto& names = subcommands();
      if (std::find(names.begin(), names.end(), k) == names.end())
        throw SchemaError(fmt::format("unknown task block '{}'", k));
      if (!v.is_object()) throw SchemaError(fmt::format("tasks.{} must be an object", k));
    }
    sc.tasks = tasks;
  }
  if (doc.contains("output")) {
    check_fields(doc["output"], {"dir", "format"}, "output");
    if (doc["output"].contains("dir")) {
      if (!doc["output"]["dir"].is_string()) throw SchemaError("output.dir must be a string");
      sc.output_dir = doc["output"]["dir"].get<std::string>();
    }
    if (doc["output"].contains("format")) {
      if (!doc["output"]["format"].is_string())
        throw SchemaError("output.format must be a string");
      sc.format = doc["output"]["format"].get<std::string>();
      if (sc.format != "json" && sc.format != "csv" && sc.format != "both")
        throw SchemaError("output.format must be json, csv or both");
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(fmt::format("cannot read scenario '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(fmt::format("scenario '{}' is not valid JSON: {}", path, e.what()));
  }
  return parse_scenario(doc);
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "eq1d",    "eqkd",          "classify", "spread",   "dspread",
      "welfare", "premium-sweep", "info",     "dynamics", "validate"};
  return names;
}

}  // namespace polarity
