#include "lapcert/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "lapcert/error.hpp"

namespace lapcert {

using nlohmann::json;

TruthSpec TruthConfig::spec() const {
  if (!theta_star.empty()) {
    TruthSpec t;
    t.theta_star = Eigen::Map<const Eigen::VectorXd>(theta_star.data(), theta_star.size());
    return t;
  }
  return TruthSpec::decay(p_star, amplitude, exponent);
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void require_object(const json& j, const std::string& path, const std::set<std::string>& keys) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!keys.count(k)) fail(path + "." + k, "unknown key");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path, int lo) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1'000'000'000) fail(path, "out of range");
  return static_cast<int>(v);
}

std::string get_string(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_string()) fail(path, "expected a string");
  const std::string s = j.get<std::string>();
  if (!allowed.empty() && !allowed.count(s)) fail(path, "unsupported value '" + s + "'");
  return s;
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> get_ints(const json& j, const std::string& path, int lo) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_int(j[i], path + "[" + std::to_string(i) + "]", lo));
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("$", std::string("invalid JSON: ") + e.what());
  }
  require_object(j, "$",
                 {"operator", "family", "n", "p", "gamma", "beta_override", "truth", "eigensolver",
                  "certification", "validation", "concentration", "sweep", "seed", "output"});
  ExperimentConfig c;
  if (j.contains("operator")) {
    const json& o = j["operator"];
    require_object(o, "$.operator", {"a", "b"});
    if (o.contains("a")) c.a = get_numbers(o["a"], "$.operator.a");
    if (o.contains("b")) c.b = get_numbers(o["b"], "$.operator.b");
    if (c.a.empty()) fail("$.operator.a", "must not be empty");
    if (c.b.empty()) fail("$.operator.b", "must not be empty");
  }
  if (j.contains("family")) {
    c.family = family_from_string(get_string(j["family"], "$.family", {"poisson", "gaussian", "bernoulli"}));
  }
  if (j.contains("n")) c.n = get_int(j["n"], "$.n", 1);
  if (j.contains("p")) c.p = get_int(j["p"], "$.p", 1);
  if (j.contains("gamma")) c.gamma = get_number(j["gamma"], "$.gamma");
  if (j.contains("beta_override") && !j["beta_override"].is_null()) {
    c.beta_override = get_number(j["beta_override"], "$.beta_override");
    if (!(*c.beta_override > 0)) fail("$.beta_override", "must be positive");
  }
  if (j.contains("truth")) {
    const json& t = j["truth"];
    require_object(t, "$.truth", {"amplitude", "exponent", "p_star", "theta_star"});
    if (t.contains("amplitude")) c.truth.amplitude = get_number(t["amplitude"], "$.truth.amplitude");
    if (t.contains("exponent")) c.truth.exponent = get_number(t["exponent"], "$.truth.exponent");
    if (t.contains("p_star")) c.truth.p_star = get_int(t["p_star"], "$.truth.p_star", 1);
    if (t.contains("theta_star") && !t["theta_star"].is_null())
      c.truth.theta_star = get_numbers(t["theta_star"], "$.truth.theta_star");
  }
  if (j.contains("eigensolver")) {
    const json& e = j["eigensolver"];
    require_object(e, "$.eigensolver", {"K", "N"});
    if (e.contains("K")) c.K = get_int(e["K"], "$.eigensolver.K", 1);
    if (e.contains("N")) c.N = get_int(e["N"], "$.eigensolver.N", 64);
  }
  if (j.contains("certification")) {
    const json& e = j["certification"];
    require_object(e, "$.certification", {"gamma0", "r_points", "r_max_factor", "lambda_exp"});
    if (e.contains("gamma0")) {
      const json& g = e["gamma0"];
      if (g.is_string()) {
        get_string(g, "$.certification.gamma0", {"auto_star"});
        c.certification.auto_star = true;
      } else {
        c.certification.gamma0 = get_numbers(g, "$.certification.gamma0");
        c.certification.auto_star = false;
        if (c.certification.gamma0.empty()) fail("$.certification.gamma0", "must not be empty");
      }
    }
    if (e.contains("r_points")) c.certification.r_points = get_int(e["r_points"], "$.certification.r_points", 2);
    if (e.contains("r_max_factor"))
      c.certification.r_max_factor = get_number(e["r_max_factor"], "$.certification.r_max_factor");
    if (e.contains("lambda_exp"))
      c.certification.lambda_exp = get_number(e["lambda_exp"], "$.certification.lambda_exp");
  }
  if (j.contains("validation")) {
    const json& e = j["validation"];
    require_object(e, "$.validation", {"method", "M", "per_axis"});
    if (e.contains("method"))
      c.validation.method =
          get_string(e["method"], "$.validation.method", {"auto", "quadrature", "importance", "none"});
    if (e.contains("M")) c.validation.M = get_int(e["M"], "$.validation.M", 1);
    if (e.contains("per_axis")) c.validation.per_axis = get_int(e["per_axis"], "$.validation.per_axis", 1);
  }
  if (j.contains("concentration")) {
    const json& e = j["concentration"];
    require_object(e, "$.concentration", {"M", "radius_factors"});
    if (e.contains("M")) c.concentration.M = get_int(e["M"], "$.concentration.M", 1);
    if (e.contains("radius_factors"))
      c.concentration.radius_factors = get_numbers(e["radius_factors"], "$.concentration.radius_factors");
  }
  if (j.contains("sweep")) {
    const json& e = j["sweep"];
    require_object(e, "$.sweep", {"axis", "p_grid", "n_grid"});
    if (e.contains("axis")) c.sweep.axis = get_string(e["axis"], "$.sweep.axis", {"p", "n"});
    if (e.contains("p_grid")) c.sweep.p_grid = get_ints(e["p_grid"], "$.sweep.p_grid", 1);
    if (e.contains("n_grid")) c.sweep.n_grid = get_ints(e["n_grid"], "$.sweep.n_grid", 1);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("$.seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = get_string(j["output"], "$.output", {});
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const ExperimentConfig& c) {
  json j;
  j["operator"] = {{"a", c.a}, {"b", c.b}};
  j["family"] = to_string(c.family);
  j["n"] = c.n;
  j["p"] = c.p;
  j["gamma"] = c.gamma;
  j["beta_override"] = c.beta_override ? json(*c.beta_override) : json(nullptr);
  j["truth"] = {{"amplitude", c.truth.amplitude},
                {"exponent", c.truth.exponent},
                {"p_star", c.truth.p_star},
                {"theta_star", c.truth.theta_star.empty() ? json(nullptr) : json(c.truth.theta_star)}};
  j["eigensolver"] = {{"K", c.K}, {"N", c.N}};
  j["certification"] = {
      {"gamma0", c.certification.auto_star ? json("auto_star") : json(c.certification.gamma0)},
      {"r_points", c.certification.r_points},
      {"r_max_factor", c.certification.r_max_factor},
      {"lambda_exp", c.certification.lambda_exp}};
  j["validation"] = {{"method", c.validation.method}, {"M", c.validation.M}, {"per_axis", c.validation.per_axis}};
  j["concentration"] = {{"M", c.concentration.M}, {"radius_factors", c.concentration.radius_factors}};
  j["sweep"] = {{"axis", c.sweep.axis}, {"p_grid", c.sweep.p_grid}, {"n_grid", c.sweep.n_grid}};
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j.dump(2);
}

}  // namespace lapcert
