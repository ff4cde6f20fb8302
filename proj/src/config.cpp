#include "mshw/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "mshw/error.hpp"

namespace mshw {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) fail("unknown key '" + item.key() + "' in " + where);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail("missing key '" + std::string(key) + "' in " + where);
  return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, const std::string& where, double fallback) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

bool flag(const json& j, const char* key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(where + "." + key + " must be true or false");
  return j.at(key).get<bool>();
}

std::string text(const json& j, const char* key, const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_string()) fail(where + "." + key + " must be a string");
  return v.get<std::string>();
}

Eigen::VectorXd vector_of(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(where + " must hold numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd out(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = vector_of(v[static_cast<std::size_t>(i)], where);
    if (row.size() != rows) fail(where + " must be square");
    out.row(i) = row.transpose();
  }
  return out;
}

ArrivalLaw arrival_from(const json& j) {
  const std::string where = "arrival";
  const auto family = text(j, "family", where);
  if (family == "exponential") {
    allow_keys(j, where, {"family"});
    return ArrivalLaw::exponential();
  }
  if (family == "deterministic") {
    allow_keys(j, where, {"family"});
    return ArrivalLaw::deterministic();
  }
  if (family == "erlang") {
    allow_keys(j, where, {"family", "k"});
    const auto& k = need(j, "k", where);
    if (!k.is_number_integer()) fail("arrival.k must be an integer");
    return ArrivalLaw::erlang(k.get<int>());
  }
  if (family == "hyperexp2") {
    allow_keys(j, where, {"family", "scv"});
    return ArrivalLaw::hyperexponential(number(j, "scv", where));
  }
  if (family == "lognormal") {
    allow_keys(j, where, {"family", "scv"});
    return ArrivalLaw::lognormal(number(j, "scv", where));
  }
  fail("unknown arrival family '" + family + "'");
}

PatienceLaw patience_from(const json& j) {
  const std::string where = "patience";
  const auto family = text(j, "family", where);
  if (family == "exponential") {
    allow_keys(j, where, {"family", "rate"});
    return PatienceLaw::exponential(number(j, "rate", where));
  }
  if (family == "deterministic") {
    allow_keys(j, where, {"family", "value"});
    return PatienceLaw::deterministic(number(j, "value", where));
  }
  if (family == "uniform") {
    allow_keys(j, where, {"family", "upper"});
    return PatienceLaw::uniform(number(j, "upper", where));
  }
  if (family == "weibull") {
    allow_keys(j, where, {"family", "shape", "scale"});
    return PatienceLaw::weibull(number(j, "shape", where), number(j, "scale", where));
  }
  if (family == "hyperexp2") {
    allow_keys(j, where, {"family", "p1", "rate1", "rate2"});
    return PatienceLaw::hyperexponential(number(j, "p1", where), number(j, "rate1", where),
                                         number(j, "rate2", where));
  }
  fail("unknown patience family '" + family + "'");
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Discipline discipline_from(const std::string& s) {
  if (s == "original") return Discipline::Original;
  if (s == "perturbed") return Discipline::Perturbed;
  fail("discipline must be 'original' or 'perturbed'");
}

InitialCondition initial_from(const std::string& s) {
  if (s == "empty") return InitialCondition::Empty;
  if (s == "stationary-phase-mix") return InitialCondition::StationaryPhaseMix;
  fail("initial must be 'empty' or 'stationary-phase-mix'");
}

}  // namespace

PhaseType phase_type_from_json(const json& j) {
  allow_keys(j, "ph", {"p", "nu", "P"});
  return PhaseType::validate(vector_of(need(j, "p", "ph"), "ph.p"), vector_of(need(j, "nu", "ph"), "ph.nu"),
                             matrix_of(need(j, "P", "ph"), "ph.P"));
}

Scenario scenario_from_json(const json& j) {
  allow_keys(j, "scenario", {"ph", "arrival", "patience", "lambda", "beta", "regime", "q"});
  auto ph = phase_type_from_json(need(j, "ph", "scenario"));
  const auto arrival = arrival_from(need(j, "arrival", "scenario"));
  const auto patience = patience_from(need(j, "patience", "scenario"));

  const auto regime_s = text(j, "regime", "scenario");
  Regime regime;
  if (regime_s == "critical")
    regime = Regime::Critical;
  else if (regime_s == "overloaded")
    regime = Regime::Overloaded;
  else
    fail("regime must be 'critical' or 'overloaded'");

  const double mu = ph.rate();
  double lambda = mu;
  if (j.contains("lambda"))
    lambda = number(j, "lambda", "scenario");
  else if (regime == Regime::Overloaded)
    fail("an overloaded scenario needs lambda");
  const double beta = number_or(j, "beta", "scenario", 0.0);

  auto sc = Scenario::make(std::move(ph), arrival, patience, lambda, beta, regime);
  if (j.contains("q")) {
    const double q = number(j, "q", "scenario");
    if (std::abs(q - sc.q()) > 1e-9 * std::max(1.0, std::abs(q)))
      fail("declared q = " + std::to_string(q) + " disagrees with (lambda - mu)/alpha = " + std::to_string(sc.q()));
  }
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json ph;
  ph["p"] = vector_json(sc.ph.initial());
  ph["nu"] = vector_json(sc.ph.rates());
  json P = json::array();
  for (Eigen::Index i = 0; i < sc.ph.routing().rows(); ++i) P.push_back(vector_json(sc.ph.routing().row(i).transpose()));
  ph["P"] = P;

  json arrival{{"family", sc.arrival.name()}};
  if (sc.arrival.family == ArrivalLaw::Family::Erlang) arrival["k"] = sc.arrival.erlang_k;
  if (sc.arrival.family == ArrivalLaw::Family::Hyperexponential2 || sc.arrival.family == ArrivalLaw::Family::Lognormal)
    arrival["scv"] = sc.arrival.scv_param;

  const auto& pl = sc.patience;
  json patience{{"family", pl.name()}};
  switch (pl.family) {
    case PatienceLaw::Family::Exponential: patience["rate"] = pl.a; break;
    case PatienceLaw::Family::Deterministic: patience["value"] = pl.a; break;
    case PatienceLaw::Family::Uniform: patience["upper"] = pl.a; break;
    case PatienceLaw::Family::Weibull:
      patience["shape"] = pl.a;
      patience["scale"] = pl.b;
      break;
    case PatienceLaw::Family::Hyperexponential2:
      patience["p1"] = pl.a;
      patience["rate1"] = pl.b;
      patience["rate2"] = pl.c;
      break;
  }
  return json{{"ph", ph},
              {"arrival", arrival},
              {"patience", patience},
              {"lambda", sc.lambda},
              {"beta", sc.beta},
              {"regime", sc.regime == Regime::Critical ? "critical" : "overloaded"}};
}

ExperimentPlan plan_from_json(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "plan";
  allow_keys(j, where,
             {"scenario", "n_list", "replications", "horizon", "grid_dt", "t_star", "seed", "checks", "thresholds",
              "limit_dt", "discipline", "initial", "window", "export_paths"});
  const auto& sj = need(j, "scenario", where);
  json scenario_json;
  if (sj.is_string())
    scenario_json = read_json_file(base_dir / sj.get<std::string>());
  else
    scenario_json = sj;
  ExperimentPlan plan(scenario_from_json(scenario_json));

  const auto& nl = need(j, "n_list", where);
  if (!nl.is_array()) fail("plan.n_list must be an array");
  for (const auto& v : nl) {
    if (!v.is_number_integer()) fail("plan.n_list must hold integers");
    plan.n_list.push_back(v.get<int>());
  }
  const auto& reps = need(j, "replications", where);
  if (!reps.is_number_integer()) fail("plan.replications must be an integer");
  plan.replications = reps.get<int>();
  plan.horizon = number_or(j, "horizon", where, plan.horizon);
  plan.grid_dt = number_or(j, "grid_dt", where, plan.grid_dt);
  if (j.contains("t_star")) {
    const auto& ts = j.at("t_star");
    plan.t_star.clear();
    if (ts.is_number())
      plan.t_star.push_back(ts.get<double>());
    else
      for (const auto& v : vector_of(ts, "plan.t_star")) plan.t_star.push_back(v);
  } else {
    plan.t_star = {plan.horizon};
  }
  if (j.contains("seed")) {
    const auto& sj = j.at("seed");
    if (!sj.is_number_integer() || (!sj.is_number_unsigned() && sj.get<std::int64_t>() < 0)) fail("plan.seed must be a nonnegative integer");
    plan.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("checks")) {
    const auto& c = j.at("checks");
    allow_keys(c, "checks", {"ssc", "vw", "aq", "abandonment", "idle", "fluid", "ks"});
    plan.checks.ssc = flag(c, "ssc", "checks", false);
    plan.checks.vw = flag(c, "vw", "checks", false);
    plan.checks.aq = flag(c, "aq", "checks", false);
    plan.checks.abandonment = flag(c, "abandonment", "checks", false);
    plan.checks.idle = flag(c, "idle", "checks", false);
    plan.checks.fluid = flag(c, "fluid", "checks", false);
    plan.checks.ks = flag(c, "ks", "checks", true);
  }
  if (plan.scenario.regime == Regime::Overloaded) plan.thresholds.ks = 0.1;
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    allow_keys(t, "thresholds", {"ks", "vw", "idle", "fluid", "fluid_fraction", "ks_trend"});
    auto& th = plan.thresholds;
    th.ks = number_or(t, "ks", "thresholds", th.ks);
    th.vw = number_or(t, "vw", "thresholds", th.vw);
    th.idle = number_or(t, "idle", "thresholds", th.idle);
    th.fluid = number_or(t, "fluid", "thresholds", th.fluid);
    th.fluid_fraction = number_or(t, "fluid_fraction", "thresholds", th.fluid_fraction);
    th.ks_trend = number_or(t, "ks_trend", "thresholds", th.ks_trend);
  }
  plan.limit_dt = number_or(j, "limit_dt", where, plan.limit_dt);
  if (j.contains("discipline")) plan.discipline = discipline_from(text(j, "discipline", where));
  if (j.contains("initial")) plan.initial = initial_from(text(j, "initial", where));
  if (j.contains("window")) {
    const auto w = vector_of(j.at("window"), "plan.window");
    if (w.size() != 2) fail("plan.window must be [start, end]");
    plan.window_start = w(0);
    plan.window_end = w(1);
  }
  if (j.contains("export_paths")) {
    if (!j.at("export_paths").is_number_integer()) fail("plan.export_paths must be an integer");
    plan.export_paths = j.at("export_paths").get<int>();
  }

  json canonical = j;
  canonical["scenario"] = scenario_json;
  plan.config_hash = config_hash(canonical);
  plan.validate();
  return plan;
}

json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail("cannot open " + file.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(file.string() + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& file) { return scenario_from_json(read_json_file(file)); }

ExperimentPlan load_plan(const std::filesystem::path& file) {
  return plan_from_json(read_json_file(file), file.parent_path());
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mshw
