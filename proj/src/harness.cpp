#include "mshw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mshw/config.hpp"
#include "mshw/error.hpp"
#include "mshw/limits.hpp"
#include "mshw/stats.hpp"

namespace mshw {
namespace {

// Extra simulated time so that W(t*) at t* = horizon is not censored.
constexpr double kWaitMargin = 1.0;

void require_regime(const Scenario& sc, Regime r, const char* what) {
  if (sc.regime != r)
    throw Error(ErrorCode::WrongRegime, std::string(what) + (r == Regime::Critical ? " needs the critical regime"
                                                                                     : " needs the overloaded regime"));
}

std::size_t grid_index(const SimPath& path, double t) {
  const auto i = static_cast<std::size_t>(std::llround(t / path.dt));
  if (i >= path.size()) throw Error(ErrorCode::InvalidGrid, "time beyond the simulated horizon");
  return i;
}

template <class F>
double sup_over(const SimPath& path, double from, double to, F f) {
  double m = 0.0;
  const double eps = 1e-9 * path.dt;
  for (std::size_t i = 0; i < path.size(); ++i)
    if (path.t[i] >= from - eps && path.t[i] <= to + eps) m = std::max(m, f(i));
  return m;
}

template <class F>
void parallel_for(std::size_t count, F body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(count)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> column(const std::vector<ReplicationSummary>& reps, double ReplicationSummary::*field) {
  std::vector<double> v;
  v.reserve(reps.size());
  for (const auto& r : reps) v.push_back(r.*field);
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (replications < 1) throw Error(ErrorCode::InsufficientReplications, "at least one replication is required");
  if ((checks.ks || checks.vw) && replications < 100)
    throw Error(ErrorCode::InsufficientReplications, "KS-based checks need at least 100 replications");
  if (n_list.empty()) throw Error(ErrorCode::ConfigError, "n_list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw Error(ErrorCode::ConfigError, "n_list entries must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw Error(ErrorCode::ConfigError, "n_list must be strictly increasing");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidHorizon, "horizon must be positive");
  if (!(grid_dt > 0.0) || grid_dt > horizon) throw Error(ErrorCode::InvalidGrid, "grid_dt must lie in (0, horizon]");
  if (!(limit_dt > 0.0)) throw Error(ErrorCode::InvalidGrid, "limit_dt must be positive");
  if (t_star.empty()) throw Error(ErrorCode::ConfigError, "t_star is empty");
  for (double t : t_star)
    if (!(t > 0.0) || t > horizon + 1e-12) throw Error(ErrorCode::ConfigError, "every t_star must lie in (0, horizon]");
  if (window_end && !(*window_end >= window_start)) throw Error(ErrorCode::ConfigError, "window end precedes its start");
  if (export_paths < 0 || export_paths > replications)
    throw Error(ErrorCode::ConfigError, "export_paths must lie in [0, replications]");
  if (checks.ssc) require_regime(scenario, Regime::Critical, "the ssc check");
  if (checks.aq) require_regime(scenario, Regime::Critical, "the aq check");
  if (checks.abandonment) require_regime(scenario, Regime::Critical, "the abandonment check");
  if (checks.vw) require_regime(scenario, Regime::Critical, "the vw check");
  if (checks.idle) require_regime(scenario, Regime::Overloaded, "the idle check");
  for (int n : n_list) (void)scenario.arrival_rate(n);
}

bool Report::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.passed; });
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ tag) ^ index);
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MSHW_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

double ssc_metric(const SimPath& path, const Scenario& sc, double from, double to) {
  require_regime(sc, Regime::Critical, "state-space collapse");
  const Eigen::VectorXd& p = sc.ph.initial();
  const double scale = std::sqrt(static_cast<double>(path.n));
  return sup_over(path, from, to, [&](std::size_t i) {
    const double xp = static_cast<double>(std::max<std::int64_t>(path.X[i], 0));
    double m = 0.0;
    for (int k = 0; k < path.K; ++k)
      m = std::max(m, std::abs(static_cast<double>(path.Q(static_cast<Eigen::Index>(i), k)) - p(k) * xp));
    return m / scale;
  });
}

double abandonment_metric(const SimPath& path, const Scenario& sc, double from, double to) {
  require_regime(sc, Regime::Critical, "the abandonment relation");
  const double scale = std::sqrt(static_cast<double>(path.n));
  const double alpha = sc.alpha();
  return sup_over(path, from, to, [&](std::size_t i) {
    return std::abs(static_cast<double>(path.A[i]) - alpha * path.int_queue[i]) / scale;
  });
}

double aq_metric(const SimPath& path, const Scenario& sc, double from, double to) {
  require_regime(sc, Regime::Critical, "the queued-abandoner metric");
  if (!path.has_log) throw Error(ErrorCode::MissingEventLog, "the queued-abandoner metric needs the event log");
  // Exact supremum over event epochs: an eventual abandoner counts from its
  // arrival until it leaves.
  std::vector<char> abandons;
  for (const auto& e : path.events)
    if (e.kind == EventKind::Abandon) {
      const auto id = static_cast<std::size_t>(e.customer);
      if (abandons.size() <= id) abandons.resize(id + 1, 0);
      abandons[id] = 1;
    }
  std::int64_t level = 0, best = 0;
  for (const auto& e : path.events) {
    if (e.time > to) break;
    const auto id = static_cast<std::size_t>(e.customer);
    if (e.kind == EventKind::Arrive && id < abandons.size() && abandons[id]) ++level;
    if (e.kind == EventKind::Abandon) --level;
    if (e.time >= from) best = std::max(best, level);
  }
  return static_cast<double>(best) / std::sqrt(static_cast<double>(path.n));
}

double idle_metric(const SimPath& path, const Scenario& sc, double from, double to) {
  require_regime(sc, Regime::Overloaded, "the idle-server metric");
  const double scale = std::sqrt(static_cast<double>(path.n));
  return sup_over(path, from, to, [&](std::size_t i) {
    return static_cast<double>(std::max<std::int64_t>(-path.X[i], 0)) / scale;
  });
}

double fluid_metric(const SimPath& path, const Scenario& sc, double from, double to) {
  const double n = path.n;
  const double q = sc.q();
  return sup_over(path, from, to, [&](std::size_t i) { return std::abs(static_cast<double>(path.X[i]) / n - q); });
}

namespace {

template <class F>
double median_of(const std::vector<SimPath>& paths, F f) {
  std::vector<double> v;
  v.reserve(paths.size());
  for (const auto& p : paths) v.push_back(f(p));
  return stats::median(std::move(v));
}

}  // namespace

double check_ssc(const std::vector<SimPath>& paths, const Scenario& sc) {
  require_regime(sc, Regime::Critical, "check_ssc");
  return median_of(paths, [&](const SimPath& p) { return ssc_metric(p, sc); });
}

double check_abandonment(const std::vector<SimPath>& paths, const Scenario& sc) {
  require_regime(sc, Regime::Critical, "check_abandonment");
  return median_of(paths, [&](const SimPath& p) { return abandonment_metric(p, sc); });
}

double check_aq(const std::vector<SimPath>& paths, const Scenario& sc) {
  require_regime(sc, Regime::Critical, "check_aq");
  return median_of(paths, [&](const SimPath& p) { return aq_metric(p, sc); });
}

double check_idle(const std::vector<SimPath>& paths, const Scenario& sc, double from, double to) {
  require_regime(sc, Regime::Overloaded, "check_idle");
  return median_of(paths, [&](const SimPath& p) { return idle_metric(p, sc, from, to); });
}

double check_vw(const std::vector<SimPath>& paths, const Scenario& sc, double t) {
  require_regime(sc, Regime::Critical, "check_vw");
  std::vector<double> w, x;
  for (const auto& p : paths) {
    const auto i = grid_index(p, t);
    const auto& W = p.W.empty() ? virtual_wait_path(p) : p.W;
    const double s = std::sqrt(static_cast<double>(p.n));
    w.push_back(s * W[i]);
    x.push_back(static_cast<double>(std::max<std::int64_t>(p.X[i], 0)) / (sc.mu() * s));
  }
  return stats::ks_two_sample(std::move(w), std::move(x)).statistic;
}

bool decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1] || (v[i] == 0.0 && v[i - 1] == 0.0))) return false;
  return true;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] <= v[i - 1])) return false;
  return true;
}

double pairwise_decrease_fraction(const std::vector<double>& v) {
  std::size_t pairs = 0, hits = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      ++pairs;
      if (v[i] > v[j]) ++hits;
    }
  return pairs ? static_cast<double>(hits) / static_cast<double>(pairs) : 1.0;
}

ReplicationSummary summarize(const SimPath& path, const ExperimentPlan& plan) {
  const auto& sc = plan.scenario;
  const double n = path.n;
  const double s = std::sqrt(n);
  const double q = sc.q();
  const Eigen::VectorXd center = n * sc.ph.load();
  const double w_from = plan.window_start;
  const double w_to = plan.window_end.value_or(plan.horizon);

  ReplicationSummary r;
  for (double t : plan.t_star) {
    const auto i = grid_index(path, t);
    r.x_star.push_back((static_cast<double>(path.X[i]) - n * q) / s);
    Eigen::VectorXd z = path.Z.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
    r.z_star.push_back((z - center) / s);
    r.w_star.push_back(path.W.empty() ? 0.0 : s * path.W[i]);
  }
  if (plan.checks.ssc) r.ssc = ssc_metric(path, sc, 0.0, plan.horizon);
  if (plan.checks.abandonment) r.abandonment = abandonment_metric(path, sc, 0.0, plan.horizon);
  if (plan.checks.aq) r.aq = aq_metric(path, sc, 0.0, plan.horizon);
  if (plan.checks.idle) r.idle = idle_metric(path, sc, w_from, w_to);
  if (plan.checks.fluid) r.fluid = fluid_metric(path, sc, w_from, w_to);
  return r;
}

Report run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const auto& sc = plan.scenario;
  const auto R = static_cast<std::size_t>(plan.replications);
  const std::size_t nt = plan.t_star.size();
  const int K = sc.ph.phases();

  Report report;
  report.seed = plan.seed;
  report.config_hash = plan.config_hash;
  report.exported.resize(static_cast<std::size_t>(plan.export_paths));

  RunOptions base;
  base.horizon = plan.horizon + (plan.checks.vw ? kWaitMargin : 0.0);
  base.grid_dt = plan.grid_dt;
  base.discipline = plan.discipline;
  base.initial = plan.initial;
  base.keep_event_log = plan.checks.vw || plan.checks.aq || plan.export_paths > 0;

  for (std::size_t ni = 0; ni < plan.n_list.size(); ++ni) {
    const int n = plan.n_list[ni];
    const bool last = ni + 1 == plan.n_list.size();
    PerN pn;
    pn.n = n;
    pn.reps.resize(R);
    parallel_for(R, [&](std::size_t i) {
      RunOptions o = base;
      o.n = n;
      o.seed = derive_seed(plan.seed, 1, static_cast<std::uint64_t>(n));
      o.replication = i;
      SimPath path = run(sc, o);
      pn.reps[i] = summarize(path, plan);
      if (last && i < report.exported.size()) report.exported[i] = std::move(path);
    });
    report.per_n.push_back(std::move(pn));
  }

  if (plan.checks.ks) {
    const double t_max = *std::max_element(plan.t_star.begin(), plan.t_star.end());
    const double limit_horizon = std::max(t_max, plan.limit_dt);
    report.limit_x.assign(nt, std::vector<double>(R));
    report.limit_z.assign(nt, std::vector<Eigen::VectorXd>(R));
    parallel_for(R, [&](std::size_t i) {
      const auto lp = diffusion_path(sc, plan.limit_dt, limit_horizon, derive_seed(plan.seed, 2, i));
      for (std::size_t k = 0; k < nt; ++k) {
        const auto g = std::min<std::size_t>(static_cast<std::size_t>(std::llround(plan.t_star[k] / plan.limit_dt)),
                                             lp.size() - 1);
        report.limit_x[k][i] = lp.X(g, 0);
        report.limit_z[k][i] = lp.Z.row(g).transpose();
      }
    });
  }

  for (auto& pn : report.per_n) {
    if (plan.checks.ks) {
      pn.ks_x.resize(nt);
      pn.ks_z.assign(nt, std::vector<double>(static_cast<std::size_t>(K)));
      for (std::size_t k = 0; k < nt; ++k) {
        std::vector<double> xs;
        for (const auto& r : pn.reps) xs.push_back(r.x_star[k]);
        pn.ks_x[k] = stats::ks_two_sample(xs, report.limit_x[k]).statistic;
        for (int c = 0; c < K; ++c) {
          std::vector<double> zs, zl;
          for (const auto& r : pn.reps) zs.push_back(r.z_star[k](c));
          for (const auto& z : report.limit_z[k]) zl.push_back(z(c));
          pn.ks_z[k][static_cast<std::size_t>(c)] = stats::ks_two_sample(zs, zl).statistic;
        }
      }
    }
    if (plan.checks.vw) {
      std::vector<double> w, x;
      const std::size_t k = nt - 1;
      for (const auto& r : pn.reps) {
        w.push_back(r.w_star[k]);
        x.push_back(std::max(r.x_star[k], 0.0) / sc.mu());
      }
      pn.ks_vw = stats::ks_two_sample(std::move(w), std::move(x)).statistic;
    }
    pn.ssc = stats::median(column(pn.reps, &ReplicationSummary::ssc));
    pn.abandonment = stats::median(column(pn.reps, &ReplicationSummary::abandonment));
    pn.aq = stats::median(column(pn.reps, &ReplicationSummary::aq));
    pn.idle = stats::median(column(pn.reps, &ReplicationSummary::idle));
    const auto fl = column(pn.reps, &ReplicationSummary::fluid);
    pn.fluid_fraction = static_cast<double>(std::count_if(fl.begin(), fl.end(), [&](double v) {
                          return v <= plan.thresholds.fluid;
                        })) /
                        static_cast<double>(fl.size());
  }

  auto series = [&](double PerN::*field) {
    std::vector<double> v;
    for (const auto& pn : report.per_n) v.push_back(pn.*field);
    return v;
  };
  const auto& th = plan.thresholds;
  const auto& final_n = report.per_n.back();

  if (plan.checks.ks) {
    std::vector<double> ks;
    for (const auto& pn : report.per_n) ks.push_back(pn.ks_x.back());
    bool trend = true;
    std::string how;
    if (ks.size() >= 3) {
      const double f = pairwise_decrease_fraction(ks);
      trend = f >= th.ks_trend - 1e-12;
      how = "pairwise decrease fraction " + fmt(f);
    } else if (ks.size() == 2) {
      trend = ks[1] < ks[0];
      how = "decreasing";
    }
    const bool level = ks.back() <= th.ks;
    report.checks.push_back({"ks", trend && level,
                             "KS(X) by n: [" + join(ks) + "]" + (how.empty() ? "" : ", " + how) + ", final <= " +
                                 fmt(th.ks)});
  }
  if (plan.checks.ssc) {
    const auto v = series(&PerN::ssc);
    report.checks.push_back({"ssc", nonincreasing(v), "median SSC by n: [" + join(v) + "], nonincreasing"});
  }
  if (plan.checks.vw) {
    report.checks.push_back({"vw", final_n.ks_vw <= th.vw,
                             "KS(sqrt(n) W, X^+/mu) at n=" + std::to_string(final_n.n) + ": " + fmt(final_n.ks_vw) +
                                 " <= " + fmt(th.vw)});
  }
  if (plan.checks.aq) {
    const auto v = series(&PerN::aq);
    report.checks.push_back({"aq", decreasing(v), "median AQ by n: [" + join(v) + "], decreasing"});
  }
  if (plan.checks.abandonment) {
    const auto v = series(&PerN::abandonment);
    report.checks.push_back({"abandonment", decreasing(v), "median abandonment residual by n: [" + join(v) + "], decreasing"});
  }
  if (plan.checks.idle) {
    const auto v = series(&PerN::idle);
    report.checks.push_back({"idle", decreasing(v) && v.back() <= th.idle,
                             "median idle by n: [" + join(v) + "], decreasing, final <= " + fmt(th.idle)});
  }
  if (plan.checks.fluid) {
    report.checks.push_back({"fluid", final_n.fluid_fraction >= th.fluid_fraction,
                             "fraction of replications with sup |X/n - q| <= " + fmt(th.fluid) + " at n=" +
                                 std::to_string(final_n.n) + ": " + fmt(final_n.fluid_fraction) + " >= " +
                                 fmt(th.fluid_fraction)});
  }
  return report;
}

void write_outputs(const Report& report, const ExperimentPlan& plan, const std::filesystem::path& dir) {
  using nlohmann::json;
  std::filesystem::create_directories(dir);
  const auto& sc = plan.scenario;
  const int K = sc.ph.phases();

  auto open = [&](const std::string& name) {
    std::ofstream os(dir / name);
    if (!os) throw Error(ErrorCode::ConfigError, "cannot write " + (dir / name).string());
    os.precision(12);
    return os;
  };

  json per_n = json::array();
  for (const auto& pn : report.per_n) {
    json e{{"n", pn.n}, {"replications", pn.reps.size()}};
    if (plan.checks.ks) {
      e["ks_x"] = pn.ks_x;
      e["ks_z"] = pn.ks_z;
    }
    if (plan.checks.vw) e["ks_vw"] = pn.ks_vw;
    if (plan.checks.ssc) e["ssc_median"] = pn.ssc;
    if (plan.checks.abandonment) e["abandonment_median"] = pn.abandonment;
    if (plan.checks.aq) e["aq_median"] = pn.aq;
    if (plan.checks.idle) e["idle_median"] = pn.idle;
    if (plan.checks.fluid) e["fluid_fraction"] = pn.fluid_fraction;
    per_n.push_back(e);
  }
  json checks = json::array();
  for (const auto& c : report.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  const auto& th = plan.thresholds;
  json doc{
      {"tool", "mshw"},
      {"version", "1.0.0"},
      {"config_hash", report.config_hash},
      {"seed", report.seed},
      {"scenario", scenario_to_json(sc)},
      {"q", sc.q()},
      {"plan",
       {{"n_list", plan.n_list},
        {"replications", plan.replications},
        {"horizon", plan.horizon},
        {"grid_dt", plan.grid_dt},
        {"t_star", plan.t_star},
        {"limit_dt", plan.limit_dt},
        {"discipline", plan.discipline == Discipline::Original ? "original" : "perturbed"},
        {"window", {plan.window_start, plan.window_end.value_or(plan.horizon)}}}},
      {"thresholds",
       {{"ks", th.ks},
        {"vw", th.vw},
        {"idle", th.idle},
        {"fluid", th.fluid},
        {"fluid_fraction", th.fluid_fraction},
        {"ks_trend", th.ks_trend}}},
      {"limit_replications", report.limit_x.empty() ? 0 : report.limit_x.front().size()},
      {"per_n", per_n},
      {"checks", checks},
      {"passed", report.all_passed()}};
  open("report.json") << doc.dump(2) << '\n';

  auto header = [&](std::ostream& os, bool with_w) {
    os << "rep";
    for (double t : plan.t_star) {
      os << ",x_t" << fmt(t);
      for (int k = 1; k <= K; ++k) os << ",z" << k << "_t" << fmt(t);
      if (with_w) os << ",w_t" << fmt(t);
    }
    os << '\n';
  };
  for (const auto& pn : report.per_n) {
    auto os = open("marginals_n" + std::to_string(pn.n) + ".csv");
    header(os, true);
    for (std::size_t r = 0; r < pn.reps.size(); ++r) {
      os << r;
      for (std::size_t k = 0; k < plan.t_star.size(); ++k) {
        os << ',' << pn.reps[r].x_star[k];
        for (int c = 0; c < K; ++c) os << ',' << pn.reps[r].z_star[k](c);
        os << ',' << pn.reps[r].w_star[k];
      }
      os << '\n';
    }
  }
  if (!report.limit_x.empty()) {
    auto os = open("marginals_limit.csv");
    header(os, false);
    for (std::size_t r = 0; r < report.limit_x.front().size(); ++r) {
      os << r;
      for (std::size_t k = 0; k < plan.t_star.size(); ++k) {
        os << ',' << report.limit_x[k][r];
        for (int c = 0; c < K; ++c) os << ',' << report.limit_z[k][r](c);
      }
      os << '\n';
    }
  }

  auto plot = [&](const std::string& name, const std::string& col, auto value) {
    auto os = open("plotdata_" + name + ".csv");
    os << "n," << col << '\n';
    for (const auto& pn : report.per_n) os << pn.n << ',' << value(pn) << '\n';
  };
  if (plan.checks.ks) plot("ks_x", "ks", [](const PerN& pn) { return pn.ks_x.back(); });
  if (plan.checks.vw) plot("vw", "ks", [](const PerN& pn) { return pn.ks_vw; });
  if (plan.checks.ssc) plot("ssc", "median", [](const PerN& pn) { return pn.ssc; });
  if (plan.checks.abandonment) plot("abandonment", "median", [](const PerN& pn) { return pn.abandonment; });
  if (plan.checks.aq) plot("aq", "median", [](const PerN& pn) { return pn.aq; });
  if (plan.checks.idle) plot("idle", "median", [](const PerN& pn) { return pn.idle; });
  if (plan.checks.fluid) plot("fluid", "fraction", [](const PerN& pn) { return pn.fluid_fraction; });

  for (std::size_t r = 0; r < report.exported.size(); ++r) {
    auto os = open("path_" + std::to_string(r) + ".csv");
    report.exported[r].write_csv(os);
  }
}

}  // namespace mshw
