#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mshw/des_engine.hpp"
#include "mshw/scenario.hpp"

namespace mshw {

inline constexpr double kForever = 1e300;

struct CheckToggles {
  bool ssc = false;
  bool vw = false;
  bool aq = false;
  bool abandonment = false;
  bool idle = false;
  bool fluid = false;
  bool ks = true;
};

/// Pass/fail levels applied to the collected metrics.
struct Thresholds {
  double ks = 0.08;        // KS(X at the last t*) at the largest n
  double vw = 0.08;        // KS(sqrt(n) W, X^+/mu) at the largest n
  double idle = 0.1;       // median sup idle at the largest n
  double fluid = 0.05;     // sup |X/n - q| on the window
  double fluid_fraction = 0.95;
  /// Fraction of pairwise comparisons n_i < n_j with KS_i > KS_j.
  double ks_trend = 2.0 / 3.0;
};

struct ExperimentPlan {
  explicit ExperimentPlan(Scenario sc) : scenario(std::move(sc)) {}

  Scenario scenario;
  std::vector<int> n_list;
  int replications = 0;
  double horizon = 10.0;
  double grid_dt = 0.01;
  std::vector<double> t_star{10.0};
  std::uint64_t seed = 1;
  CheckToggles checks;
  Thresholds thresholds;
  double limit_dt = 1e-3;
  Discipline discipline = Discipline::Original;
  InitialCondition initial = InitialCondition::StationaryPhaseMix;
  /// Time window for the idle and fluid metrics; defaults to [0, horizon].
  double window_start = 0.0;
  std::optional<double> window_end;
  /// Number of replications (at the largest n) written as path_<rep>.csv.
  int export_paths = 0;
  /// Hash of the canonical config text, copied into the report.
  std::string config_hash;

  /// Throws InsufficientReplications or ConfigError.
  void validate() const;
};

/// Everything one replication contributes to the report.
struct ReplicationSummary {
  std::vector<double> x_star;               // (X(t*) - nq)/sqrt(n), one per t*
  std::vector<Eigen::VectorXd> z_star;      // (Z(t*) - n gamma)/sqrt(n)
  std::vector<double> w_star;               // sqrt(n) W(t*)
  double ssc = 0.0;     // sup |Q - p X^+| / sqrt(n)
  double abandonment = 0.0;  // sup |A - alpha int X^+| / sqrt(n)
  double aq = 0.0;      // sup A_Q / sqrt(n)
  double idle = 0.0;    // sup over the window of X^- / sqrt(n)
  double fluid = 0.0;   // sup over the window of |X/n - q|
};

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct PerN {
  int n = 0;
  std::vector<ReplicationSummary> reps;
  std::vector<double> ks_x;                // per t*
  std::vector<std::vector<double>> ks_z;   // per t*, per phase
  double ks_vw = 0.0;                      // at the last t*
  double ssc = 0.0, abandonment = 0.0, aq = 0.0, idle = 0.0;
  double fluid_fraction = 0.0;             // fraction of reps with fluid <= threshold
};

struct Report {
  std::vector<PerN> per_n;
  std::vector<std::vector<double>> limit_x;  // per t*, one value per limit replication
  std::vector<std::vector<Eigen::VectorXd>> limit_z;
  std::vector<CheckOutcome> checks;
  std::vector<SimPath> exported;  // first export_paths replications at the largest n
  std::uint64_t seed = 0;
  std::string config_hash;

  bool all_passed() const;
};

/// Seed for a sub-stream: splitmix of (seed, tag, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

/// Worker count: hardware concurrency capped by MSHW_THREADS.
unsigned worker_count();

/// Summarizes one simulated path for the plan's metrics.
ReplicationSummary summarize(const SimPath& path, const ExperimentPlan& plan);

/// Per-path metrics over grid times in [from, to]. Each throws WrongRegime
/// where the metric is only meaningful in one regime.
double ssc_metric(const SimPath& path, const Scenario& sc, double from = 0.0, double to = kForever);
double abandonment_metric(const SimPath& path, const Scenario& sc, double from = 0.0, double to = kForever);
double aq_metric(const SimPath& path, const Scenario& sc, double from = 0.0, double to = kForever);
double idle_metric(const SimPath& path, const Scenario& sc, double from = 0.0, double to = kForever);
double fluid_metric(const SimPath& path, const Scenario& sc, double from = 0.0, double to = kForever);

/// Median across replications of the per-replication metrics.
double check_ssc(const std::vector<SimPath>& paths, const Scenario& sc);
double check_abandonment(const std::vector<SimPath>& paths, const Scenario& sc);
double check_aq(const std::vector<SimPath>& paths, const Scenario& sc);
double check_idle(const std::vector<SimPath>& paths, const Scenario& sc, double from = 0.0, double to = kForever);
/// KS distance between sqrt(n) W(t) and X(t)^+/(mu sqrt(n)); critical only.
double check_vw(const std::vector<SimPath>& paths, const Scenario& sc, double t);

/// Strictly decreasing consecutive values; a pair of zeros counts as decreasing.
bool decreasing(const std::vector<double>& v);
bool nonincreasing(const std::vector<double>& v);
/// Fraction of pairs i < j with v_i > v_j.
double pairwise_decrease_fraction(const std::vector<double>& v);

Report run_experiment(const ExperimentPlan& plan);

/// report.json, marginals_n<k>.csv, marginals_limit.csv, plotdata_*.csv and
/// any requested path_<rep>.csv.
void write_outputs(const Report& report, const ExperimentPlan& plan, const std::filesystem::path& dir);

}  // namespace mshw
