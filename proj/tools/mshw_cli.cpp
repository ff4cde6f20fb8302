#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mshw/config.hpp"
#include "mshw/des_engine.hpp"
#include "mshw/error.hpp"
#include "mshw/harness.hpp"
#include "mshw/limits.hpp"
#include "mshw/ode_maps.hpp"

namespace fs = std::filesystem;
using namespace mshw;

namespace {

enum Exit { kOk = 0, kConfig = 1, kCheckFailed = 2, kRuntime = 3 };

struct ConfigFailure {
  std::string what;
};

/// Anything thrown while reading configuration is a config error.
template <class F>
auto load(F f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw ConfigFailure{e.what()};
  }
}

std::ofstream open_out(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  return os;
}

int validate_ph(const std::string& config) {
  const auto j = load([&] { return read_json_file(config); });
  const auto ph = load([&] { return j.contains("ph") ? scenario_from_json(j).ph : phase_type_from_json(j); });
  const Eigen::IOFormat row(Eigen::FullPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "[", "]");
  std::cout.precision(15);
  std::cout << "phases: " << ph.phases() << '\n'
            << "mean: " << ph.mean() << '\n'
            << "rate: " << ph.rate() << '\n'
            << "second_moment: " << ph.second_moment() << '\n'
            << "gamma: " << ph.load().transpose().format(row) << '\n'
            << "R:\n"
            << ph.rate_matrix() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Many-server queue laboratory: simulation, limit processes and scaling experiments"};
  app.require_subcommand(1);

  std::string config, out, csv_in, variant = "phi", discipline = "original", initial = "stationary-phase-mix",
                                   quadrature = "trapezoid";
  int n = 100, reps = 1;
  double horizon = 10.0, dt = 0.01;
  std::uint64_t seed = 1;
  bool event_log = false;

  auto* vph = app.add_subcommand("validate-ph", "Validate a phase-type law and print its derived quantities");
  vph->add_option("config", config, "scenario or {p, nu, P} JSON file")->required()->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "Simulate replications and write one CSV per replication");
  sim->add_option("config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--n", n, "number of servers")->check(CLI::PositiveNumber);
  sim->add_option("--horizon", horizon, "simulated time");
  sim->add_option("--dt", dt, "recording grid step");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
  sim->add_option("--discipline", discipline)->check(CLI::IsMember({"original", "perturbed"}));
  sim->add_option("--initial", initial)->check(CLI::IsMember({"empty", "stationary-phase-mix"}));
  sim->add_flag("--event-log", event_log, "also write events_<rep>.txt");
  sim->add_option("--out", out, "output directory")->required();

  auto* lim = app.add_subcommand("limit", "Sample diffusion-limit paths");
  lim->add_option("config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  lim->add_option("--horizon", horizon, "time horizon");
  lim->add_option("--dt", dt, "grid step");
  lim->add_option("--seed", seed, "master seed");
  lim->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
  lim->add_option("--out", out, "output directory")->required();

  auto* map = app.add_subcommand("map-solve", "Apply Phi or Psi to a driver path CSV (t,u,v1..vK)");
  map->add_option("path", csv_in, "input CSV")->required()->check(CLI::ExistingFile);
  map->add_option("--variant", variant)->check(CLI::IsMember({"phi", "psi"}));
  map->add_option("--config", config, "scenario JSON supplying p, R and alpha")->required()->check(CLI::ExistingFile);
  map->add_option("--quadrature", quadrature)->check(CLI::IsMember({"trapezoid", "left-point"}));
  map->add_option("--out", out, "output CSV")->required();

  auto* exp = app.add_subcommand("experiment", "Run a scaling experiment plan");
  exp->add_option("plan", config, "plan JSON file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out-dir", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*vph) return validate_ph(config);

    if (*sim) {
      const auto sc = load([&] { return load_scenario(config); });
      RunOptions o;
      o.n = n;
      o.horizon = horizon;
      o.grid_dt = dt;
      o.seed = seed;
      o.discipline = discipline == "original" ? Discipline::Original : Discipline::Perturbed;
      o.initial = initial == "empty" ? InitialCondition::Empty : InitialCondition::StationaryPhaseMix;
      o.keep_event_log = true;
      for (int r = 0; r < reps; ++r) {
        o.replication = static_cast<std::uint64_t>(r);
        const auto path = run(sc, o);
        auto os = open_out(fs::path(out) / ("path_" + std::to_string(r) + ".csv"));
        path.write_csv(os);
        if (event_log) {
          auto ev = open_out(fs::path(out) / ("events_" + std::to_string(r) + ".txt"));
          path.write_event_log(ev);
        }
      }
      std::cout << "wrote " << reps << " replication(s) to " << out << '\n';
      return kOk;
    }

    if (*lim) {
      const auto sc = load([&] { return load_scenario(config); });
      for (int r = 0; r < reps; ++r) {
        const auto lp = diffusion_path(sc, dt, horizon, derive_seed(seed, 2, static_cast<std::uint64_t>(r)));
        auto os = open_out(fs::path(out) / ("limit_" + std::to_string(r) + ".csv"));
        lp.write_csv(os, sc.ph.initial());
      }
      std::cout << "wrote " << reps << " limit path(s) to " << out << '\n';
      return kOk;
    }

    if (*map) {
      const auto sc = load([&] { return load_scenario(config); });
      const auto y = load([&] {
        std::ifstream in(csv_in);
        return GridPath::read_csv(in);
      });
      if (y.dim() != sc.ph.phases() + 1) throw ConfigFailure{"input CSV must have K+1 value columns"};
      PicardOptions opts;
      opts.quadrature = quadrature == "trapezoid" ? Quadrature::Trapezoid : Quadrature::LeftPoint;
      const auto u = y.columns(0, 1), v = y.columns(1, sc.ph.phases());
      const auto xz = variant == "phi" ? phi_map(u, v, MapCoefficients::phi(sc.ph, sc.alpha()), opts)
                                       : psi_map(u, v, MapCoefficients::psi(sc.ph, sc.alpha()), opts);
      auto os = open_out(out);
      xz.write_csv(os);
      return kOk;
    }

    if (*exp) {
      const auto plan = load([&] { return load_plan(config); });
      const auto report = run_experiment(plan);
      write_outputs(report, plan, out);
      for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      return report.all_passed() ? kOk : kCheckFailed;
    }
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.what << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
