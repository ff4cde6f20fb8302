#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mshw/des_engine.hpp"
#include "mshw/error.hpp"
#include "mshw/ode_maps.hpp"
#include "mshw/stats.hpp"

using namespace mshw;

namespace {

PhaseType coxian() {
  Eigen::MatrixXd P(2, 2);
  P << 0.0, 0.5, 0.0, 0.0;
  return PhaseType::validate(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 2.0), P);
}

/// Three phases with a nondegenerate initial law and feedback.
PhaseType mixed3() {
  Eigen::MatrixXd P(3, 3);
  P << 0.0, 0.3, 0.2, 0.1, 0.0, 0.4, 0.0, 0.2, 0.0;
  return PhaseType::validate(Eigen::Vector3d(0.5, 0.3, 0.2), Eigen::Vector3d(1.0, 2.5, 1.5), P);
}

Scenario critical(PhaseType ph, PatienceLaw patience, double beta = 1.0, ArrivalLaw arr = ArrivalLaw::exponential()) {
  const double mu = ph.rate();
  return Scenario::make(std::move(ph), arr, patience, mu, beta, Regime::Critical);
}

/// M/M/n+M with total arrival rate lambda_n at size n, written as a critical
/// scenario with the matching beta.
Scenario mmn(int n, double lambda_n, double alpha) {
  const double beta = (n - lambda_n) / std::sqrt(static_cast<double>(n));
  return critical(PhaseType::exponential(1.0), PatienceLaw::exponential(alpha), beta);
}

void check_invariants(const SimPath& path) {
  const auto n = path.n;
  const auto N = path.size();
  std::int64_t x0 = path.X[0] - path.E[0] + path.D[0] + path.A[0];
  const std::int64_t busy0 = path.busy(0) - path.B[0] + path.D[0];
  for (std::size_t i = 0; i < N; ++i) {
    const auto busy = path.busy(i);
    const auto xm = std::max<std::int64_t>(-path.X[i], 0);
    const auto xp = std::max<std::int64_t>(path.X[i], 0);
    REQUIRE(busy == n - xm);
    REQUIRE(path.X[i] == x0 + path.E[i] - path.D[i] - path.A[i]);
    REQUIRE(busy == busy0 + path.B[i] - path.D[i]);
    REQUIRE(xp == path.queued(i));
    for (int k = 0; k < path.K; ++k) {
      const auto r = static_cast<Eigen::Index>(i);
      REQUIRE(path.Z(r, k) >= 0);
      REQUIRE(path.Z(r, k) <= n);
      REQUIRE(path.Q(r, k) >= 0);
      if (i > 0) {
        const double inc = path.T(r, k) - path.T(r - 1, k);
        REQUIRE(inc >= -1e-9);
        REQUIRE(inc <= n * path.dt + 1e-9);
      }
    }
    if (i > 0) {
      REQUIRE(path.A[i] >= path.A[i - 1]);
      REQUIRE(path.B[i] >= path.B[i - 1]);
      REQUIRE(path.D[i] >= path.D[i - 1]);
      REQUIRE(path.E[i] >= path.E[i - 1]);
    }
  }
  // Departures in the counter equal logged completions that exit service.
  if (path.has_log) {
    std::size_t j = 0;
    std::int64_t departs = 0;
    for (std::size_t i = 0; i < N; ++i) {
      while (j < path.events.size() && path.events[j].time <= path.t[i]) {
        if (path.events[j].kind == EventKind::Depart) ++departs;
        ++j;
      }
      REQUIRE(departs == path.D[i]);
    }
  }
}

/// Direct O(grid x customers) evaluation of W from the log.
std::vector<double> naive_wait(const SimPath& path) {
  const auto& ev = path.events;
  std::int64_t max_id = -1;
  for (const auto& e : ev) max_id = std::max(max_id, e.customer);
  std::vector<double> arrive(static_cast<std::size_t>(max_id + 1), -1.0);
  std::vector<std::size_t> arrive_idx(static_cast<std::size_t>(max_id + 1), SIZE_MAX);
  std::vector<std::size_t> leave_idx(static_cast<std::size_t>(max_id + 1), SIZE_MAX);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto c = static_cast<std::size_t>(ev[i].customer);
    if (ev[i].kind == EventKind::Arrive) arrive_idx[c] = i;
    if ((ev[i].kind == EventKind::Start || ev[i].kind == EventKind::Abandon) && leave_idx[c] == SIZE_MAX)
      leave_idx[c] = i;
  }
  std::vector<double> W(path.size());
  for (std::size_t g = 0; g < path.size(); ++g) {
    const double t = path.t[g];
    std::size_t last = 0;  // number of events with time <= t
    while (last < ev.size() && ev[last].time <= t) ++last;
    bool anyone = false, unresolved = false;
    std::size_t after = last;
    for (std::size_t c = 0; c < arrive_idx.size(); ++c) {
      if (arrive_idx[c] == SIZE_MAX || arrive_idx[c] >= last) continue;
      if (leave_idx[c] != SIZE_MAX && leave_idx[c] < last) continue;
      anyone = true;
      if (leave_idx[c] == SIZE_MAX)
        unresolved = true;
      else
        after = std::max(after, leave_idx[c] + 1);
    }
    if (!anyone && path.X[g] < 0) {
      W[g] = 0.0;
      continue;
    }
    double hit = path.horizon;
    if (!unresolved)
      for (std::size_t i = after; i < ev.size(); ++i)
        if (ev[i].kind == EventKind::Depart) {
          hit = ev[i].time;
          break;
        }
    W[g] = std::max(hit - t, 0.0);
  }
  return W;
}

double long_run_mean_in_system(const SimPath& p) {
  return (p.T.row(static_cast<Eigen::Index>(p.size() - 1)).sum() + p.int_queue.back()) / p.horizon;
}

}  // namespace

TEST_CASE("single server bookkeeping") {
  // lambda^1 = 1 - 0.9 = 0.1: one arrival every 10 time units.
  const auto sc = Scenario::make(PhaseType::exponential(1.0), ArrivalLaw::deterministic(), PatienceLaw::exponential(1.0),
                                 1.0, 0.9, Regime::Critical);
  RunOptions o;
  o.n = 1;
  o.horizon = 5.0;
  o.grid_dt = 0.01;
  o.initial = InitialCondition::Empty;
  o.first_arrival = 1e-9;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    o.seed = seed;
    const auto p = run(sc, o);
    check_invariants(p);
    for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(p.X[i] + 1 <= 1);
    CHECK(p.E.back() == 1);
    CHECK((p.D.back() == 0 || p.D.back() == 1));
    CHECK(p.A.back() == 0);
  }
}

TEST_CASE("invariants across scenarios and disciplines") {
  std::vector<Scenario> scenarios;
  scenarios.push_back(critical(coxian(), PatienceLaw::exponential(1.0)));
  scenarios.push_back(critical(mixed3(), PatienceLaw::exponential(0.5), 0.5, ArrivalLaw::erlang(3)));
  scenarios.push_back(critical(coxian(), PatienceLaw::deterministic(1.0), 0.0, ArrivalLaw::hyperexponential(3.0)));
  scenarios.push_back(critical(mixed3(), PatienceLaw::uniform(2.0), -0.5, ArrivalLaw::lognormal(0.5)));
  scenarios.push_back(critical(coxian(), PatienceLaw::weibull(2.0, 1.0), 1.0, ArrivalLaw::deterministic()));
  scenarios.push_back(critical(mixed3(), PatienceLaw::hyperexponential(0.3, 2.0, 0.5), 1.0));
  scenarios.push_back(Scenario::make(coxian(), ArrivalLaw::exponential(), PatienceLaw::exponential(1.0), 1.2, 0.0,
                                     Regime::Overloaded));
  for (const auto& sc : scenarios) {
    for (auto disc : {Discipline::Original, Discipline::Perturbed}) {
      if (disc == Discipline::Perturbed && !sc.patience.is_exponential()) continue;
      for (auto init : {InitialCondition::Empty, InitialCondition::StationaryPhaseMix}) {
        RunOptions o;
        o.n = 30;
        o.horizon = 8.0;
        o.grid_dt = 0.05;
        o.seed = 99;
        o.discipline = disc;
        o.initial = init;
        const auto p = run(sc, o);
        check_invariants(p);
        // W and zeta properties hold on every path.
        const auto z = zeta(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
          REQUIRE(z[i] <= p.t[i] + 1e-12);
          if (i > 0) REQUIRE(z[i] >= z[i - 1]);
          if (p.X[i] < 0) REQUIRE(p.W[i] == 0.0);
          REQUIRE(p.W[i] >= 0.0);
        }
        const auto ref = naive_wait(p);
        for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(p.W[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("queued abandoners against a direct count") {
  const auto sc = critical(coxian(), PatienceLaw::exponential(2.0), 0.0);
  RunOptions o;
  o.n = 20;
  o.horizon = 10.0;
  o.grid_dt = 0.02;
  o.seed = 4;
  const auto p = run(sc, o);
  std::vector<double> arrival(p.events.size() + 1, 0.0);
  std::vector<std::pair<double, double>> spans;
  for (const auto& e : p.events) {
    if (e.kind == EventKind::Arrive) arrival[static_cast<std::size_t>(e.customer)] = e.time;
    if (e.kind == EventKind::Abandon) spans.emplace_back(arrival[static_cast<std::size_t>(e.customer)], e.time);
  }
  REQUIRE(!spans.empty());
  for (std::size_t g = 0; g < p.size(); ++g) {
    std::int64_t count = 0;
    for (const auto& [a, b] : spans)
      if (a <= p.t[g] && p.t[g] < b) ++count;
    REQUIRE(p.AQ[g] == count);
    REQUIRE(p.AQ[g] <= p.queued(g));
  }
}

TEST_CASE("determinism") {
  const auto sc = critical(mixed3(), PatienceLaw::exponential(1.0));
  RunOptions o;
  o.n = 40;
  o.horizon = 5.0;
  o.seed = 12345;
  o.replication = 3;
  for (auto disc : {Discipline::Original, Discipline::Perturbed}) {
    o.discipline = disc;
    const auto a = run(sc, o), b = run(sc, o);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].time == b.events[i].time);
      CHECK(a.events[i].kind == b.events[i].kind);
      CHECK(a.events[i].customer == b.events[i].customer);
    }
    o.replication = 4;
    CHECK(run(sc, o).events.size() != a.events.size());
    o.replication = 3;
  }
}

TEST_CASE("birth-death stationary mean") {
  const int n = 5;
  const double lam = 6.0, alpha = 2.0;
  // pi_{j+1} = pi_j lam / (min(j+1, n) mu + max(j+1-n, 0) alpha)
  std::vector<double> pi{1.0};
  for (int j = 0; j < 400; ++j)
    pi.push_back(pi.back() * lam / (std::min(j + 1, n) * 1.0 + std::max(j + 1 - n, 0) * alpha));
  double total = 0.0, mean = 0.0;
  for (std::size_t j = 0; j < pi.size(); ++j) {
    total += pi[j];
    mean += static_cast<double>(j) * pi[j];
  }
  mean /= total;

  const auto sc = mmn(n, lam, alpha);
  CHECK(sc.arrival_rate(n) == doctest::Approx(lam));
  RunOptions o;
  o.n = n;
  o.horizon = 5000.0;
  o.grid_dt = 1.0;
  o.seed = 2;
  o.keep_event_log = false;
  for (auto disc : {Discipline::Original, Discipline::Perturbed}) {
    o.discipline = disc;
    const auto p = run(sc, o);
    CHECK(std::abs(long_run_mean_in_system(p) - mean) <= 0.03 * mean);
    // Abandonments against alpha times the integrated queue.
    const double A = static_cast<double>(p.A.back());
    CHECK(std::abs(A - alpha * p.int_queue.back()) <= 3.0 * std::sqrt(A));
  }
}

TEST_CASE("disciplines agree in law at a fixed time") {
  const auto sc = mmn(5, 6.0, 2.0);
  RunOptions o;
  o.n = 5;
  o.horizon = 5.0;
  o.grid_dt = 0.5;
  o.seed = 77;
  o.keep_event_log = false;
  std::vector<double> a, b;
  for (int r = 0; r < 500; ++r) {
    o.replication = static_cast<std::uint64_t>(r);
    o.discipline = Discipline::Original;
    a.push_back(static_cast<double>(run(sc, o).X.back()));
    o.discipline = Discipline::Perturbed;
    o.replication += 100000;
    b.push_back(static_cast<double>(run(sc, o).X.back()));
  }
  CHECK(stats::ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("run errors") {
  const auto sc = critical(coxian(), PatienceLaw::deterministic(1.0));
  RunOptions o;
  o.n = 10;
  o.discipline = Discipline::Perturbed;
  try {
    run(sc, o);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PerturbedNeedsExpPatience);
  }
  o.discipline = Discipline::Original;
  o.horizon = -1.0;
  try {
    run(sc, o);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidHorizon);
  }
  o.horizon = 1.0;
  o.keep_event_log = false;
  const auto p = run(sc, o);
  CHECK_THROWS_AS(virtual_wait_path(p), Error);
  CHECK_THROWS_AS(reconstruct_UV(p, sc), Error);
}

TEST_CASE("empty system has no wait") {
  const auto sc = critical(PhaseType::exponential(1.0), PatienceLaw::exponential(1.0), 0.0);
  RunOptions o;
  o.n = 10;
  o.horizon = 1.0;
  o.initial = InitialCondition::Empty;
  const auto p = run(sc, o);
  CHECK(p.X[0] == -10);
  CHECK(p.W[0] == 0.0);
}

TEST_CASE("drivers before the first event") {
  // Nothing but service clocks: U = X(0) - n mu t + e'R Z(0) t,
  // V = (I - p e')(Zhat(0) + R Z(0) t).
  const auto ph = mixed3();
  const auto sc = critical(ph, PatienceLaw::exponential(1.0), 0.0);
  RunOptions o;
  o.n = 4;
  o.horizon = 1.0;
  o.grid_dt = 0.001;
  o.first_arrival = 100.0;
  o.seed = 5;
  const auto p = run(sc, o);
  const auto [U, V] = reconstruct_UV(p, sc);
  double first_event = p.horizon;
  for (const auto& e : p.events)
    if (e.kind != EventKind::Init) {
      first_event = e.time;
      break;
    }
  const Eigen::VectorXd Z0 = p.Z.row(0).cast<double>().transpose();
  const Eigen::VectorXd Zhat0 = Z0 - 4.0 * ph.load();
  const int K = 3;
  const Eigen::MatrixXd center = Eigen::MatrixXd::Identity(K, K) - ph.initial() * Eigen::RowVectorXd::Ones(K);
  int checked = 0;
  for (std::size_t g = 0; g < p.size() && p.t[g] < first_event; ++g, ++checked) {
    const double t = p.t[g];
    const Eigen::VectorXd RZ = ph.rate_matrix() * Z0 * t;
    CHECK(U(g, 0) == doctest::Approx(static_cast<double>(p.X[0]) - 4.0 * ph.rate() * t + RZ.sum()));
    const Eigen::VectorXd v = center * (Zhat0 + RZ);
    for (int k = 0; k < K; ++k) CHECK(V(g, k) == doctest::Approx(v(k)).epsilon(1e-9).scale(1.0));
  }
  CHECK(checked > 0);

  // Empty start, arrivals only after t: U = -n - n mu t, V = -(I - p e') n gamma.
  o.initial = InitialCondition::Empty;
  o.first_arrival = 0.5;
  const auto q = run(sc, o);
  const auto [U2, V2] = reconstruct_UV(q, sc);
  for (std::size_t g = 0; q.t[g] < 0.5; ++g) {
    CHECK(U2(g, 0) == doctest::Approx(-4.0 - 4.0 * ph.rate() * q.t[g]));
    const Eigen::VectorXd v = -4.0 * center * ph.load();
    for (int k = 0; k < K; ++k) CHECK(V2(g, k) == doctest::Approx(v(k)).scale(1.0));
  }
}

TEST_CASE("representation through phi reproduces the simulated path") {
  PicardOptions opts;
  opts.quadrature = Quadrature::LeftPoint;
  for (const auto& sc : {critical(PhaseType::exponential(1.0), PatienceLaw::exponential(1.0)),
                         critical(mixed3(), PatienceLaw::exponential(0.7), 0.5)}) {
    RunOptions o;
    o.n = 100;
    o.horizon = 5.0;
    o.grid_dt = 1e-3;
    o.seed = 31;
    const auto p = run(sc, o);
    const auto [U, V] = reconstruct_UV(p, sc);
    const auto xz = phi_map(U, V, MapCoefficients::phi(sc.ph, sc.alpha()), opts);
    const auto Zhat = centered_allocation(p, sc);
    double ex = 0.0, ez = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ex = std::max(ex, std::abs(xz(i, 0) - static_cast<double>(p.X[i])));
      for (int k = 0; k < p.K; ++k) ez = std::max(ez, std::abs(xz(i, k + 1) - Zhat(i, k)));
    }
    CHECK(ex / 10.0 <= 0.05);
    CHECK(ez / 10.0 <= 0.05);
  }
}

TEST_CASE("overloaded representation through psi") {
  const auto sc = Scenario::make(coxian(), ArrivalLaw::exponential(), PatienceLaw::exponential(1.0), 1.0, 0.0,
                                 Regime::Overloaded);
  RunOptions o;
  o.n = 100;
  o.horizon = 5.0;
  o.grid_dt = 1e-3;
  o.seed = 8;
  o.initial = InitialCondition::Empty;
  const auto p = run(sc, o);
  const auto [U, V] = reconstruct_UV(p, sc);
  const auto [u, v] = idle_corrected_inputs(p, sc, U, V);
  PicardOptions opts;
  opts.quadrature = Quadrature::LeftPoint;
  const auto xz = psi_map(u, v, MapCoefficients::psi(sc.ph, sc.alpha()), opts);
  double ex = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) ex = std::max(ex, std::abs(xz(i, 0) - static_cast<double>(p.X[i])));
  CHECK(ex / 10.0 <= 0.05);
}

TEST_CASE("csv and event log formats") {
  const auto sc = critical(coxian(), PatienceLaw::exponential(1.0));
  RunOptions o;
  o.n = 3;
  o.horizon = 0.5;
  o.grid_dt = 0.1;
  const auto p = run(sc, o);
  std::ostringstream csv, log;
  p.write_csv(csv);
  p.write_event_log(log);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,X,Z1,Z2,Q1,Q2,A,B,D,W,AQ");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 6);
  std::istringstream lin(log.str());
  double t;
  std::string kind;
  long id;
  int phase;
  lin >> t >> kind >> id >> phase;
  CHECK(kind == "init");
  CHECK(phase >= 1);
  CHECK(phase <= 2);
}
