#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mshw/error.hpp"
#include "mshw/ode_maps.hpp"
#include "mshw/rng.hpp"

using namespace mshw;

namespace {

PhaseType coxian() {
  Eigen::MatrixXd P(2, 2);
  P << 0.0, 0.5, 0.0, 0.0;
  return PhaseType::validate(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 2.0), P);
}

GridPath constant(double dt, double T, const Eigen::RowVectorXd& value) {
  GridPath g(dt, T, static_cast<int>(value.size()));
  for (std::size_t i = 0; i < g.size(); ++i) g.row(i) = value;
  return g;
}

/// Piecewise-constant random path with pieces of length `piece`.
GridPath random_steps(Rng& rng, double dt, double T, int dim, double piece, double scale) {
  GridPath g(dt, T, dim);
  Eigen::RowVectorXd level(dim);
  const auto every = static_cast<std::size_t>(std::lround(piece / dt));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i % every == 0)
      for (int c = 0; c < dim; ++c) level(c) = scale * (2.0 * rng.uniform() - 1.0);
    g.row(i) = level;
  }
  return g;
}

/// Value of a path at time t on a grid that contains t.
double at(const GridPath& g, double t, int c) { return g(static_cast<std::size_t>(std::lround(t / g.dt())), c); }

}  // namespace

TEST_CASE("zero input is a fixed point") {
  const auto ph = coxian();
  const GridPath zero(0.01, 2.0, 3);
  for (const auto& coeff : {MapCoefficients::phi(ph, 1.0), MapCoefficients::psi(ph, 1.0)})
    CHECK(picard_solve(coeff, zero).sup_norm() == 0.0);
  const auto general = MapCoefficients::general(
      2,
      [](std::span<const double> x, std::span<double> out) {
        out[0] = -std::sin(x[0]);
        out[1] = -x[1];
        out[2] = -0.5 * x[2] + 0.1 * x[1];
      },
      [](double x1, std::span<double> out) {
        out[0] = -0.3 * std::max(-x1, 0.0);
        out[1] = 0.0;
      },
      1.0);
  CHECK(picard_solve(general, zero).sup_norm() == 0.0);
  CHECK(phi_map(GridPath(0.01, 2.0, 1), GridPath(0.01, 2.0, 2), MapCoefficients::phi(ph, 1.0)).sup_norm() == 0.0);
  CHECK(psi_map(GridPath(0.01, 2.0, 1), GridPath(0.01, 2.0, 2), MapCoefficients::psi(ph, 1.0)).sup_norm() == 0.0);
}

TEST_CASE("phi with positive constant input matches a finer grid") {
  const auto expo = PhaseType::exponential(1.0);
  const auto coeff = MapCoefficients::phi(expo, 0.0);
  const double dt = 0.01;
  const auto coarse = phi_map(constant(dt, 1.0, Eigen::RowVectorXd::Ones(1)), GridPath(dt, 1.0, 1), coeff);
  const auto fine = phi_map(constant(dt / 10, 1.0, Eigen::RowVectorXd::Ones(1)), GridPath(dt / 10, 1.0, 1), coeff);
  CHECK(std::abs(at(coarse, 1.0, 0) - at(fine, 1.0, 0)) <= 5 * dt);
  // x stays positive, so z = 0 and x = 1 with alpha = 0.
  CHECK(at(coarse, 1.0, 0) == doctest::Approx(1.0));
}

TEST_CASE("phi with negative constant input relaxes towards zero") {
  // With K = 1, z = -x^- and x = u0 + nu int x^-, so x(t) = u0 exp(-nu t).
  const double nu = 1.5, u0 = -2.0, dt = 0.01, T = 3.0;
  const auto coeff = MapCoefficients::phi(PhaseType::exponential(nu), 0.7);
  const auto coarse = phi_map(constant(dt, T, Eigen::RowVectorXd::Constant(1, u0)), GridPath(dt, T, 1), coeff);
  const auto fine =
      phi_map(constant(dt / 10, T, Eigen::RowVectorXd::Constant(1, u0)), GridPath(dt / 10, T, 1), coeff);
  double sup_fine = 0.0, sup_exact = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const double t = coarse.time(i);
    sup_fine = std::max(sup_fine, std::abs(coarse(i, 0) - at(fine, t, 0)));
    sup_exact = std::max(sup_exact, std::abs(coarse(i, 0) - u0 * std::exp(-nu * t)));
    CHECK(coarse(i, 1) == doctest::Approx(-std::max(-coarse(i, 0), 0.0)));
  }
  CHECK(sup_fine <= 5 * dt);
  CHECK(sup_exact <= 5 * dt);
}

TEST_CASE("psi scalar linear case against its closed form") {
  const double alpha = 0.8, u0 = 1.7, T = 5.0;
  const auto coeff = MapCoefficients::psi(PhaseType::exponential(1.3), alpha);
  for (double dt : {0.01, 0.001}) {
    const auto xz = psi_map(constant(dt, T, Eigen::RowVectorXd::Constant(1, u0)), GridPath(dt, T, 1), coeff);
    double err = 0.0;
    for (std::size_t i = 0; i < xz.size(); ++i) {
      err = std::max(err, std::abs(xz(i, 0) - u0 * std::exp(-alpha * xz.time(i))));
      CHECK(xz(i, 1) == 0.0);
    }
    CHECK(err <= 5 * dt);
  }
}

TEST_CASE("positive homogeneity") {
  const auto ph = coxian();
  Rng rng(17);
  for (const auto& coeff : {MapCoefficients::phi(ph, 1.0), MapCoefficients::psi(ph, 1.0)}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto y = random_steps(rng, 0.01, 10.0, 3, 0.5, 2.0);
      const auto base = picard_solve(coeff, y);
      for (double a : {1e-3, 1e-2, 0.1, 0.5, 2.0, 10.0, 1e2, 1e3}) {
        const auto scaled = picard_solve(coeff, y.scaled(a));
        CHECK(GridPath::sup_distance(scaled, base.scaled(a)) <= a * 1e-9 + 1e-12);
      }
    }
  }
}

TEST_CASE("lipschitz bound on random pairs") {
  const auto ph = coxian();
  Rng rng(23);
  for (const auto& coeff : {MapCoefficients::phi(ph, 1.0), MapCoefficients::psi(ph, 1.0)}) {
    const double c = coeff.lipschitz_constant();
    for (double T : {0.2, 1.0}) {
      const double C = lipschitz_bound(c, T);
      for (int trial = 0; trial < 50; ++trial) {
        const auto y = random_steps(rng, 0.005, T, 3, 0.05, 3.0);
        const auto dy = random_steps(rng, 0.005, T, 3, 0.05, 0.5);
        GridPath y2 = y;
        y2.values() += dy.values();
        const double delta = GridPath::sup_distance(y, y2);
        const double out = GridPath::sup_distance(picard_solve(coeff, y), picard_solve(coeff, y2));
        CHECK(out <= C * delta);
      }
    }
  }
}

TEST_CASE("fixed-point residual") {
  const auto ph = coxian();
  Rng rng(5);
  PicardOptions opts;
  for (const auto& coeff : {MapCoefficients::phi(ph, 1.0), MapCoefficients::psi(ph, 1.0)}) {
    const auto y = random_steps(rng, 0.01, 10.0, 3, 0.3, 1.0);
    const auto x = picard_solve(coeff, y, opts);
    CHECK(picard_residual(coeff, y, x) <= 2 * opts.tol * std::max(1.0, y.sup_norm()));
  }
}

TEST_CASE("psi grid convergence is first order") {
  const auto ph = coxian();
  const auto coeff = MapCoefficients::psi(ph, 1.0);
  auto solve = [&](double dt) {
    GridPath y(dt, 4.0, 3);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double t = y.time(i);
      y(i, 0) = std::sin(2 * t) - 0.5 * t;
      y(i, 1) = 0.3 * std::cos(t) - 0.3;
      y(i, 2) = -y(i, 1);
    }
    return picard_solve(coeff, y);
  };
  double prev_diff = 0.0;
  for (double dt : {0.02, 0.01, 0.005}) {
    const auto a = solve(dt), b = solve(dt / 2);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (int c = 0; c < 3; ++c) diff = std::max(diff, std::abs(a(i, c) - b(2 * i, c)));
    CHECK(diff <= 1.0 * dt);
    if (prev_diff > 0) CHECK(diff < prev_diff);
    prev_diff = diff;
  }
}

TEST_CASE("general map reproduces a scalar ODE") {
  // x1' = -x1 + 1, x2' = -2 x2, g = 0
  const auto coeff = MapCoefficients::general(
      1,
      [](std::span<const double> x, std::span<double> out) {
        out[0] = -x[0] + 1.0;
        out[1] = -2.0 * x[1];
      },
      [](double, std::span<double> out) { out[0] = 0.0; }, 2.0);
  const double dt = 0.001;
  const auto y = constant(dt, 3.0, Eigen::RowVector2d(0.0, 1.0));
  const auto x = picard_solve(coeff, y);
  for (std::size_t i = 0; i < x.size(); i += 100) {
    const double t = x.time(i);
    CHECK(std::abs(x(i, 0) - (1 - std::exp(-t))) <= 5 * dt);
    CHECK(std::abs(x(i, 1) - std::exp(-2 * t)) <= 5 * dt);
  }
}

TEST_CASE("errors") {
  const auto ph = coxian();
  Rng rng(1);
  const auto y = random_steps(rng, 0.01, 5.0, 3, 0.5, 1.0);
  PicardOptions opts;
  opts.max_iter = 1;
  CHECK_THROWS_AS(picard_solve(MapCoefficients::phi(ph, 1.0), y, opts), Error);
  CHECK_THROWS_AS(picard_solve(MapCoefficients::phi(ph, 1.0), GridPath(0.01, 1.0, 2)), Error);
  CHECK_THROWS_AS(phi_map(y.columns(0, 1), y.columns(1, 2), MapCoefficients::psi(ph, 1.0)), Error);
  CHECK_THROWS_AS(GridPath(0.0, 1.0, 1), Error);
  try {
    picard_solve(MapCoefficients::phi(ph, 1.0), y, opts);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}
