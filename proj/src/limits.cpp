#include "mshw/limits.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <iomanip>

#include "mshw/error.hpp"
#include "mshw/rng.hpp"

namespace mshw {
namespace {

constexpr double kPsdTol = 1e-10;

/// L with L L' = cov, from the eigen-decomposition with small negative
/// eigenvalues clamped to 0.
Eigen::MatrixXd gaussian_factor(const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -kPsdTol)
    throw Error(ErrorCode::NonPSDCovariance, "covariance has eigenvalue " + std::to_string(ev.minCoeff()));
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

void remove_mean(Eigen::Ref<Eigen::VectorXd> x) { x.array() -= x.mean(); }

}  // namespace

FluidConstants fluid(const Scenario& sc) {
  const double mu = sc.mu();
  const Eigen::VectorXd& gamma = sc.ph.load();
  return FluidConstants{sc.lambda, mu, mu, gamma, sc.q(), gamma};
}

DriverSet sample_drivers(const Scenario& sc, double dt, double horizon, std::uint64_t seed, const DriverOptions& opts) {
  const auto& ph = sc.ph;
  const int K = ph.phases();
  const Eigen::VectorXd& p = ph.initial();
  const Eigen::VectorXd& nu = ph.rates();
  const Eigen::VectorXd& gamma = ph.load();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
  const Eigen::MatrixXd center = I - p * Eigen::RowVectorXd::Ones(K);
  const Eigen::MatrixXd exit_map = I - ph.routing().transpose();
  const double mu = sc.mu();
  const bool overloaded = sc.regime == Regime::Overloaded;

  const double sd_E = std::sqrt(sc.lambda * sc.ca2() * dt);
  const Eigen::MatrixXd L0 = gaussian_factor(ph.routing_cov(0) * (mu * dt));
  std::vector<Eigen::MatrixXd> Lk;
  Eigen::VectorXd sd_S(K);
  for (int k = 1; k <= K; ++k) {
    const double rate = nu(k - 1) * gamma(k - 1);
    Lk.push_back(gaussian_factor(ph.routing_cov(k) * (rate * dt)));
    sd_S(k - 1) = std::sqrt(rate * dt);
  }
  const double sd_G = overloaded ? std::sqrt(sc.alpha() * sc.q() * dt) : 0.0;
  const Eigen::MatrixXd L_init = gaussian_factor(Eigen::MatrixXd(gamma.asDiagonal()) - gamma * gamma.transpose());

  DriverSet d;
  d.regime = sc.regime;
  d.E = GridPath(dt, horizon, 1);
  d.Phi0 = GridPath(dt, horizon, K);
  d.S = GridPath(dt, horizon, K);
  d.G = GridPath(dt, horizon, 1);
  d.M = GridPath(dt, horizon, K);
  d.U = GridPath(dt, horizon, 1);
  d.V = GridPath(dt, horizon, K);
  d.Z0 = Eigen::VectorXd::Zero(K);

  Rng rng = Rng::stream(seed, {0x11d1u});
  auto gauss = [&](int m) {
    Eigen::VectorXd g(m);
    for (int i = 0; i < m; ++i) g(i) = rng.normal();
    return g;
  };

  if (opts.random_initial) {
    d.Z0 = L_init * gauss(K);
    remove_mean(d.Z0);
  }
  const Eigen::VectorXd base_V = center * d.Z0;

  Eigen::VectorXd E = Eigen::VectorXd::Zero(1), G = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd Phi0 = Eigen::VectorXd::Zero(K), S = Eigen::VectorXd::Zero(K), M = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd step(K), dPhi(K), dS(K);
  for (std::size_t i = 0; i < d.U.size(); ++i) {
    if (i > 0 && opts.noise) {
      E(0) += sd_E * rng.normal();
      step = L0 * gauss(K);
      remove_mean(step);
      Phi0 += step;
      dPhi.setZero();
      for (int k = 0; k < K; ++k) dPhi += Lk[static_cast<std::size_t>(k)] * gauss(K);
      for (int k = 0; k < K; ++k) dS(k) = sd_S(k) * rng.normal();
      S += dS;
      M += dPhi - exit_map * dS;
      if (overloaded) G(0) += sd_G * rng.normal();
    }
    const double t = d.U.time(i);
    d.E(i, 0) = E(0);
    d.G(i, 0) = G(0);
    d.Phi0.row(i) = Phi0.transpose();
    d.S.row(i) = S.transpose();
    d.M.row(i) = M.transpose();
    d.U(i, 0) = d.X0 + E(0) - mu * sc.beta * t + M.sum() - G(0);
    d.V.row(i) = (base_V + Phi0 + center * M).transpose();
  }
  return d;
}

LimitPath diffusion_path(const Scenario& sc, const DriverSet& drivers, const PicardOptions& opts) {
  const int K = sc.ph.phases();
  const Eigen::VectorXd& p = sc.ph.initial();
  const double alpha = sc.alpha();
  GridPath xz = sc.regime == Regime::Critical ? phi_map(drivers.U, drivers.V, MapCoefficients::phi(sc.ph, alpha), opts)
                                              : psi_map(drivers.U, drivers.V, MapCoefficients::psi(sc.ph, alpha), opts);
  LimitPath out;
  out.K = K;
  out.X = xz.columns(0, 1);
  out.Z = xz.columns(1, K);
  out.Y = out.Z;
  out.A = GridPath(drivers.dt(), drivers.U.horizon(), 1);
  out.W = GridPath(drivers.dt(), drivers.U.horizon(), 1);
  const double h = drivers.dt();
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double xp = std::max(out.X(i, 0), 0.0);
    if (i > 0) acc += 0.5 * h * (std::max(out.X(i - 1, 0), 0.0) + xp);
    out.A(i, 0) = alpha * acc;
    out.W(i, 0) = xp / sc.mu();
    out.Y.row(i) += xp * p.transpose();
  }
  return out;
}

LimitPath diffusion_path(const Scenario& sc, double dt, double horizon, std::uint64_t seed, const DriverOptions& dopts,
                         const PicardOptions& opts) {
  return diffusion_path(sc, sample_drivers(sc, dt, horizon, seed, dopts), opts);
}

LimitPath y_sde_path(const Scenario& sc, const DriverSet& drivers) {
  if (sc.regime != Regime::Critical) throw Error(ErrorCode::WrongRegime, "the Y equation is stated for the critical regime");
  const int K = sc.ph.phases();
  const Eigen::VectorXd& p = sc.ph.initial();
  const Eigen::MatrixXd& R = sc.ph.rate_matrix();
  const double alpha = sc.alpha();
  const double mu = sc.mu();
  const Eigen::VectorXd kink = (R - alpha * Eigen::MatrixXd::Identity(K, K)) * p;
  const double h = drivers.dt();
  const double T = drivers.U.horizon();

  auto driver = [&](std::size_t i) -> Eigen::VectorXd {
    const double t = drivers.U.time(i);
    return drivers.Phi0.row(i).transpose() + p * (drivers.E(i, 0) - sc.beta * mu * t) + drivers.M.row(i).transpose();
  };

  LimitPath out;
  out.K = K;
  out.X = GridPath(h, T, 1);
  out.Z = GridPath(h, T, K);
  out.Y = GridPath(h, T, K);
  out.A = GridPath(h, T, 1);
  out.W = GridPath(h, T, 1);

  Eigen::VectorXd y = p * std::max(drivers.X0, 0.0) + drivers.Z0;
  Eigen::VectorXd prev = driver(0);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0) {
      const Eigen::VectorXd cur = driver(i);
      const double xp_old = std::max(y.sum(), 0.0);
      y += (cur - prev) - h * (R * y) + h * xp_old * kink;
      prev = cur;
    }
    const double x = y.sum();
    const double xp = std::max(x, 0.0);
    if (i > 0) acc += 0.5 * h * (std::max(out.X(i - 1, 0), 0.0) + xp);
    out.Y.row(i) = y.transpose();
    out.X(i, 0) = x;
    out.Z.row(i) = (y - p * xp).transpose();
    out.A(i, 0) = alpha * acc;
    out.W(i, 0) = xp / mu;
  }
  return out;
}

void LimitPath::write_csv(std::ostream& os, const Eigen::VectorXd& p) const {
  os << "t,X";
  for (int k = 1; k <= K; ++k) os << ",Z" << k;
  for (int k = 1; k <= K; ++k) os << ",Q" << k;
  os << ",A,B,D,W,AQ\n" << std::setprecision(12);
  for (std::size_t i = 0; i < size(); ++i) {
    const double xp = std::max(X(i, 0), 0.0);
    os << X.time(i) << ',' << X(i, 0);
    for (int k = 0; k < K; ++k) os << ',' << Z(i, k);
    for (int k = 0; k < K; ++k) os << ',' << p(k) * xp;
    os << ',' << A(i, 0) << ",0,0," << W(i, 0) << ",0\n";
  }
}

}  // namespace mshw
