#include "mshw/phase_type.hpp"

#include <algorithm>
#include <cmath>

#include "mshw/error.hpp"

namespace mshw {
namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kMinRcond = 1e-12;
constexpr double kUniformizationTail = 1e-12;

std::vector<double> cumulative(const Eigen::VectorXd& w) {
  std::vector<double> c(static_cast<std::size_t>(w.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w(i);
    c[static_cast<std::size_t>(i)] = acc;
  }
  return c;
}

}  // namespace

PhaseType PhaseType::validate(const Eigen::VectorXd& p, const Eigen::VectorXd& nu,
                              const Eigen::MatrixXd& P) {
  const Eigen::Index K = p.size();
  if (K < 1 || nu.size() != K || P.rows() != K || P.cols() != K)
    throw Error(ErrorCode::DimensionMismatch, "p, nu and P must describe the same number of phases");
  if (K > kMaxPhases)
    throw Error(ErrorCode::TooManyPhases, "at most 32 phases are supported");
  if (!p.allFinite() || !nu.allFinite() || !P.allFinite())
    throw Error(ErrorCode::NonFinite, "phase-type parameters must be finite");

  if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > kStochasticTol)
    throw Error(ErrorCode::NonStochasticInit, "p must be a probability vector");
  if ((nu.array() <= 0.0).any())
    throw Error(ErrorCode::NonpositiveRate, "every phase rate must be positive");
  for (Eigen::Index i = 0; i < K; ++i)
    if (P(i, i) != 0.0)
      throw Error(ErrorCode::NonzeroDiagonal, "P(" + std::to_string(i) + "," + std::to_string(i) + ") must be 0");
  if ((P.array() < 0.0).any())
    throw Error(ErrorCode::NotTransient, "routing probabilities must be nonnegative");
  for (Eigen::Index i = 0; i < K; ++i)
    if (P.row(i).sum() > 1.0 + kStochasticTol)
      throw Error(ErrorCode::NotTransient, "row " + std::to_string(i) + " of P sums above 1");

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(I - P);
  if (!(lu.rcond() >= kMinRcond))
    throw Error(ErrorCode::NotTransient, "I - P is singular to working precision");

  PhaseType ph;
  ph.p_ = p;
  ph.nu_ = nu;
  ph.P_ = P;
  ph.F_ = nu.asDiagonal() * (P - I);
  ph.R_ = (I - P.transpose()) * nu.asDiagonal();

  // Mean and second moment from (-F) x = e.
  Eigen::PartialPivLU<Eigen::MatrixXd> neg_f(-ph.F_);
  const Eigen::VectorXd x1 = neg_f.solve(Eigen::VectorXd::Ones(K));
  const Eigen::VectorXd x2 = neg_f.solve(x1);
  ph.mean_ = p.dot(x1);
  ph.second_moment_ = 2.0 * p.dot(x2);

  Eigen::PartialPivLU<Eigen::MatrixXd> r_lu(ph.R_);
  ph.gamma_ = r_lu.solve(ph.rate() * p);

  ph.initial_cdf_ = cumulative(p);
  ph.initial_cdf_.back() = 1.0;
  ph.row_cdf_.reserve(static_cast<std::size_t>(K));
  for (Eigen::Index i = 0; i < K; ++i) ph.row_cdf_.push_back(cumulative(P.row(i).transpose()));
  return ph;
}

PhaseType PhaseType::exponential(double rate) {
  return validate(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, rate),
                  Eigen::MatrixXd::Zero(1, 1));
}

double PhaseType::cdf(double x) const {
  if (!(x >= 0.0)) throw Error(ErrorCode::NegativeArgument, "cdf needs x >= 0");
  if (x == 0.0) return 0.0;

  // exp(Fx) = sum_j Pois(j; Lx) Q^j with Q = I + F/L substochastic.
  const double L = nu_.maxCoeff();
  const Eigen::Index K = p_.size();
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(K, K) + F_ / L;
  const double lx = L * x;

  Eigen::RowVectorXd v = p_.transpose();
  double survival = 0.0;
  double weight_sum = 0.0;
  for (long j = 0;; ++j) {
    const double w = std::exp(-lx + static_cast<double>(j) * std::log(lx) - std::lgamma(j + 1.0));
    survival += w * v.sum();
    weight_sum += w;
    if (1.0 - weight_sum < kUniformizationTail && static_cast<double>(j) > lx) break;
    if (j > 10'000'000) break;
    v = v * Q;
  }
  return std::clamp(1.0 - survival, 0.0, 1.0);
}

Eigen::VectorXd PhaseType::routing_vector(int k) const {
  if (k < 0 || k > phases())
    throw Error(ErrorCode::IndexOutOfRange, "routing index must lie in 0..K");
  if (k == 0) return p_;
  return P_.row(k - 1).transpose();
}

Eigen::MatrixXd PhaseType::routing_cov(int k) const {
  const Eigen::VectorXd pk = routing_vector(k);
  Eigen::MatrixXd H = -pk * pk.transpose();
  H.diagonal() += pk;
  return H;
}

int PhaseType::draw_initial(Rng& rng) const {
  return static_cast<int>(std::min<std::size_t>(rng.discrete(initial_cdf_), initial_cdf_.size() - 1));
}

int PhaseType::draw_next(int k, Rng& rng) const {
  return static_cast<int>(rng.discrete(row_cdf_[static_cast<std::size_t>(k)]));
}

ServiceDraw PhaseType::sample(Rng& rng) const {
  ServiceDraw d;
  int k = draw_initial(rng);
  long long visits = 0;
  while (k < phases()) {
    if (++visits > kMaxVisits)
      throw Error(ErrorCode::SamplerDiverged, "phase walk exceeded 1e9 visits");
    d.phases.push_back(k);
    d.duration += rng.exponential(nu_(k));
    k = draw_next(k, rng);
  }
  return d;
}

}  // namespace mshw
