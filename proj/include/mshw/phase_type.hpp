#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mshw/rng.hpp"

namespace mshw {

/// One draw of a phase-type service time together with the phases it visited
/// (0-based phase indices, in order).
struct ServiceDraw {
  double duration = 0.0;
  std::vector<int> phases;
};

/// Phase-type law PH(p, nu, P): absorption time of a K-phase Markov chain
/// started from p, holding Exp(nu_k) in phase k and routing by the rows of P
/// (the row deficit is the exit probability).
///
/// Built only through validate(); immutable afterwards and safe to share
/// between threads.
class PhaseType {
 public:
  static constexpr int kMaxPhases = 32;
  static constexpr long long kMaxVisits = 1'000'000'000LL;

  static PhaseType validate(const Eigen::VectorXd& p, const Eigen::VectorXd& nu,
                            const Eigen::MatrixXd& P);

  /// Single exponential phase with the given rate.
  static PhaseType exponential(double rate);

  int phases() const { return static_cast<int>(p_.size()); }
  const Eigen::VectorXd& initial() const { return p_; }
  const Eigen::VectorXd& rates() const { return nu_; }
  const Eigen::MatrixXd& routing() const { return P_; }
  /// F = diag(nu)(P - I).
  const Eigen::MatrixXd& sub_generator() const { return F_; }
  /// R = (I - P')diag(nu).
  const Eigen::MatrixXd& rate_matrix() const { return R_; }
  double mean() const { return mean_; }
  double rate() const { return 1.0 / mean_; }
  double second_moment() const { return second_moment_; }
  /// Long-run fraction of busy servers in each phase, gamma = mu R^{-1} p.
  const Eigen::VectorXd& load() const { return gamma_; }

  /// P[v <= x] = 1 - p' exp(Fx) e, by uniformization.
  double cdf(double x) const;

  /// H^k: covariance of one multinomial routing draw from p^0 = p (k = 0) or
  /// from row k of P (k = 1..K).
  Eigen::MatrixXd routing_cov(int k) const;
  /// p^k as above.
  Eigen::VectorXd routing_vector(int k) const;

  ServiceDraw sample(Rng& rng) const;

  /// First phase of a new service (0-based).
  int draw_initial(Rng& rng) const;
  /// Phase following phase k, or phases() for absorption.
  int draw_next(int k, Rng& rng) const;

 private:
  PhaseType() = default;

  Eigen::VectorXd p_, nu_;
  Eigen::MatrixXd P_, F_, R_;
  Eigen::VectorXd gamma_;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
  std::vector<double> initial_cdf_;
  std::vector<std::vector<double>> row_cdf_;
};

}  // namespace mshw
