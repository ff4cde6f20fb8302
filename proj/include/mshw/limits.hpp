#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

#include "mshw/grid_path.hpp"
#include "mshw/ode_maps.hpp"
#include "mshw/scenario.hpp"

namespace mshw {

/// Fluid-level rates and levels of a scenario.
struct FluidConstants {
  double arrival_rate;  // E-bar(t) = lambda t
  double entry_rate;    // B-bar(t) = mu t
  double departure_rate;  // D-bar(t) = mu t
  Eigen::VectorXd busy_time_rate;  // T-bar(t) = gamma t
  double queue_level;   // X-bar = q
  Eigen::VectorXd allocation;  // Z-bar = gamma
};

FluidConstants fluid(const Scenario& sc);

struct DriverOptions {
  /// false zeroes every Brownian increment.
  bool noise = true;
  /// false starts from X(0) = 0, Z(0) = 0 instead of the multinomial
  /// fluctuation of the stationary phase mix.
  bool random_initial = true;
};

/// One realization of the Brownian drivers on a uniform grid. Time changes
/// are folded into the per-step variances.
struct DriverSet {
  Regime regime = Regime::Critical;
  GridPath E;     // 1 column, variance lambda c_a^2 per unit time
  GridPath Phi0;  // K columns, covariance mu H^0 per unit time; e'Phi0 = 0
  GridPath S;     // K columns, S_k with variance nu_k gamma_k per unit time
  GridPath G;     // 1 column, variance alpha q per unit time (zero when critical)
  GridPath M;     // sum_k Phi^k - (I - P')S
  double X0 = 0.0;
  Eigen::VectorXd Z0;
  GridPath U;  // 1 column
  GridPath V;  // K columns

  double dt() const { return U.dt(); }
  std::size_t size() const { return U.size(); }
};

DriverSet sample_drivers(const Scenario& sc, double dt, double horizon, std::uint64_t seed,
                         const DriverOptions& opts = {});

struct LimitPath {
  int K = 0;
  GridPath X;  // 1 column
  GridPath Z;  // K columns
  GridPath Y;  // K columns, Z + p X^+
  GridPath A;  // 1 column, alpha int X^+
  GridPath W;  // 1 column, X^+ / mu

  std::size_t size() const { return X.size(); }
  /// Same columns as a simulated path: t, X, Z1..ZK, Q1..QK, A, B, D, W, AQ
  /// with Q = p X^+ and B, D, AQ written as 0.
  void write_csv(std::ostream& os, const Eigen::VectorXd& p) const;
};

/// (X, Z) = Phi(U, V) in the critical regime, Psi(U, V) when overloaded.
LimitPath diffusion_path(const Scenario& sc, const DriverSet& drivers, const PicardOptions& opts = {});
LimitPath diffusion_path(const Scenario& sc, double dt, double horizon, std::uint64_t seed,
                         const DriverOptions& dopts = {}, const PicardOptions& opts = {});

/// Euler scheme for the Y SDE on the given drivers; critical regime only.
LimitPath y_sde_path(const Scenario& sc, const DriverSet& drivers);

}  // namespace mshw
