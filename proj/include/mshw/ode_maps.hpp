#pragma once

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "mshw/grid_path.hpp"
#include "mshw/phase_type.hpp"

namespace mshw {

enum class MapVariant { Phi, Psi, GeneralUpsilon };

/// How integrals of the iterate are discretized on the grid.
/// Trapezoid treats paths as piecewise linear; LeftPoint treats them as
/// piecewise constant (right-continuous), which is exact for step paths
/// sampled at their jump-free grid values.
enum class Quadrature { Trapezoid, LeftPoint };

/// Coefficients of the integral equation
///   x1(t) = y1(t) + int_0^t h1(x(s)) ds
///   x2(t) = y2(t) + int_0^t h2(x(s)) ds + g(x1(t)).
///
/// Phi:  h1 = -alpha x1^+ - e'R x2,  h2 = -(I - p e')R x2,  g(x1) = -p x1^-.
/// Psi:  h1 = -alpha x1   - e'R x2,  h2 = -(I - p e')R x2,  g = 0.
/// GeneralUpsilon: user-supplied Lipschitz h and g with declared constant c.
struct MapCoefficients {
  /// h(x) written into out; x and out both have K+1 entries (h1 then h2).
  using Drift = std::function<void(std::span<const double> x, std::span<double> out)>;
  /// g(x1) written into out (K entries).
  using Jump = std::function<void(double x1, std::span<double> out)>;

  MapVariant variant = MapVariant::Phi;
  double alpha = 0.0;
  Eigen::VectorXd p;
  Eigen::MatrixXd R;
  Drift h;
  Jump g;
  double declared_lipschitz = 0.0;

  static MapCoefficients phi(const PhaseType& ph, double alpha);
  static MapCoefficients psi(const PhaseType& ph, double alpha);
  static MapCoefficients phi(const Eigen::VectorXd& p, const Eigen::MatrixXd& R, double alpha);
  static MapCoefficients psi(const Eigen::VectorXd& p, const Eigen::MatrixXd& R, double alpha);
  static MapCoefficients general(int K, Drift h, Jump g, double lipschitz);

  int phases() const;
  /// Common max-norm Lipschitz constant c of h1, h2 and g.
  double lipschitz_constant() const;
};

struct PicardOptions {
  /// Stop when the sup-norm change of one sweep is <= tol * ||y||_T.
  /// The relative form keeps the solver exactly positively homogeneous.
  double tol = 1e-10;
  int max_iter = 200;
  Quadrature quadrature = Quadrature::Trapezoid;
  /// Grid steps per Picard window; 0 picks the largest window with
  /// (c + c^2) * window * dt <= 0.1. Use whole_horizon for one global window.
  std::size_t window_steps = 0;
  bool whole_horizon = false;
};

/// Picard iteration x^0 = y, x^{k+1} = T(x^k) marched over successive time
/// windows. Throws NoConvergence when a window needs more than max_iter sweeps.
GridPath picard_solve(const MapCoefficients& coeff, const GridPath& y, const PicardOptions& opts = {});

/// sup-norm of T(x) - x for one global sweep.
double picard_residual(const MapCoefficients& coeff, const GridPath& y, const GridPath& x,
                       Quadrature quadrature = Quadrature::Trapezoid);

/// (x, z) = Phi(u, v); returns a (K+1)-column path, column 0 = x.
GridPath phi_map(const GridPath& u, const GridPath& v, const MapCoefficients& coeff,
                 const PicardOptions& opts = {});
/// (x, z) = Psi(u, v).
GridPath psi_map(const GridPath& u, const GridPath& v, const MapCoefficients& coeff,
                 const PicardOptions& opts = {});

/// (1 + c) exp((c + c^2) T): Lipschitz constant of the solution map on [0, T].
double lipschitz_bound(double c, double horizon);

}  // namespace mshw
