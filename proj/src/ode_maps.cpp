#include "mshw/ode_maps.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mshw/error.hpp"

namespace mshw {
namespace {

/// Flattened evaluator for h and g.
class Field {
 public:
  explicit Field(const MapCoefficients& c) : c_(c), K_(c.phases()) {
    if (c.variant == MapVariant::GeneralUpsilon) {
      if (!c.h || !c.g) throw Error(ErrorCode::DimensionMismatch, "general map needs h and g");
      return;
    }
    eR_.resize(static_cast<std::size_t>(K_));
    B_.resize(static_cast<std::size_t>(K_ * K_));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K_, K_);
    const Eigen::RowVectorXd eR = c.R.colwise().sum();
    const Eigen::MatrixXd B = (I - c.p * Eigen::RowVectorXd::Ones(K_)) * c.R;
    for (int j = 0; j < K_; ++j) eR_[static_cast<std::size_t>(j)] = eR(j);
    for (int i = 0; i < K_; ++i)
      for (int j = 0; j < K_; ++j) B_[static_cast<std::size_t>(i * K_ + j)] = B(i, j);
  }

  int dim() const { return K_ + 1; }

  void h(const double* x, double* out) const {
    if (c_.variant == MapVariant::GeneralUpsilon) {
      c_.h(std::span<const double>(x, static_cast<std::size_t>(K_ + 1)),
           std::span<double>(out, static_cast<std::size_t>(K_ + 1)));
      return;
    }
    const double* z = x + 1;
    double s = 0.0;
    for (int j = 0; j < K_; ++j) s += eR_[static_cast<std::size_t>(j)] * z[j];
    const double lin = c_.variant == MapVariant::Phi ? std::max(x[0], 0.0) : x[0];
    out[0] = -c_.alpha * lin - s;
    for (int i = 0; i < K_; ++i) {
      double r = 0.0;
      const double* b = &B_[static_cast<std::size_t>(i * K_)];
      for (int j = 0; j < K_; ++j) r += b[j] * z[j];
      out[i + 1] = -r;
    }
  }

  /// Adds g(x1) to out (K entries).
  void add_g(double x1, double* out) const {
    switch (c_.variant) {
      case MapVariant::Phi: {
        const double neg = std::max(-x1, 0.0);
        if (neg != 0.0)
          for (int i = 0; i < K_; ++i) out[i] -= c_.p(i) * neg;
        return;
      }
      case MapVariant::Psi:
        return;
      case MapVariant::GeneralUpsilon: {
        gbuf_.assign(static_cast<std::size_t>(K_), 0.0);
        c_.g(x1, gbuf_);
        for (int i = 0; i < K_; ++i) out[i] += gbuf_[static_cast<std::size_t>(i)];
        return;
      }
    }
  }

 private:
  const MapCoefficients& c_;
  int K_;
  std::vector<double> eR_, B_;
  mutable std::vector<double> gbuf_;
};

void check_input(const MapCoefficients& coeff, const GridPath& y) {
  if (y.dim() != coeff.phases() + 1)
    throw Error(ErrorCode::DimensionMismatch, "driver path must have K+1 columns");
  if (!y.all_finite()) throw Error(ErrorCode::NonFinite, "driver path has non-finite values");
}

/// One Jacobi sweep of T over grid rows (start, end], given the integral of h
/// up to `start` and the current iterate. Writes T(x) into `next` and returns
/// the sup-norm change.
double sweep(const Field& f, const GridPath& y, const GridPath& x, std::size_t start, std::size_t end,
             const std::vector<double>& integral_at_start, Quadrature quad, GridPath& next,
             std::vector<double>& hbuf) {
  const int D = f.dim();
  const double dt = y.dt();
  const std::size_t len = end - start + 1;
  hbuf.resize(len * static_cast<std::size_t>(D));
  for (std::size_t j = 0; j < len; ++j) f.h(&x.values()(static_cast<Eigen::Index>(start + j), 0), &hbuf[j * D]);

  std::vector<double> acc(integral_at_start);
  double change = 0.0;
  for (std::size_t i = start + 1; i <= end; ++i) {
    const double* hp = &hbuf[(i - 1 - start) * D];
    const double* hc = &hbuf[(i - start) * D];
    if (quad == Quadrature::Trapezoid)
      for (int c = 0; c < D; ++c) acc[c] += 0.5 * dt * (hp[c] + hc[c]);
    else
      for (int c = 0; c < D; ++c) acc[c] += dt * hp[c];
    double* out = &next.values()(static_cast<Eigen::Index>(i), 0);
    for (int c = 0; c < D; ++c) out[c] = y(i, c) + acc[c];
    f.add_g(out[0], out + 1);
    for (int c = 0; c < D; ++c) change = std::max(change, std::abs(out[c] - x(i, c)));
  }
  return change;
}

void advance_integral(const Field& f, const GridPath& x, std::size_t start, std::size_t end, Quadrature quad,
                      std::vector<double>& integral) {
  const int D = f.dim();
  std::vector<double> hp(D), hc(D);
  f.h(&x.values()(static_cast<Eigen::Index>(start), 0), hp.data());
  for (std::size_t i = start + 1; i <= end; ++i) {
    f.h(&x.values()(static_cast<Eigen::Index>(i), 0), hc.data());
    for (int c = 0; c < D; ++c)
      integral[c] += quad == Quadrature::Trapezoid ? 0.5 * x.dt() * (hp[c] + hc[c]) : x.dt() * hp[c];
    std::swap(hp, hc);
  }
}

}  // namespace

MapCoefficients MapCoefficients::phi(const Eigen::VectorXd& p, const Eigen::MatrixXd& R, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::NegativeArgument, "alpha must be >= 0");
  if (R.rows() != p.size() || R.cols() != p.size())
    throw Error(ErrorCode::DimensionMismatch, "p and R disagree on K");
  MapCoefficients c;
  c.variant = MapVariant::Phi;
  c.alpha = alpha;
  c.p = p;
  c.R = R;
  return c;
}

MapCoefficients MapCoefficients::psi(const Eigen::VectorXd& p, const Eigen::MatrixXd& R, double alpha) {
  MapCoefficients c = phi(p, R, alpha);
  c.variant = MapVariant::Psi;
  return c;
}

MapCoefficients MapCoefficients::phi(const PhaseType& ph, double alpha) {
  return phi(ph.initial(), ph.rate_matrix(), alpha);
}

MapCoefficients MapCoefficients::psi(const PhaseType& ph, double alpha) {
  return psi(ph.initial(), ph.rate_matrix(), alpha);
}

MapCoefficients MapCoefficients::general(int K, Drift h, Jump g, double lipschitz) {
  if (K < 1) throw Error(ErrorCode::DimensionMismatch, "K must be positive");
  if (!(lipschitz > 0.0)) throw Error(ErrorCode::NegativeArgument, "Lipschitz constant must be positive");
  MapCoefficients c;
  c.variant = MapVariant::GeneralUpsilon;
  c.p = Eigen::VectorXd::Zero(K);
  c.R = Eigen::MatrixXd::Zero(K, K);
  c.h = std::move(h);
  c.g = std::move(g);
  c.declared_lipschitz = lipschitz;
  return c;
}

int MapCoefficients::phases() const { return static_cast<int>(p.size()); }

double MapCoefficients::lipschitz_constant() const {
  if (variant == MapVariant::GeneralUpsilon) return declared_lipschitz;
  const int K = phases();
  const Eigen::MatrixXd B = (Eigen::MatrixXd::Identity(K, K) - p * Eigen::RowVectorXd::Ones(K)) * R;
  const double c1 = alpha + R.colwise().sum().cwiseAbs().sum();
  const double c2 = B.cwiseAbs().rowwise().sum().maxCoeff();
  const double cg = variant == MapVariant::Phi ? p.cwiseAbs().maxCoeff() : 0.0;
  return std::max({c1, c2, cg});
}

double lipschitz_bound(double c, double horizon) { return (1.0 + c) * std::exp((c + c * c) * horizon); }

GridPath picard_solve(const MapCoefficients& coeff, const GridPath& y, const PicardOptions& opts) {
  check_input(coeff, y);
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::NegativeArgument, "tol must be positive");
  if (opts.max_iter < 1) throw Error(ErrorCode::NegativeArgument, "max_iter must be positive");

  const Field f(coeff);
  const int D = f.dim();
  const std::size_t last = y.size() - 1;
  const double threshold = opts.tol * y.sup_norm();

  std::size_t window = opts.window_steps;
  if (opts.whole_horizon) {
    window = last;
  } else if (window == 0) {
    const double c = coeff.lipschitz_constant();
    const double w = c > 0.0 ? 0.1 / ((c + c * c) * y.dt()) : static_cast<double>(last);
    window = static_cast<std::size_t>(std::clamp(std::floor(w), 1.0, static_cast<double>(last)));
  }

  GridPath x = y;
  f.add_g(x(0, 0), &x.values()(0, 1));
  GridPath next = x;
  std::vector<double> integral(static_cast<std::size_t>(D), 0.0);
  std::vector<double> hbuf;

  for (std::size_t start = 0; start < last;) {
    const std::size_t end = std::min(last, start + window);
    // Start the window from y shifted by the offset reached at its left end.
    for (std::size_t i = start + 1; i <= end; ++i)
      for (int c = 0; c < D; ++c) x(i, c) = y(i, c) + (x(start, c) - y(start, c));

    for (int it = 1;; ++it) {
      const double change = sweep(f, y, x, start, end, integral, opts.quadrature, next, hbuf);
      x.values().middleRows(static_cast<Eigen::Index>(start + 1), static_cast<Eigen::Index>(end - start)) =
          next.values().middleRows(static_cast<Eigen::Index>(start + 1), static_cast<Eigen::Index>(end - start));
      if (!std::isfinite(change))
        throw Error(ErrorCode::NoConvergence, "Picard iterate became non-finite");
      if (change <= threshold) break;
      if (it >= opts.max_iter)
        throw Error(ErrorCode::NoConvergence, "window at t=" + std::to_string(y.time(start)) +
                                                  " still moving by " + std::to_string(change) + " after " +
                                                  std::to_string(opts.max_iter) + " sweeps");
    }
    advance_integral(f, x, start, end, opts.quadrature, integral);
    start = end;
  }
  return x;
}

double picard_residual(const MapCoefficients& coeff, const GridPath& y, const GridPath& x, Quadrature quadrature) {
  check_input(coeff, y);
  if (x.size() != y.size() || x.dim() != y.dim())
    throw Error(ErrorCode::DimensionMismatch, "iterate and driver differ in shape");
  const Field f(coeff);
  GridPath next = x;
  next.row(0) = y.row(0);
  f.add_g(next(0, 0), &next.values()(0, 1));
  double change = (next.row(0) - x.row(0)).cwiseAbs().maxCoeff();
  std::vector<double> integral(static_cast<std::size_t>(f.dim()), 0.0), hbuf;
  change = std::max(change, sweep(f, y, x, 0, y.size() - 1, integral, quadrature, next, hbuf));
  return change;
}

namespace {

GridPath solve_pair(MapVariant expected, const GridPath& u, const GridPath& v, const MapCoefficients& coeff,
                    const PicardOptions& opts) {
  if (coeff.variant != expected)
    throw Error(ErrorCode::DimensionMismatch, "coefficients built for a different map variant");
  if (u.dim() != 1 || v.dim() != coeff.phases())
    throw Error(ErrorCode::DimensionMismatch, "u must be scalar and v must have K columns");
  return picard_solve(coeff, GridPath::join(u, v), opts);
}

}  // namespace

GridPath phi_map(const GridPath& u, const GridPath& v, const MapCoefficients& coeff, const PicardOptions& opts) {
  return solve_pair(MapVariant::Phi, u, v, coeff, opts);
}

GridPath psi_map(const GridPath& u, const GridPath& v, const MapCoefficients& coeff, const PicardOptions& opts) {
  return solve_pair(MapVariant::Psi, u, v, coeff, opts);
}

}  // namespace mshw
