#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mshw {

/// Deterministic vector-valued path sampled on the uniform grid
/// 0, dt, 2dt, ..., T. Row i holds the value at time i*dt.
///
/// Map inputs/outputs use dim = K+1 with column 0 the scalar (u or x)
/// coordinate and columns 1..K the vector (v or z) coordinate.
class GridPath {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  GridPath() = default;
  /// Zero path; throws InvalidGrid unless dt > 0 and horizon > 0.
  GridPath(double dt, double horizon, int dim);
  GridPath(double dt, Matrix values);

  static std::size_t steps_for(double dt, double horizon);

  double dt() const { return dt_; }
  double horizon() const { return dt_ * static_cast<double>(size() - 1); }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  int dim() const { return static_cast<int>(values_.cols()); }
  double time(std::size_t i) const { return dt_ * static_cast<double>(i); }

  double& operator()(std::size_t i, int c) { return values_(static_cast<Eigen::Index>(i), c); }
  double operator()(std::size_t i, int c) const { return values_(static_cast<Eigen::Index>(i), c); }
  auto row(std::size_t i) { return values_.row(static_cast<Eigen::Index>(i)); }
  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

  /// Columns [first, first+count) as a new path.
  GridPath columns(int first, int count) const;
  /// Side-by-side concatenation (same grid).
  static GridPath join(const GridPath& a, const GridPath& b);

  GridPath scaled(double a) const;
  /// sup_t max_c |x(t)_c|.
  double sup_norm() const;
  static double sup_distance(const GridPath& a, const GridPath& b);
  bool all_finite() const { return values_.allFinite(); }

  /// CSV with header "t,x,z1..zK" (names may be overridden).
  void write_csv(std::ostream& os, const std::vector<std::string>& names = {}) const;
  static GridPath read_csv(std::istream& is);

 private:
  double dt_ = 1.0;
  Matrix values_;
};

}  // namespace mshw
