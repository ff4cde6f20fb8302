#include "mshw/grid_path.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mshw/error.hpp"

namespace mshw {

std::size_t GridPath::steps_for(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0) || !std::isfinite(dt) || !std::isfinite(horizon))
    throw Error(ErrorCode::InvalidGrid, "grid needs dt > 0 and horizon > 0");
  // Tolerate representation error in horizon/dt (10/0.001 is not exactly 1e4).
  return static_cast<std::size_t>(std::floor(horizon / dt * (1.0 + 1e-12)));
}

GridPath::GridPath(double dt, double horizon, int dim)
    : dt_(dt), values_(Matrix::Zero(static_cast<Eigen::Index>(steps_for(dt, horizon) + 1), dim)) {}

GridPath::GridPath(double dt, Matrix values) : dt_(dt), values_(std::move(values)) {
  if (!(dt > 0.0) || values_.rows() < 2)
    throw Error(ErrorCode::InvalidGrid, "grid needs dt > 0 and at least two points");
}

GridPath GridPath::columns(int first, int count) const {
  return GridPath(dt_, values_.middleCols(first, count));
}

GridPath GridPath::join(const GridPath& a, const GridPath& b) {
  if (a.size() != b.size() || a.dt() != b.dt())
    throw Error(ErrorCode::DimensionMismatch, "joined paths must share a grid");
  Matrix m(a.values_.rows(), a.dim() + b.dim());
  m << a.values_, b.values_;
  return GridPath(a.dt(), std::move(m));
}

GridPath GridPath::scaled(double a) const { return GridPath(dt_, values_ * a); }

double GridPath::sup_norm() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

double GridPath::sup_distance(const GridPath& a, const GridPath& b) {
  if (a.size() != b.size() || a.dim() != b.dim())
    throw Error(ErrorCode::DimensionMismatch, "paths differ in shape");
  return (a.values_ - b.values_).cwiseAbs().maxCoeff();
}

void GridPath::write_csv(std::ostream& os, const std::vector<std::string>& names) const {
  os << "t";
  for (int c = 0; c < dim(); ++c) {
    if (c < static_cast<int>(names.size()))
      os << ',' << names[static_cast<std::size_t>(c)];
    else if (c == 0)
      os << ",x";
    else
      os << ",z" << c;
  }
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < size(); ++i) {
    os << time(i);
    for (int c = 0; c < dim(); ++c) os << ',' << (*this)(i, c);
    os << '\n';
  }
}

GridPath GridPath::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::ConfigError, "empty path file");
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> r;
    while (std::getline(ss, cell, ',')) {
      try {
        r.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "bad number '" + cell + "' in path file");
      }
    }
    if (r.size() < 2) throw Error(ErrorCode::ConfigError, "path rows need t and at least one value");
    if (!rows.empty() && r.size() != rows.front().size() + 1)
      throw Error(ErrorCode::ConfigError, "ragged path file");
    times.push_back(r.front());
    rows.emplace_back(r.begin() + 1, r.end());
  }
  if (rows.size() < 2) throw Error(ErrorCode::InvalidGrid, "path file needs at least two rows");
  const double dt = times[1] - times[0];
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - times[0] - dt * static_cast<double>(i)) > 1e-9 * std::max(1.0, times[i]))
      throw Error(ErrorCode::InvalidGrid, "path file times are not a uniform grid from t0");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  GridPath g(dt, std::move(m));
  if (!g.all_finite()) throw Error(ErrorCode::NonFinite, "path file has non-finite entries");
  return g;
}

}  // namespace mshw
