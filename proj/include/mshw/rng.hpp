#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mshw {

/// Random stream used by every sampler in the library: std::mt19937_64 with
/// variates by explicit inversion and polar formulas.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

  /// Independent stream keyed by a master seed and a list of indices
  /// (replication number, system size, purpose tag ...).
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double exponential(double rate);
  double normal();
  /// Index drawn from a cumulative table; returns cdf.size() when the draw
  /// falls above the last entry (used for "absorbing" outcomes).
  template <class Cdf>
  std::size_t discrete(const Cdf& cdf) {
    const double u = uniform();
    std::size_t i = 0;
    while (i < cdf.size() && u >= cdf[i]) ++i;
    return i;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mshw
