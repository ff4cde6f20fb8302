#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mshw/rng.hpp"
#include "mshw/stats.hpp"

using namespace mshw;

TEST_CASE("median, mean, variance") {
  CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(stats::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(stats::median({})));
  CHECK(stats::mean({1.0, 2.0, 3.0}) == 2.0);
  CHECK(stats::variance({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
}

TEST_CASE("ks distance on small samples") {
  CHECK(stats::ks_two_sample({1, 2, 3}, {1, 2, 3}).statistic == 0.0);
  CHECK(stats::ks_two_sample({1, 2, 3}, {4, 5, 6}).statistic == 1.0);
  // F_a jumps to 1/2 at 1 while F_b is still 0.
  CHECK(stats::ks_two_sample({1, 2}, {1.5, 3}).statistic == doctest::Approx(0.5));
  // Ties across samples are handled jointly.
  CHECK(stats::ks_two_sample({1, 1, 2, 2}, {1, 2}).statistic == 0.0);
}

TEST_CASE("kolmogorov survival reference values") {
  CHECK(stats::kolmogorov_survival(1.36) == doctest::Approx(0.0495).epsilon(0.02));
  CHECK(stats::kolmogorov_survival(1.63) == doctest::Approx(0.0098).epsilon(0.03));
  CHECK(stats::kolmogorov_survival(0.0) == 1.0);
  CHECK(stats::kolmogorov_survival(5.0) < 1e-20);
}

TEST_CASE("ks p-value is roughly uniform under the null") {
  Rng rng(8);
  int rejected = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(300), b(300);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    if (stats::ks_two_sample(a, b).p_value < 0.05) ++rejected;
  }
  CHECK(rejected >= 5);
  CHECK(rejected <= 40);
}
