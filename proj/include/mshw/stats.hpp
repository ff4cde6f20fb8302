#pragma once

#include <vector>

namespace mshw::stats {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b| with the
/// asymptotic p-value (Stephens' small-sample correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// P[K > lambda] for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

double median(std::vector<double> x);
double mean(const std::vector<double>& x);
/// Unbiased sample variance.
double variance(const std::vector<double>& x);

}  // namespace mshw::stats
