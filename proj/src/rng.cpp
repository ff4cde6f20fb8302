#include "mshw/rng.hpp"

#include <cmath>
#include <vector>

#include "mshw/error.hpp"

namespace mshw {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonStochasticInit: return "NonStochasticInit";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::NotTransient: return "NotTransient";
    case ErrorCode::NonpositiveRate: return "NonpositiveRate";
    case ErrorCode::TooManyPhases: return "TooManyPhases";
    case ErrorCode::SamplerDiverged: return "SamplerDiverged";
    case ErrorCode::NegativeArgument: return "NegativeArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::PerturbedNeedsExpPatience: return "PerturbedNeedsExpPatience";
    case ErrorCode::MissingEventLog: return "MissingEventLog";
    case ErrorCode::NonPSDCovariance: return "NonPSDCovariance";
    case ErrorCode::WrongRegime: return "WrongRegime";
    case ErrorCode::InsufficientReplications: return "InsufficientReplications";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (auto k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  Rng r;
  r.engine_.seed(seq);
  return r;
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

}  // namespace mshw
