#include "mshw/scenario.hpp"

#include <cmath>

#include "mshw/error.hpp"

namespace mshw {

ArrivalLaw ArrivalLaw::exponential() { return {}; }

ArrivalLaw ArrivalLaw::deterministic() {
  ArrivalLaw a;
  a.family = Family::Deterministic;
  return a;
}

ArrivalLaw ArrivalLaw::erlang(int k) {
  if (k < 1) throw Error(ErrorCode::InvalidScenario, "Erlang order must be >= 1");
  ArrivalLaw a;
  a.family = Family::Erlang;
  a.erlang_k = k;
  return a;
}

ArrivalLaw ArrivalLaw::hyperexponential(double scv) {
  if (!(scv >= 1.0) || !std::isfinite(scv))
    throw Error(ErrorCode::InvalidScenario, "hyperexponential interarrivals need scv >= 1");
  ArrivalLaw a;
  a.family = Family::Hyperexponential2;
  a.scv_param = scv;
  return a;
}

ArrivalLaw ArrivalLaw::lognormal(double scv) {
  if (!(scv > 0.0) || !std::isfinite(scv))
    throw Error(ErrorCode::InvalidScenario, "lognormal interarrivals need scv > 0");
  ArrivalLaw a;
  a.family = Family::Lognormal;
  a.scv_param = scv;
  return a;
}

double ArrivalLaw::scv() const {
  switch (family) {
    case Family::Exponential: return 1.0;
    case Family::Deterministic: return 0.0;
    case Family::Erlang: return 1.0 / erlang_k;
    case Family::Hyperexponential2:
    case Family::Lognormal: return scv_param;
  }
  return 1.0;
}

double ArrivalLaw::sample(Rng& rng) const {
  switch (family) {
    case Family::Exponential:
      return rng.exponential(1.0);
    case Family::Deterministic:
      return 1.0;
    case Family::Erlang: {
      double s = 0.0;
      for (int i = 0; i < erlang_k; ++i) s += rng.exponential(erlang_k);
      return s;
    }
    case Family::Hyperexponential2: {
      // Balanced means: p1/r1 = p2/r2 = 1/2.
      const double p1 = 0.5 * (1.0 + std::sqrt((scv_param - 1.0) / (scv_param + 1.0)));
      return rng.uniform() < p1 ? rng.exponential(2.0 * p1) : rng.exponential(2.0 * (1.0 - p1));
    }
    case Family::Lognormal: {
      const double s2 = std::log1p(scv_param);
      return std::exp(-0.5 * s2 + std::sqrt(s2) * rng.normal());
    }
  }
  return 1.0;
}

std::string ArrivalLaw::name() const {
  switch (family) {
    case Family::Exponential: return "exponential";
    case Family::Deterministic: return "deterministic";
    case Family::Erlang: return "erlang";
    case Family::Hyperexponential2: return "hyperexp2";
    case Family::Lognormal: return "lognormal";
  }
  return "?";
}

PatienceLaw PatienceLaw::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw Error(ErrorCode::InvalidScenario, "exponential patience needs a positive rate");
  PatienceLaw p;
  p.family = Family::Exponential;
  p.a = rate;
  return p;
}

PatienceLaw PatienceLaw::deterministic(double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(ErrorCode::InvalidScenario, "deterministic patience must be positive (F(0) = 0)");
  PatienceLaw p;
  p.family = Family::Deterministic;
  p.a = value;
  return p;
}

PatienceLaw PatienceLaw::uniform(double upper) {
  if (!(upper > 0.0) || !std::isfinite(upper))
    throw Error(ErrorCode::InvalidScenario, "uniform patience needs b > 0");
  PatienceLaw p;
  p.family = Family::Uniform;
  p.a = upper;
  return p;
}

PatienceLaw PatienceLaw::weibull(double shape, double scale) {
  if (!(shape >= 1.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw Error(ErrorCode::InvalidScenario, "Weibull patience needs shape >= 1 (finite hazard at 0) and scale > 0");
  PatienceLaw p;
  p.family = Family::Weibull;
  p.a = shape;
  p.b = scale;
  return p;
}

PatienceLaw PatienceLaw::hyperexponential(double p1, double rate1, double rate2) {
  if (!(p1 > 0.0 && p1 < 1.0) || !(rate1 > 0.0) || !(rate2 > 0.0))
    throw Error(ErrorCode::InvalidScenario, "hyperexponential patience needs 0 < p1 < 1 and positive rates");
  PatienceLaw p;
  p.family = Family::Hyperexponential2;
  p.a = p1;
  p.b = rate1;
  p.c = rate2;
  return p;
}

double PatienceLaw::hazard_at_zero() const {
  switch (family) {
    case Family::Exponential: return a;
    case Family::Deterministic: return 0.0;
    case Family::Uniform: return 1.0 / a;
    case Family::Weibull: return a == 1.0 ? 1.0 / b : 0.0;
    case Family::Hyperexponential2: return a * b + (1.0 - a) * c;
  }
  return 0.0;
}

double PatienceLaw::sample(Rng& rng) const {
  switch (family) {
    case Family::Exponential: return rng.exponential(a);
    case Family::Deterministic: return a;
    case Family::Uniform: return a * rng.uniform();
    case Family::Weibull: return b * std::pow(-std::log(rng.uniform()), 1.0 / a);
    case Family::Hyperexponential2: return rng.uniform() < a ? rng.exponential(b) : rng.exponential(c);
  }
  return 0.0;
}

std::string PatienceLaw::name() const {
  switch (family) {
    case Family::Exponential: return "exponential";
    case Family::Deterministic: return "deterministic";
    case Family::Uniform: return "uniform";
    case Family::Weibull: return "weibull";
    case Family::Hyperexponential2: return "hyperexp2";
  }
  return "?";
}

Scenario Scenario::make(PhaseType ph, ArrivalLaw arrival, PatienceLaw patience, double lambda, double beta,
                        Regime regime) {
  Scenario s{std::move(ph), arrival, patience, lambda, beta, regime};
  const double mu = s.mu();
  if (!std::isfinite(lambda) || !std::isfinite(beta) || !(lambda > 0.0))
    throw Error(ErrorCode::InvalidScenario, "lambda must be positive and beta finite");
  if (regime == Regime::Critical && std::abs(lambda - mu) > 1e-9 * mu)
    throw Error(ErrorCode::InvalidScenario, "critical regime needs lambda = mu = " + std::to_string(mu));
  if (regime == Regime::Overloaded) {
    if (!(lambda > mu)) throw Error(ErrorCode::InvalidScenario, "overloaded regime needs lambda > mu");
    if (!patience.is_exponential())
      throw Error(ErrorCode::InvalidScenario, "overloaded regime needs exponential patience");
  }
  return s;
}

double Scenario::q() const { return regime == Regime::Overloaded ? (lambda - mu()) / alpha() : 0.0; }

double Scenario::arrival_rate(int n) const {
  const double r = lambda * n - beta * mu() * std::sqrt(static_cast<double>(n));
  if (!(r > 0.0))
    throw Error(ErrorCode::InvalidScenario, "arrival rate lambda^n is not positive for n=" + std::to_string(n));
  return r;
}

}  // namespace mshw
