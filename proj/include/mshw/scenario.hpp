#pragma once

#include <string>

#include "mshw/phase_type.hpp"
#include "mshw/rng.hpp"

namespace mshw {

/// Renewal interarrival law normalized to mean 1; the simulator divides by
/// the system arrival rate.
struct ArrivalLaw {
  enum class Family { Exponential, Deterministic, Erlang, Hyperexponential2, Lognormal };

  Family family = Family::Exponential;
  int erlang_k = 1;
  /// Squared coefficient of variation; only free for Hyperexponential2 (>= 1)
  /// and Lognormal (> 0).
  double scv_param = 1.0;

  static ArrivalLaw exponential();
  static ArrivalLaw deterministic();
  static ArrivalLaw erlang(int k);
  static ArrivalLaw hyperexponential(double scv);
  static ArrivalLaw lognormal(double scv);

  double scv() const;
  double sample(Rng& rng) const;
  std::string name() const;
};

/// Patience-time law with F(0) = 0 and finite hazard at zero.
struct PatienceLaw {
  enum class Family { Exponential, Deterministic, Uniform, Weibull, Hyperexponential2 };

  Family family = Family::Exponential;
  double a = 1.0;  // rate | value | upper end b | Weibull shape | branch-1 probability
  double b = 0.0;  // -    | -     | -           | Weibull scale | branch-1 rate
  double c = 0.0;  // -    | -     | -           | -             | branch-2 rate

  static PatienceLaw exponential(double rate);
  static PatienceLaw deterministic(double value);
  static PatienceLaw uniform(double upper);
  static PatienceLaw weibull(double shape, double scale);
  static PatienceLaw hyperexponential(double p1, double rate1, double rate2);

  /// alpha = lim_{x->0} F(x)/x.
  double hazard_at_zero() const;
  bool is_exponential() const { return family == Family::Exponential; }
  double sample(Rng& rng) const;
  std::string name() const;
};

enum class Regime { Critical, Overloaded };

/// Full model description of a sequence of G/Ph/n+GI systems.
struct Scenario {
  PhaseType ph;
  ArrivalLaw arrival;
  PatienceLaw patience;
  double lambda = 0.0;  // limiting arrival rate per server
  double beta = 0.0;
  Regime regime = Regime::Critical;

  /// Validates regime consistency; throws InvalidScenario.
  static Scenario make(PhaseType ph, ArrivalLaw arrival, PatienceLaw patience, double lambda, double beta,
                       Regime regime);

  double mu() const { return ph.rate(); }
  double alpha() const { return patience.hazard_at_zero(); }
  double ca2() const { return arrival.scv(); }
  /// Fluid queue level per server: (lambda - mu)/alpha when overloaded, 0 when critical.
  double q() const;
  /// lambda^n = lambda n - beta mu sqrt(n); throws InvalidScenario if not positive.
  double arrival_rate(int n) const;
};

}  // namespace mshw
