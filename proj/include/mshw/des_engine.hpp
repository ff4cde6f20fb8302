#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mshw/grid_path.hpp"
#include "mshw/scenario.hpp"

namespace mshw {

enum class Discipline {
  /// FIFO buffer, every waiting customer runs its own patience deadline,
  /// each busy server runs its own phase clock.
  Original,
  /// Pooled per-phase service queues (rate Z_k nu_k) and a single patience
  /// clock on the head of the buffer (rate queue-length * alpha).
  Perturbed,
};

enum class InitialCondition {
  Empty,
  /// All n servers busy with phases i.i.d. gamma, buffer empty.
  StationaryPhaseMix,
};

enum class EventKind : std::uint8_t { Init, Arrive, Start, Move, Depart, Abandon };

const char* to_string(EventKind kind);

/// One logged event. `phase` is 0-based: the first phase for Init/Arrive/
/// Start/Abandon, the phase entered for Move, the phase completed for Depart.
struct Event {
  double time;
  EventKind kind;
  std::int64_t customer;
  int phase;
};

struct RunOptions {
  int n = 1;
  double horizon = 1.0;
  double grid_dt = 0.01;
  std::uint64_t seed = 0;
  /// Replication index; the random stream is derived from (seed, replication).
  std::uint64_t replication = 0;
  Discipline discipline = Discipline::Original;
  InitialCondition initial = InitialCondition::StationaryPhaseMix;
  bool keep_event_log = true;
  /// Epoch of the first arrival; defaults to one interarrival time after 0.
  std::optional<double> first_arrival;
};

/// One replication sampled on the grid 0, dt, ..., horizon. Counts are
/// right-continuous: the value at t includes every event at time <= t.
struct SimPath {
  using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int n = 0;
  int K = 0;
  double dt = 0.0;
  double horizon = 0.0;
  std::vector<double> t;
  std::vector<std::int64_t> X;  // customers in system minus n
  CountMatrix Z;                // in service, by phase
  CountMatrix Q;                // waiting, by first phase
  std::vector<std::int64_t> A;  // cumulative abandonments
  std::vector<std::int64_t> B;  // cumulative service entries after time 0
  std::vector<std::int64_t> D;  // cumulative service completions
  std::vector<std::int64_t> E;  // cumulative arrivals
  Eigen::MatrixXd T;            // T_k(t) = int_0^t Z_k
  std::vector<double> int_queue;  // int_0^t X^+ (exact)
  std::vector<double> int_idle;   // int_0^t X^- (exact)
  std::vector<double> W;          // virtual waiting time (needs the log)
  std::vector<std::int64_t> AQ;   // waiting customers that will abandon (needs the log)
  bool has_log = false;
  std::vector<Event> events;

  std::size_t size() const { return t.size(); }
  std::int64_t busy(std::size_t i) const { return Z.row(static_cast<Eigen::Index>(i)).sum(); }
  std::int64_t queued(std::size_t i) const { return Q.row(static_cast<Eigen::Index>(i)).sum(); }

  /// CSV: t, X, Z1..ZK, Q1..QK, A, B, D, W, AQ.
  void write_csv(std::ostream& os) const;
  /// Lines "time kind customer_id phase" with 1-based phases.
  void write_event_log(std::ostream& os) const;
};

/// Simulates one replication. Throws InvalidHorizon, InvalidGrid,
/// PerturbedNeedsExpPatience or InvalidScenario.
SimPath run(const Scenario& sc, const RunOptions& opts);

/// W(t) on the grid: delay until a hypothetical infinitely patient arrival at
/// t would reach a server. Values that would need events beyond the horizon
/// are censored at horizon - t. Throws MissingEventLog.
std::vector<double> virtual_wait_path(const SimPath& path);

/// zeta(t) = inf{s >= 0 : s + W(s) > t}, evaluated over grid points s and
/// capped at t.
std::vector<double> zeta(const SimPath& path);

/// A_Q(t): customers waiting at t whose logged fate is abandonment (customers
/// still waiting at the horizon are not counted). Throws MissingEventLog.
std::vector<std::int64_t> queued_abandoners(const SimPath& path);

/// Exact pathwise drivers (U^n, V^n) built by replaying the event log:
///   U = X(0) + E - n mu t + e'M - A + alpha int X^+
///   V = (I - p e') Zhat(0) + Phi0hat(B) + (I - p e') M
/// with M = sum_k Phihat^k(S_k(T_k)) - (I - P') Shat(T).
/// Returns {U (1 column), V (K columns)} on the path grid.
std::pair<GridPath, GridPath> reconstruct_UV(const SimPath& path, const Scenario& sc);

/// Inputs for Psi that reproduce (X, Zhat) exactly once the idle-server terms
/// are moved into the drivers: U - alpha int X^-, V - p X^-.
std::pair<GridPath, GridPath> idle_corrected_inputs(const SimPath& path, const Scenario& sc, const GridPath& U,
                                                    const GridPath& V);

/// Zhat = Z - n gamma on the grid, as a K-column path.
GridPath centered_allocation(const SimPath& path, const Scenario& sc);

}  // namespace mshw
