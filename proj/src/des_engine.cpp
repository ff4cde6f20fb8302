#include "mshw/des_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <queue>

#include "mshw/error.hpp"

namespace mshw {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Init: return "init";
    case EventKind::Arrive: return "arrive";
    case EventKind::Start: return "start";
    case EventKind::Move: return "move";
    case EventKind::Depart: return "depart";
    case EventKind::Abandon: return "abandon";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Counters shared by both disciplines plus grid recording with exact
/// integrals of Z, X^+ and X^- between events.
class SystemState {
  int n_, K_;

 public:
  SystemState(const Scenario& sc, const RunOptions& opts, SimPath& path)
      : n_(opts.n), K_(sc.ph.phases()), Z(static_cast<std::size_t>(K_), 0), Q(static_cast<std::size_t>(K_), 0),
        T_(static_cast<std::size_t>(K_), 0.0), path_(path), log_(opts.keep_event_log ? &path.events : nullptr) {
    const std::size_t N = GridPath::steps_for(opts.grid_dt, opts.horizon) + 1;
    path.n = n_;
    path.K = K_;
    path.dt = opts.grid_dt;
    path.horizon = opts.horizon;
    path.has_log = opts.keep_event_log;
    path.t.resize(N);
    for (std::size_t i = 0; i < N; ++i) path.t[i] = opts.grid_dt * static_cast<double>(i);
    path.X.assign(N, 0);
    path.A.assign(N, 0);
    path.B.assign(N, 0);
    path.D.assign(N, 0);
    path.E.assign(N, 0);
    path.Z = SimPath::CountMatrix::Zero(static_cast<Eigen::Index>(N), K_);
    path.Q = SimPath::CountMatrix::Zero(static_cast<Eigen::Index>(N), K_);
    path.T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), K_);
    path.int_queue.assign(N, 0.0);
    path.int_idle.assign(N, 0.0);
  }

  std::int64_t X() const { return busy + waiting - n_; }
  bool idle_server() const { return busy < n_; }

  /// Records grid points strictly before t, then integrates up to t.
  void advance(double t) {
    while (next_grid_ < path_.size() && path_.t[next_grid_] < t) record(next_grid_++);
    const double h = t - last_;
    for (int k = 0; k < K_; ++k) T_[static_cast<std::size_t>(k)] += static_cast<double>(Z[static_cast<std::size_t>(k)]) * h;
    const auto x = X();
    int_pos_ += static_cast<double>(std::max<std::int64_t>(x, 0)) * h;
    int_neg_ += static_cast<double>(std::max<std::int64_t>(-x, 0)) * h;
    last_ = t;
  }

  void finish() {
    while (next_grid_ < path_.size()) record(next_grid_++);
  }

  void log(double time, EventKind kind, std::int64_t customer, int phase) {
    if (log_) log_->push_back(Event{time, kind, customer, phase});
  }

  std::vector<std::int64_t> Z, Q;
  std::int64_t busy = 0, waiting = 0, E = 0, A = 0, B = 0, D = 0;

 private:
  void record(std::size_t i) {
    const double h = path_.t[i] - last_;
    const auto x = X();
    const auto row = static_cast<Eigen::Index>(i);
    path_.X[i] = x;
    path_.A[i] = A;
    path_.B[i] = B;
    path_.D[i] = D;
    path_.E[i] = E;
    for (int k = 0; k < K_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      path_.Z(row, k) = Z[kk];
      path_.Q(row, k) = Q[kk];
      path_.T(row, k) = T_[kk] + static_cast<double>(Z[kk]) * h;
    }
    path_.int_queue[i] = int_pos_ + static_cast<double>(std::max<std::int64_t>(x, 0)) * h;
    path_.int_idle[i] = int_neg_ + static_cast<double>(std::max<std::int64_t>(-x, 0)) * h;
  }

  std::vector<double> T_;
  double int_pos_ = 0.0, int_neg_ = 0.0, last_ = 0.0;
  SimPath& path_;
  std::vector<Event>* log_;
  std::size_t next_grid_ = 0;
};

std::vector<double> load_cdf(const PhaseType& ph) {
  std::vector<double> c(static_cast<std::size_t>(ph.phases()));
  double acc = 0.0;
  for (int k = 0; k < ph.phases(); ++k) c[static_cast<std::size_t>(k)] = acc += ph.load()(k);
  c.back() = 1.0;
  return c;
}

struct Customer {
  int first_phase;
  int phase;
  bool waiting;
};

class OriginalSimulator {
 public:
  OriginalSimulator(const Scenario& sc, const RunOptions& opts, SimPath& path)
      : sc_(sc), opts_(opts), rng_(Rng::stream(opts.seed, {opts.replication})), state_(sc, opts, path),
        arrival_rate_(sc.arrival_rate(opts.n)) {}

  void run() {
    if (opts_.initial == InitialCondition::StationaryPhaseMix) {
      const auto cdf = load_cdf(sc_.ph);
      for (int i = 0; i < opts_.n; ++i) {
        const int k = static_cast<int>(std::min<std::size_t>(rng_.discrete(cdf), cdf.size() - 1));
        const auto id = new_customer(k);
        customers_[static_cast<std::size_t>(id)].waiting = false;
        customers_[static_cast<std::size_t>(id)].phase = k;
        ++state_.busy;
        ++state_.Z[static_cast<std::size_t>(k)];
        state_.log(0.0, EventKind::Init, id, k);
        push(rng_.exponential(sc_.ph.rates()(k)), Kind::Completion, id);
      }
    }
    push(opts_.first_arrival ? *opts_.first_arrival : sc_.arrival.sample(rng_) / arrival_rate_, Kind::Arrival, -1);

    while (!heap_.empty()) {
      const Item item = heap_.top();
      if (item.time > opts_.horizon) break;
      heap_.pop();
      state_.advance(item.time);
      switch (item.kind) {
        case Kind::Completion: complete(item.time, item.customer); break;
        case Kind::Arrival: arrive(item.time); break;
        case Kind::Abandonment: abandon(item.time, item.customer); break;
      }
    }
    state_.finish();
  }

 private:
  // Tie rank at equal times: completion, arrival, abandonment.
  enum class Kind : int { Completion = 0, Arrival = 1, Abandonment = 2 };

  struct Item {
    double time;
    Kind kind;
    std::uint64_t seq;
    std::int64_t customer;
    bool operator>(const Item& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
      return seq > o.seq;
    }
  };

  void push(double time, Kind kind, std::int64_t customer) { heap_.push(Item{time, kind, seq_++, customer}); }

  std::int64_t new_customer(int first_phase) {
    customers_.push_back(Customer{first_phase, first_phase, true});
    return static_cast<std::int64_t>(customers_.size()) - 1;
  }

  void start_service(double t, std::int64_t id) {
    auto& c = customers_[static_cast<std::size_t>(id)];
    c.waiting = false;
    c.phase = c.first_phase;
    ++state_.B;
    ++state_.busy;
    ++state_.Z[static_cast<std::size_t>(c.phase)];
    state_.log(t, EventKind::Start, id, c.phase);
    push(t + rng_.exponential(sc_.ph.rates()(c.phase)), Kind::Completion, id);
  }

  void arrive(double t) {
    const int k = sc_.ph.draw_initial(rng_);
    const double patience = sc_.patience.sample(rng_);
    const auto id = new_customer(k);
    ++state_.E;
    state_.log(t, EventKind::Arrive, id, k);
    if (state_.idle_server()) {
      start_service(t, id);
    } else {
      ++state_.waiting;
      ++state_.Q[static_cast<std::size_t>(k)];
      buffer_.push_back(id);
      push(t + patience, Kind::Abandonment, id);
    }
    push(t + sc_.arrival.sample(rng_) / arrival_rate_, Kind::Arrival, -1);
  }

  void complete(double t, std::int64_t id) {
    auto& c = customers_[static_cast<std::size_t>(id)];
    const int k = c.phase;
    const int next = sc_.ph.draw_next(k, rng_);
    --state_.Z[static_cast<std::size_t>(k)];
    if (next < sc_.ph.phases()) {
      c.phase = next;
      ++state_.Z[static_cast<std::size_t>(next)];
      state_.log(t, EventKind::Move, id, next);
      push(t + rng_.exponential(sc_.ph.rates()(next)), Kind::Completion, id);
      return;
    }
    --state_.busy;
    ++state_.D;
    state_.log(t, EventKind::Depart, id, k);
    // Abandoned customers are removed from the buffer lazily.
    while (!buffer_.empty() && !customers_[static_cast<std::size_t>(buffer_.front())].waiting) buffer_.pop_front();
    if (!buffer_.empty()) {
      const auto head = buffer_.front();
      buffer_.pop_front();
      --state_.waiting;
      --state_.Q[static_cast<std::size_t>(customers_[static_cast<std::size_t>(head)].first_phase)];
      start_service(t, head);
    }
  }

  void abandon(double t, std::int64_t id) {
    auto& c = customers_[static_cast<std::size_t>(id)];
    if (!c.waiting) return;
    c.waiting = false;
    --state_.waiting;
    --state_.Q[static_cast<std::size_t>(c.first_phase)];
    ++state_.A;
    state_.log(t, EventKind::Abandon, id, c.first_phase);
  }

  const Scenario& sc_;
  const RunOptions& opts_;
  Rng rng_;
  SystemState state_;
  double arrival_rate_;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap_;
  std::uint64_t seq_ = 0;
  std::vector<Customer> customers_;
  std::deque<std::int64_t> buffer_;
};

class PerturbedSimulator {
 public:
  PerturbedSimulator(const Scenario& sc, const RunOptions& opts, SimPath& path)
      : sc_(sc), opts_(opts), rng_(Rng::stream(opts.seed, {opts.replication})), state_(sc, opts, path),
        arrival_rate_(sc.arrival_rate(opts.n)), alpha_(sc.alpha()),
        service_queues_(static_cast<std::size_t>(sc.ph.phases())) {}

  void run() {
    const int K = sc_.ph.phases();
    if (opts_.initial == InitialCondition::StationaryPhaseMix) {
      const auto cdf = load_cdf(sc_.ph);
      for (int i = 0; i < opts_.n; ++i) {
        const int k = static_cast<int>(std::min<std::size_t>(rng_.discrete(cdf), cdf.size() - 1));
        const auto id = next_id_++;
        first_phase_.push_back(k);
        ++state_.busy;
        ++state_.Z[static_cast<std::size_t>(k)];
        service_queues_[static_cast<std::size_t>(k)].push_back(id);
        state_.log(0.0, EventKind::Init, id, k);
      }
    }
    double next_arrival =
        opts_.first_arrival ? *opts_.first_arrival : sc_.arrival.sample(rng_) / arrival_rate_;
    double now = 0.0;

    for (;;) {
      double rate = alpha_ * static_cast<double>(state_.waiting);
      for (int k = 0; k < K; ++k) rate += static_cast<double>(state_.Z[static_cast<std::size_t>(k)]) * sc_.ph.rates()(k);
      const double tau = rate > 0.0 ? now + rng_.exponential(rate) : kInf;

      if (tau < next_arrival) {
        if (tau > opts_.horizon) break;
        state_.advance(tau);
        now = tau;
        markov_event(now, rate * rng_.uniform());
      } else {
        if (next_arrival > opts_.horizon) break;
        state_.advance(next_arrival);
        now = next_arrival;
        arrive(now);
        next_arrival = now + sc_.arrival.sample(rng_) / arrival_rate_;
      }
    }
    state_.finish();
  }

 private:
  void start_service(double t, std::int64_t id) {
    const int k = first_phase_[static_cast<std::size_t>(id)];
    ++state_.B;
    ++state_.busy;
    ++state_.Z[static_cast<std::size_t>(k)];
    service_queues_[static_cast<std::size_t>(k)].push_back(id);
    state_.log(t, EventKind::Start, id, k);
  }

  void arrive(double t) {
    const int k = sc_.ph.draw_initial(rng_);
    const auto id = next_id_++;
    first_phase_.push_back(k);
    ++state_.E;
    state_.log(t, EventKind::Arrive, id, k);
    if (state_.idle_server()) {
      start_service(t, id);
    } else {
      ++state_.waiting;
      ++state_.Q[static_cast<std::size_t>(k)];
      buffer_.push_back(id);
    }
  }

  void markov_event(double t, double u) {
    const int K = sc_.ph.phases();
    for (int k = 0; k < K; ++k) {
      const double r = static_cast<double>(state_.Z[static_cast<std::size_t>(k)]) * sc_.ph.rates()(k);
      if (u < r || (state_.waiting == 0 && k == last_busy_phase())) {
        complete(t, k);
        return;
      }
      u -= r;
    }
    // Head of the buffer abandons.
    const auto id = buffer_.front();
    buffer_.pop_front();
    --state_.waiting;
    --state_.Q[static_cast<std::size_t>(first_phase_[static_cast<std::size_t>(id)])];
    ++state_.A;
    state_.log(t, EventKind::Abandon, id, first_phase_[static_cast<std::size_t>(id)]);
  }

  /// Guards against u landing past the last busy phase through rounding.
  int last_busy_phase() const {
    for (int k = sc_.ph.phases() - 1; k >= 0; --k)
      if (state_.Z[static_cast<std::size_t>(k)] > 0) return k;
    return -1;
  }

  void complete(double t, int k) {
    auto& sq = service_queues_[static_cast<std::size_t>(k)];
    const auto id = sq.front();
    sq.pop_front();
    --state_.Z[static_cast<std::size_t>(k)];
    const int next = sc_.ph.draw_next(k, rng_);
    if (next < sc_.ph.phases()) {
      ++state_.Z[static_cast<std::size_t>(next)];
      service_queues_[static_cast<std::size_t>(next)].push_back(id);
      state_.log(t, EventKind::Move, id, next);
      return;
    }
    --state_.busy;
    ++state_.D;
    state_.log(t, EventKind::Depart, id, k);
    if (!buffer_.empty()) {
      const auto head = buffer_.front();
      buffer_.pop_front();
      --state_.waiting;
      --state_.Q[static_cast<std::size_t>(first_phase_[static_cast<std::size_t>(head)])];
      start_service(t, head);
    }
  }

  const Scenario& sc_;
  const RunOptions& opts_;
  Rng rng_;
  SystemState state_;
  double arrival_rate_;
  double alpha_;
  std::vector<std::deque<std::int64_t>> service_queues_;
  std::deque<std::int64_t> buffer_;
  std::vector<int> first_phase_;
  std::int64_t next_id_ = 0;
};

void require_log(const SimPath& path) {
  if (!path.has_log) throw Error(ErrorCode::MissingEventLog, "replication was run without an event log");
}

}  // namespace

SimPath run(const Scenario& sc, const RunOptions& opts) {
  if (!(opts.horizon > 0.0) || !std::isfinite(opts.horizon))
    throw Error(ErrorCode::InvalidHorizon, "horizon must be positive and finite");
  if (opts.n < 1) throw Error(ErrorCode::InvalidScenario, "system size n must be >= 1");
  if (opts.discipline == Discipline::Perturbed && !sc.patience.is_exponential())
    throw Error(ErrorCode::PerturbedNeedsExpPatience, "the perturbed discipline is defined for exponential patience");
  if (opts.first_arrival && !(*opts.first_arrival >= 0.0))
    throw Error(ErrorCode::InvalidHorizon, "first arrival epoch must be >= 0");

  SimPath path;
  if (opts.discipline == Discipline::Original)
    OriginalSimulator(sc, opts, path).run();
  else
    PerturbedSimulator(sc, opts, path).run();

  if (path.has_log) {
    path.W = virtual_wait_path(path);
    path.AQ = queued_abandoners(path);
  }
  return path;
}

std::vector<double> virtual_wait_path(const SimPath& path) {
  require_log(path);
  const auto& ev = path.events;
  const std::int64_t Ne = static_cast<std::int64_t>(ev.size());
  const std::int64_t still_waiting = std::numeric_limits<std::int64_t>::max();

  std::int64_t max_id = -1;
  for (const auto& e : ev) max_id = std::max(max_id, e.customer);
  // Index of the event at which each customer left the buffer.
  std::vector<std::int64_t> leave(static_cast<std::size_t>(max_id + 1), still_waiting);
  for (std::int64_t i = 0; i < Ne; ++i) {
    const auto& e = ev[static_cast<std::size_t>(i)];
    auto& l = leave[static_cast<std::size_t>(e.customer)];
    if ((e.kind == EventKind::Start || e.kind == EventKind::Abandon) && l == still_waiting) l = i;
  }
  std::vector<std::int64_t> next_depart(static_cast<std::size_t>(Ne + 1), Ne);
  for (std::int64_t i = Ne - 1; i >= 0; --i)
    next_depart[static_cast<std::size_t>(i)] =
        ev[static_cast<std::size_t>(i)].kind == EventKind::Depart ? i : next_depart[static_cast<std::size_t>(i + 1)];

  std::vector<double> W(path.size(), 0.0);
  std::int64_t j = 0;          // events with time <= t
  std::int64_t last_leave = -1;  // max leave index over customers arrived so far
  for (std::size_t g = 0; g < path.size(); ++g) {
    const double t = path.t[g];
    while (j < Ne && ev[static_cast<std::size_t>(j)].time <= t) {
      const auto& e = ev[static_cast<std::size_t>(j)];
      if (e.kind == EventKind::Arrive) last_leave = std::max(last_leave, leave[static_cast<std::size_t>(e.customer)]);
      ++j;
    }
    auto served_at = [&](std::int64_t from) {
      if (from >= Ne) return path.horizon;
      const auto d = next_depart[static_cast<std::size_t>(from)];
      return d < Ne ? ev[static_cast<std::size_t>(d)].time : path.horizon;
    };
    if (last_leave >= j) {
      // Someone is still waiting at t: the virtual customer takes the first
      // server released after the last of them has left the buffer.
      W[g] = (last_leave == still_waiting ? path.horizon : served_at(last_leave + 1)) - t;
    } else if (path.X[g] < 0) {
      W[g] = 0.0;
    } else {
      W[g] = served_at(j) - t;
    }
    W[g] = std::max(W[g], 0.0);
  }
  return W;
}

std::vector<double> zeta(const SimPath& path) {
  const auto& W = path.W.empty() ? virtual_wait_path(path) : path.W;
  std::vector<double> z(path.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    while (j < i && !(path.t[j] + W[j] > path.t[i])) ++j;
    z[i] = j < i ? path.t[j] : path.t[i];
  }
  return z;
}

std::vector<std::int64_t> queued_abandoners(const SimPath& path) {
  require_log(path);
  std::int64_t max_id = -1;
  for (const auto& e : path.events) max_id = std::max(max_id, e.customer);
  std::vector<double> arrival(static_cast<std::size_t>(max_id + 1), 0.0);
  std::vector<std::int64_t> diff(path.size() + 1, 0);
  auto first_grid_at_or_after = [&](double time) {
    return static_cast<std::size_t>(std::lower_bound(path.t.begin(), path.t.end(), time) - path.t.begin());
  };
  for (const auto& e : path.events) {
    if (e.kind == EventKind::Arrive) arrival[static_cast<std::size_t>(e.customer)] = e.time;
    if (e.kind == EventKind::Abandon) {
      // Counted on grid points t with arrival <= t < abandonment.
      const auto g0 = first_grid_at_or_after(arrival[static_cast<std::size_t>(e.customer)]);
      const auto g1 = first_grid_at_or_after(e.time);
      if (g0 < g1) {
        ++diff[g0];
        --diff[g1];
      }
    }
  }
  std::vector<std::int64_t> aq(path.size());
  std::int64_t acc = 0;
  for (std::size_t g = 0; g < path.size(); ++g) aq[g] = acc += diff[g];
  return aq;
}

std::pair<GridPath, GridPath> reconstruct_UV(const SimPath& path, const Scenario& sc) {
  require_log(path);
  const int K = sc.ph.phases();
  if (path.K != K) throw Error(ErrorCode::DimensionMismatch, "path and scenario disagree on K");
  const auto& ph = sc.ph;
  const Eigen::VectorXd& p = ph.initial();
  const Eigen::MatrixXd& P = ph.routing();
  const Eigen::VectorXd& nu = ph.rates();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
  const Eigen::MatrixXd center = I - p * Eigen::RowVectorXd::Ones(K);
  const Eigen::MatrixXd exit_map = I - P.transpose();
  const double n = path.n;
  const double mu = sc.mu();
  const double alpha = sc.alpha();

  std::int64_t max_id = -1;
  for (const auto& e : path.events) max_id = std::max(max_id, e.customer);
  std::vector<int> phase_of(static_cast<std::size_t>(max_id + 1), -1);

  Eigen::VectorXd Z = Eigen::VectorXd::Zero(K), T = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd completions = Eigen::VectorXd::Zero(K), entries = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd routed = Eigen::MatrixXd::Zero(K, K);  // routed(k, l): moves k -> l
  double E = 0, A = 0, B = 0, in_system = 0, int_pos = 0, last = 0;

  auto integrate_to = [&](double t) {
    const double h = t - last;
    T += Z * h;
    int_pos += std::max(in_system - n, 0.0) * h;
    last = t;
  };

  std::size_t j = 0;
  const auto& ev = path.events;
  while (j < ev.size() && ev[j].kind == EventKind::Init) {
    Z(ev[j].phase) += 1;
    in_system += 1;
    phase_of[static_cast<std::size_t>(ev[j].customer)] = ev[j].phase;
    ++j;
  }
  const double X0 = in_system - n;
  const Eigen::VectorXd Zhat0 = Z - n * ph.load();

  GridPath U(path.dt, path.horizon, 1), V(path.dt, path.horizon, K);
  for (std::size_t g = 0; g < path.size(); ++g) {
    const double t = path.t[g];
    for (; j < ev.size() && ev[j].time <= t; ++j) {
      const auto& e = ev[j];
      integrate_to(e.time);
      auto& cur = phase_of[static_cast<std::size_t>(e.customer)];
      switch (e.kind) {
        case EventKind::Init:
          Z(e.phase) += 1;
          in_system += 1;
          cur = e.phase;
          break;
        case EventKind::Arrive:
          E += 1;
          in_system += 1;
          break;
        case EventKind::Start:
          B += 1;
          entries(e.phase) += 1;
          Z(e.phase) += 1;
          cur = e.phase;
          break;
        case EventKind::Move:
          completions(cur) += 1;
          routed(cur, e.phase) += 1;
          Z(cur) -= 1;
          Z(e.phase) += 1;
          cur = e.phase;
          break;
        case EventKind::Depart:
          completions(e.phase) += 1;
          Z(e.phase) -= 1;
          in_system -= 1;
          cur = -1;
          break;
        case EventKind::Abandon:
          A += 1;
          in_system -= 1;
          break;
      }
    }
    integrate_to(t);

    const Eigen::VectorXd S_hat = completions - nu.cwiseProduct(T);
    Eigen::VectorXd M = -exit_map * S_hat;
    for (int k = 0; k < K; ++k) M += routed.row(k).transpose() - completions(k) * P.row(k).transpose();

    U(g, 0) = X0 + E - n * mu * t + M.sum() - A + alpha * int_pos;
    V.row(g) = (center * Zhat0 + (entries - B * p) + center * M).transpose();
  }
  return {std::move(U), std::move(V)};
}

std::pair<GridPath, GridPath> idle_corrected_inputs(const SimPath& path, const Scenario& sc, const GridPath& U,
                                                    const GridPath& V) {
  if (U.size() != path.size() || V.size() != path.size())
    throw Error(ErrorCode::DimensionMismatch, "drivers are not on the path grid");
  GridPath u = U, v = V;
  const Eigen::VectorXd& p = sc.ph.initial();
  for (std::size_t g = 0; g < path.size(); ++g) {
    u(g, 0) -= sc.alpha() * path.int_idle[g];
    const double idle = static_cast<double>(std::max<std::int64_t>(-path.X[g], 0));
    v.row(g) -= idle * p.transpose();
  }
  return {std::move(u), std::move(v)};
}

GridPath centered_allocation(const SimPath& path, const Scenario& sc) {
  GridPath z(path.dt, path.horizon, path.K);
  const Eigen::VectorXd center = static_cast<double>(path.n) * sc.ph.load();
  for (std::size_t g = 0; g < path.size(); ++g)
    for (int k = 0; k < path.K; ++k)
      z(g, k) = static_cast<double>(path.Z(static_cast<Eigen::Index>(g), k)) - center(k);
  return z;
}

void SimPath::write_csv(std::ostream& os) const {
  os << "t,X";
  for (int k = 1; k <= K; ++k) os << ",Z" << k;
  for (int k = 1; k <= K; ++k) os << ",Q" << k;
  os << ",A,B,D,W,AQ\n" << std::setprecision(12);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << t[i] << ',' << X[i];
    for (int k = 0; k < K; ++k) os << ',' << Z(r, k);
    for (int k = 0; k < K; ++k) os << ',' << Q(r, k);
    os << ',' << A[i] << ',' << B[i] << ',' << D[i] << ',' << (W.empty() ? 0.0 : W[i]) << ','
       << (AQ.empty() ? 0 : AQ[i]) << '\n';
  }
}

void SimPath::write_event_log(std::ostream& os) const {
  os << std::setprecision(17);
  for (const auto& e : events) os << e.time << ' ' << to_string(e.kind) << ' ' << e.customer << ' ' << e.phase + 1 << '\n';
}

}  // namespace mshw
