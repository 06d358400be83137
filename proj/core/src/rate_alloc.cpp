#include "netlab/rate_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "netlab/sim.hpp"

namespace netlab::rates {

void validate(const RateNetwork& net) {
  for (double c : net.capacities)
    if (!(c > 0.0)) throw RateError("link capacity must be positive");
  const int links = static_cast<int>(net.capacities.size());
  for (std::size_t i = 0; i < net.connections.size(); ++i) {
    const ConnectionSpec& c = net.connections[i];
    if (c.id != static_cast<int>(i)) throw RateError("connection ids must be 0..n-1 in order");
    if (!(c.demand > 0.0)) throw RateError("demand must be positive (connection " + std::to_string(c.id) + ")");
    if (c.route.empty()) throw RateError("empty route (connection " + std::to_string(c.id) + ")");
    for (int l : c.route)
      if (l < 0 || l >= links) throw RateError("unknown link " + std::to_string(l));
  }
}

std::vector<double> maxmin_oracle(const RateNetwork& net) {
  validate(net);
  const std::size_t n = net.connections.size();
  std::vector<double> rate(n, 0.0);
  std::vector<bool> frozen(n, false);
  std::vector<double> residual = net.capacities;
  std::size_t remaining = n;
  double level = 0.0;
  while (remaining > 0) {
    std::vector<int> users(residual.size(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (!frozen[i])
        for (int l : net.connections[i].route) ++users[l];
    double delta = kUnlimited;
    for (std::size_t l = 0; l < residual.size(); ++l)
      if (users[l] > 0) delta = std::min(delta, residual[l] / users[l]);
    for (std::size_t i = 0; i < n; ++i)
      if (!frozen[i]) delta = std::min(delta, net.connections[i].demand - level);
    delta = std::max(delta, 0.0);
    level += delta;
    for (std::size_t l = 0; l < residual.size(); ++l) residual[l] -= delta * users[l];

    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      const ConnectionSpec& c = net.connections[i];
      const bool capped = c.demand - level <= 1e-12 * std::max(1.0, level);
      const bool saturated = std::ranges::any_of(c.route, [&](int l) {
        return residual[l] <= 1e-12 * net.capacities[l];
      });
      if (capped || saturated) {
        rate[i] = capped ? c.demand : level;
        frozen[i] = true;
        --remaining;
      }
    }
  }
  return rate;
}

int distinct_values(const std::vector<double>& rates) {
  std::vector<double> sorted = rates;
  std::ranges::sort(sorted);
  int count = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (i == 0 || sorted[i] - sorted[i - 1] > 1e-9 * std::max(1.0, std::abs(sorted[i]))) ++count;
  return count;
}

// ---------------------------------------------------------------------------

LinkAllocState::LinkAllocState(double capacity) : capacity_(capacity) {
  if (!(capacity > 0.0)) throw RateError("link capacity must be positive");
}

void LinkAllocState::register_connection(int id) {
  if (id < 0) throw RateError("negative connection id");
  if (static_cast<std::size_t>(id) >= slots_.size()) slots_.resize(id + 1);
  if (slots_[id].registered) return;
  slots_[id].registered = true;
  ++active_;
}

LinkAllocState::Slot& LinkAllocState::slot(int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= slots_.size() || !slots_[id].registered)
    throw RateError("connection " + std::to_string(id) + " not registered on link");
  return slots_[id];
}

bool LinkAllocState::bottlenecked_elsewhere(int id) const {
  return id >= 0 && static_cast<std::size_t>(id) < slots_.size() && slots_[id].elsewhere;
}

double LinkAllocState::advertised_rate() const {
  return std::max(0.0, (capacity_ - elsewhere_sum_) / std::max(1, active_ - elsewhere_count_));
}

RmCell LinkAllocState::process(Phase phase, RmCell cell) {
  Slot& s = slot(cell.connection);
  last_updates_ = 0;
  const double others_sum = elsewhere_sum_ - (s.elsewhere ? s.recorded : 0.0);
  const int here = active_ - elsewhere_count_ + (s.elsewhere ? 1 : 0);
  const double share = std::max(0.0, (capacity_ - others_sum) / here);

  if (phase == Phase::Backward) {
    const bool elsewhere = cell.rate < share;
    if (s.elsewhere) {
      elsewhere_sum_ -= s.recorded;
      --elsewhere_count_;
      last_updates_ += 2;
    }
    s.elsewhere = elsewhere;
    if (elsewhere) {
      s.recorded = cell.rate;
      elsewhere_sum_ += cell.rate;
      ++elsewhere_count_;
      last_updates_ += 2;
    }
  }
  cell.rate = std::min(cell.rate, share);
  return cell;
}

// ---------------------------------------------------------------------------

namespace {

struct Step {
  enum class Kind { Event, Emit, Forward, Backward, Arrive } kind;
  int connection = 0;
  int hop = 0;
  double rate = 0.0;
  std::size_t event = 0;
};

class RateSim {
 public:
  RateSim(RateNetwork net, const RateSimConfig& config, std::vector<RateEvent> events)
      : net_(std::move(net)), config_(config), events_(std::move(events)) {
    validate(net_);
    if (!(config.round_trip > 0.0) || !(config.cell_rate > 0.0))
      throw RateError("round trip and cell rate must be positive");
    for (const RateEvent& e : events_) {
      const int limit = static_cast<int>(e.kind == RateEvent::Kind::Demand ? net_.connections.size()
                                                                           : net_.capacities.size());
      if (e.index < 0 || e.index >= limit || !(e.value > 0.0)) throw RateError("bad rate event");
    }
    for (double c : net_.capacities) links_.emplace_back(c);
    for (const ConnectionSpec& c : net_.connections)
      for (int l : c.route) links_[l].register_connection(c.id);
    rate_.assign(net_.connections.size(), 0.0);
  }

  RateSimResult run() {
    std::ranges::stable_sort(events_, {}, &RateEvent::time);
    for (std::size_t i = 0; i < events_.size(); ++i)
      queue_.push(events_[i].time, Step{Step::Kind::Event, 0, 0, 0.0, i});
    for (const ConnectionSpec& c : net_.connections) queue_.push(0.0, Step{Step::Kind::Emit, c.id});
    for (std::size_t i = 0; i < rate_.size(); ++i)
      result_.trace.push_back({0.0, static_cast<int>(i), 0.0});
    open_phase(0.0);

    while (!queue_.empty() && queue_.top().time <= config_.horizon) {
      auto [time, seq, step] = queue_.pop();
      dispatch(time, step);
    }
    close_phase();
    return std::move(result_);
  }

 private:
  double hop_spacing(int connection) const {
    return config_.round_trip / 2.0 / net_.connections[connection].route.size();
  }

  void dispatch(double now, const Step& step) {
    const ConnectionSpec& c = net_.connections[step.connection];
    const int hops = static_cast<int>(c.route.size());
    const double spacing = hop_spacing(step.connection);
    switch (step.kind) {
      case Step::Kind::Event:
        apply(events_[step.event], now);
        break;
      case Step::Kind::Emit:
        queue_.push(now, Step{Step::Kind::Forward, c.id, 0, c.demand});
        queue_.push(now + 1.0 / config_.cell_rate, Step{Step::Kind::Emit, c.id});
        break;
      case Step::Kind::Forward:
      case Step::Kind::Backward: {
        const bool forward = step.kind == Step::Kind::Forward;
        LinkAllocState& link = links_[c.route[step.hop]];
        const RmCell out = link.process(forward ? Phase::Forward : Phase::Backward, {c.id, step.rate});
        ++result_.cells_processed;
        result_.max_updates_per_cell = std::max(result_.max_updates_per_cell, link.last_updates());
        Step next{step.kind, c.id, step.hop, out.rate};
        if (forward && step.hop + 1 < hops) {
          ++next.hop;
        } else if (forward) {
          next.kind = Step::Kind::Backward;
        } else if (step.hop > 0) {
          --next.hop;
        } else {
          next.kind = Step::Kind::Arrive;
        }
        queue_.push(now + spacing, next);
        break;
      }
      case Step::Kind::Arrive:
        set_rate(now, c.id, std::min(step.rate, c.demand));
        break;
    }
  }

  void apply(const RateEvent& e, double now) {
    close_phase();
    if (e.kind == RateEvent::Kind::Demand) {
      net_.connections[e.index].demand = e.value;
      if (rate_[e.index] > e.value) {
        rate_[e.index] = e.value;
        result_.trace.push_back({now, e.index, e.value});
      }
    } else {
      net_.capacities[e.index] = e.value;
      links_[e.index].set_capacity(e.value);
      note_overshoot();
    }
    open_phase(now);
  }

  void set_rate(double now, int connection, double rate) {
    if (rate == rate_[connection]) return;
    rate_[connection] = rate;
    result_.trace.push_back({now, connection, rate});
    note_overshoot();
    check(now);
  }

  void note_overshoot() {
    std::vector<double> load(net_.capacities.size(), 0.0);
    for (const ConnectionSpec& c : net_.connections)
      for (int l : c.route) load[l] += rate_[c.id];
    for (std::size_t l = 0; l < load.size(); ++l)
      result_.max_overshoot = std::max(result_.max_overshoot, (load[l] - net_.capacities[l]) / net_.capacities[l]);
  }

  bool within() const {
    for (const ConnectionSpec& c : net_.connections) {
      double smallest = kUnlimited;
      for (int l : c.route) smallest = std::min(smallest, net_.capacities[l]);
      if (std::abs(rate_[c.id] - phase_.oracle[c.id]) > config_.tolerance * smallest) return false;
    }
    return true;
  }

  void check(double now) {
    const bool ok = within();
    if (ok && !entered_) entered_ = now;
    if (!ok) entered_.reset();
  }

  void open_phase(double now) {
    phase_ = ConvergenceRecord{};
    phase_.start_time = now;
    phase_.d = config_.round_trip;
    phase_.r = config_.cell_rate;
    phase_.oracle = maxmin_oracle(net_);
    phase_.m = distinct_values(phase_.oracle);
    entered_.reset();
    check(now);
  }

  void close_phase() {
    phase_.final_rates = rate_;
    phase_.converged = entered_.has_value();
    if (entered_) phase_.convergence_time = *entered_ - phase_.start_time;
    result_.phases.push_back(phase_);
  }

  RateNetwork net_;
  RateSimConfig config_;
  std::vector<RateEvent> events_;
  std::vector<LinkAllocState> links_;
  std::vector<double> rate_;
  sim::EventQueue<Step> queue_;
  ConvergenceRecord phase_;
  std::optional<double> entered_;
  RateSimResult result_;
};

}  // namespace

RateSimResult simulate_rates(RateNetwork net, const RateSimConfig& config, std::vector<RateEvent> events) {
  return RateSim(std::move(net), config, std::move(events)).run();
}

RateNetwork parking_lot(double c0, double c1, double c2) {
  RateNetwork net;
  net.capacities = {c0, c1, c2};
  net.connections = {{0, {0, 1, 2}}, {1, {0}}, {2, {1}}, {3, {2}}};
  return net;
}

RateNetwork random_network(std::uint64_t seed, int max_links, int max_connections) {
  std::mt19937_64 rng(seed);
  RateNetwork net;
  const int links = std::uniform_int_distribution<int>(1, max_links)(rng);
  std::uniform_real_distribution<double> capacity(1.0, 10.0);
  for (int l = 0; l < links; ++l) net.capacities.push_back(std::round(capacity(rng) * 100.0) / 100.0);
  const int conns = std::uniform_int_distribution<int>(1, max_connections)(rng);
  std::vector<int> order(links);
  for (int l = 0; l < links; ++l) order[l] = l;
  std::bernoulli_distribution limited(0.3);
  std::uniform_real_distribution<double> demand(0.5, 5.0);
  for (int i = 0; i < conns; ++i) {
    std::shuffle(order.begin(), order.end(), rng);
    const int length = std::uniform_int_distribution<int>(1, std::min(3, links))(rng);
    ConnectionSpec c{i, std::vector<int>(order.begin(), order.begin() + length)};
    if (limited(rng)) c.demand = std::round(demand(rng) * 100.0) / 100.0;
    net.connections.push_back(std::move(c));
  }
  return net;
}

}  // namespace netlab::rates
