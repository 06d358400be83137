#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace netlab::rates {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

class RateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConnectionSpec {
  int id = 0;
  std::vector<int> route;  // link indices
  double demand = kUnlimited;
};

struct RateNetwork {
  std::vector<double> capacities;
  std::vector<ConnectionSpec> connections;  // ids are 0..n-1 in order
};

/// Throws RateError on a non-positive capacity or demand, an unknown link, or out-of-order ids.
void validate(const RateNetwork& net);

/// Exact max-min allocation by water-filling, indexed like `net.connections`.
std::vector<double> maxmin_oracle(const RateNetwork& net);

/// Number of distinct values in an allocation (relative tolerance 1e-9).
int distinct_values(const std::vector<double>& rates);

enum class Phase { Forward, Backward };

struct RmCell {
  int connection = 0;
  double rate = kUnlimited;  // requested on the way out, stamped on the way back
};

/**
 * Per-link allocation state with running sums. Connections are either
 * bottlenecked here or recorded as bottlenecked elsewhere at some rate; the
 * advertised rate shares what the latter leave among the former.
 */
class LinkAllocState {
 public:
  explicit LinkAllocState(double capacity);

  void register_connection(int id);
  void set_capacity(double capacity) { capacity_ = capacity; }

  /// Forward cells are stamped with min(request, share this connection would
  /// get if bottlenecked here) and leave the state alone. Backward cells carry
  /// the route-wide minimum and reclassify the connection with it.
  RmCell process(Phase phase, RmCell cell);

  double capacity() const { return capacity_; }
  double advertised_rate() const;
  int active() const { return active_; }
  int elsewhere_count() const { return elsewhere_count_; }
  double elsewhere_sum() const { return elsewhere_sum_; }
  bool bottlenecked_elsewhere(int id) const;

  /// Set and sum updates made by the last process() call.
  int last_updates() const { return last_updates_; }

 private:
  struct Slot {
    bool registered = false;
    bool elsewhere = false;
    double recorded = 0.0;
  };
  Slot& slot(int id);

  double capacity_;
  std::vector<Slot> slots_;  // indexed by connection id
  int active_ = 0;
  int elsewhere_count_ = 0;
  double elsewhere_sum_ = 0.0;
  int last_updates_ = 0;
};

struct RateEvent {
  enum class Kind { Demand, Capacity } kind = Kind::Demand;
  double time = 0.0;
  int index = 0;  // connection or link
  double value = 0.0;
};

struct RateSample {
  double time;
  int connection;
  double rate;
};

struct ConvergenceRecord {
  double start_time = 0.0;  // 0, or the time of the event opening this phase
  int m = 0;                // distinct values in the oracle allocation
  double d = 0.0;           // round-trip delay
  double r = 0.0;           // RM cells per time unit
  bool converged = false;
  std::optional<double> convergence_time;  // since start_time
  std::vector<double> oracle;
  std::vector<double> final_rates;
};

struct RateSimConfig {
  double round_trip = 1.0;
  double cell_rate = 1.0;
  double horizon = 1000.0;
  double tolerance = 1e-6;  // relative to the smallest capacity on the route
};

struct RateSimResult {
  std::vector<ConvergenceRecord> phases;
  std::vector<RateSample> trace;  // one sample per rate change, initial rates at t=0
  double max_overshoot = 0.0;     // worst (load - capacity) / capacity seen
  std::uint64_t cells_processed = 0;
  int max_updates_per_cell = 0;
};

/**
 * Every source starts at rate 0 and emits an RM cell at t=0 and every
 * 1/cell_rate after. A cell visits its route's links evenly spaced over
 * round_trip/2, returns in reverse over the other half, and the source adopts
 * the stamped rate capped by its demand. Events open a new phase each.
 */
RateSimResult simulate_rates(RateNetwork net, const RateSimConfig& config,
                             std::vector<RateEvent> events = {});

/// Three links in a row, one connection across all of them and one per link.
RateNetwork parking_lot(double c0, double c1, double c2);

/// Up to `max_links` links with capacities in [1, 10] and up to
/// `max_connections` connections over random contiguous link runs.
RateNetwork random_network(std::uint64_t seed, int max_links = 6, int max_connections = 10);

}  // namespace netlab::rates
