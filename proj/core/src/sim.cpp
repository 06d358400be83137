#include "netlab/sim.hpp"

#include <array>
#include <numeric>

namespace netlab::sim {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 7> kKindNames{{
    {EventKind::MessageDelivery, "message-delivery"},
    {EventKind::LinkUp, "link-up"},
    {EventKind::LinkDown, "link-down"},
    {EventKind::LinkCostChange, "link-cost-change"},
    {EventKind::NodeUp, "node-up"},
    {EventKind::NodeDown, "node-down"},
    {EventKind::Timer, "timer"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (name == text) return k;
  return std::nullopt;
}

std::uint64_t MetricsLog::total_entries() const {
  return std::accumulate(entries_by_type.begin(), entries_by_type.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

void validate(const ScenarioScript& script) {
  double last = 0.0;
  for (const TopologyEvent& e : script.events) {
    if (!(e.time >= 0.0)) throw SimError("event time must be nonnegative");
    if (e.time < last) throw SimError("injected event times must be nondecreasing");
    last = e.time;
    if (!script.graph.has_node(e.u)) throw SimError("event references unknown node");
    const bool link = e.kind == EventKind::LinkUp || e.kind == EventKind::LinkDown ||
                      e.kind == EventKind::LinkCostChange;
    if (link && (!script.graph.has_node(e.v) || e.u == e.v))
      throw SimError("link event references invalid node pair");
    if (e.kind == EventKind::MessageDelivery || e.kind == EventKind::Timer)
      throw SimError("message and timer events cannot be injected");
  }
}

}  // namespace netlab::sim
