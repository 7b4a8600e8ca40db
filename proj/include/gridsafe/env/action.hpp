#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridsafe/error.hpp"
#include "gridsafe/grid/case.hpp"
#include "gridsafe/grid/topology.hpp"

namespace gridsafe {

struct BusbarChange {
  std::size_t element;  // flat element index
  int busbar;
  friend bool operator==(const BusbarChange&, const BusbarChange&) = default;
};

/// Topology action: explicit busbar targets for a set of elements. An empty
/// change list is do-nothing.
struct Action {
  std::vector<BusbarChange> changes;

  static Action do_nothing() { return {}; }
  bool is_do_nothing() const { return changes.empty(); }

  friend bool operator==(const Action&, const Action&) = default;
};

/// Renders line-end changes as "line : busbar" pairs, e.g. "3 : 1, 5 : 0".
inline std::string describe_action(const GridCase& c, const Action& a) {
  if (a.is_do_nothing()) return "do-nothing";
  std::string out;
  for (const auto& ch : a.changes) {
    if (!out.empty()) out += ", ";
    const ElementRef e = c.element_ref(ch.element);
    if (e.kind == ElementKind::line_origin || e.kind == ElementKind::line_extremity)
      out += c.lines[e.index].id;
    else
      out += c.element_name(ch.element);
    out += " : " + std::to_string(ch.busbar);
  }
  return out;
}

enum class RejectionReason { none, cooldown, invalid_busbar, multiple_substations, unknown_element };

inline const char* to_string(RejectionReason r) {
  switch (r) {
    case RejectionReason::none: return "none";
    case RejectionReason::cooldown: return "cooldown";
    case RejectionReason::invalid_busbar: return "invalid busbar";
    case RejectionReason::multiple_substations: return "multiple substations";
    case RejectionReason::unknown_element: return "unknown element";
  }
  return "?";
}

struct ValidatedAction {
  Action action;  // do-nothing when rejected
  RejectionReason rejection = RejectionReason::none;
  bool accepted() const { return rejection == RejectionReason::none; }
};

/// Rejected actions downgrade to do-nothing; the reason is reported.
inline ValidatedAction validate_action(const GridCase& c, const TopologyState& topo, const Action& a) {
  if (a.is_do_nothing()) return {a, RejectionReason::none};
  std::optional<std::size_t> sub;
  for (const auto& ch : a.changes) {
    if (ch.element >= c.element_count()) return {Action::do_nothing(), RejectionReason::unknown_element};
    if (ch.busbar != 0 && ch.busbar != 1) return {Action::do_nothing(), RejectionReason::invalid_busbar};
  }
  for (const auto& ch : a.changes) {
    const std::size_t s = c.element_substation(ch.element);
    if (sub && *sub != s) return {Action::do_nothing(), RejectionReason::multiple_substations};
    sub = s;
  }
  for (const auto& ch : a.changes)
    if (topo.cooldowns[ch.element] > 0) return {Action::do_nothing(), RejectionReason::cooldown};
  return {a, RejectionReason::none};
}

/// Enumerated discrete action set: do-nothing followed by every busbar
/// pattern of the line ends of each controllable substation. Generators and
/// loads are not switched by enumerated actions.
class ActionSpace {
 public:
  static constexpr std::size_t max_line_ends = 12;

  explicit ActionSpace(const GridCase& c) {
    actions_.push_back(Action::do_nothing());
    substation_.push_back(std::nullopt);
    for (std::size_t s = 0; s < c.substations.size(); ++s) {
      if (!c.substations[s].controllable) continue;
      std::vector<std::size_t> ends;
      for (std::size_t e : c.substation_elements(s)) {
        const ElementKind k = c.element_ref(e).kind;
        if (k == ElementKind::line_origin || k == ElementKind::line_extremity) ends.push_back(e);
      }
      if (ends.size() < 2) continue;
      if (ends.size() > max_line_ends)
        throw InvariantError("substation " + c.substations[s].id + " has too many line ends to enumerate");
      const std::size_t patterns = std::size_t{1} << ends.size();
      for (std::size_t p = 0; p < patterns; ++p) {
        Action a;
        for (std::size_t k = 0; k < ends.size(); ++k)
          a.changes.push_back({ends[k], static_cast<int>((p >> k) & 1u)});
        actions_.push_back(std::move(a));
        substation_.push_back(s);
      }
    }
  }

  std::size_t size() const { return actions_.size(); }
  const Action& operator[](std::size_t i) const { return actions_[i]; }
  std::optional<std::size_t> substation(std::size_t i) const { return substation_[i]; }

  /// Index of the enumerated action that puts the affected substation's line
  /// ends in the configuration `a` produces from `topo`. Do-nothing maps to 0.
  std::optional<std::size_t> index_of(const GridCase& c, const TopologyState& topo, const Action& a) const {
    if (a.is_do_nothing()) return 0;
    const std::size_t s = c.element_substation(a.changes.front().element);
    std::vector<std::uint8_t> after = topo.element_busbar;
    for (const auto& ch : a.changes) {
      const ElementKind k = c.element_ref(ch.element).kind;
      if (k != ElementKind::line_origin && k != ElementKind::line_extremity) {
        if (ch.busbar != after[ch.element]) return std::nullopt;
        continue;
      }
      after[ch.element] = static_cast<std::uint8_t>(ch.busbar);
    }
    for (std::size_t i = 1; i < actions_.size(); ++i) {
      if (substation_[i] != s) continue;
      bool match = true;
      for (const auto& ch : actions_[i].changes)
        if (after[ch.element] != ch.busbar) {
          match = false;
          break;
        }
      if (match) return i;
    }
    return std::nullopt;
  }

 private:
  std::vector<Action> actions_;
  std::vector<std::optional<std::size_t>> substation_;
};

}  // namespace gridsafe
