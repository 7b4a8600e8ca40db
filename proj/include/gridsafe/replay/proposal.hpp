#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridsafe/env/action.hpp"
#include "gridsafe/grid/case.hpp"

namespace gridsafe {

inline constexpr std::string_view proposal_marker = "proposed LINE changes:";

enum class ProposalStatus { ok, error };

struct LineChange {
  std::size_t line;  // case line index
  int busbar;
  friend bool operator==(const LineChange&, const LineChange&) = default;
};

struct AdvisorProposal {
  std::string raw_text;
  std::vector<LineChange> changes;
  ProposalStatus status = ProposalStatus::error;
  std::vector<std::string> rejections;  // per-pair or whole-text problems

  bool ok() const { return status == ProposalStatus::ok; }
  std::string message() const {
    std::string out;
    for (const auto& r : rejections) out += (out.empty() ? "" : "; ") + r;
    return out;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<std::size_t> rfind_icase(std::string_view hay, std::string_view needle) {
  if (needle.size() > hay.size()) return std::nullopt;
  for (std::size_t i = hay.size() - needle.size() + 1; i-- > 0;) {
    bool eq = true;
    for (std::size_t k = 0; k < needle.size() && eq; ++k)
      eq = std::tolower(static_cast<unsigned char>(hay[i + k])) == std::tolower(static_cast<unsigned char>(needle[k]));
    if (eq) return i;
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses the action list following the last "proposed LINE changes:" marker
/// (case-insensitive). Accepted shapes: "{12: 1, 47: 0}" or "12 : 1, 47 : 0"
/// on the marker's line or the next non-empty one.
inline AdvisorProposal parse_proposal(std::string text, const GridCase& c) {
  AdvisorProposal p;
  p.raw_text = std::move(text);
  const std::string_view all(p.raw_text);
  const auto at = detail::rfind_icase(all, proposal_marker);
  if (!at) {
    p.rejections.push_back("marker absent");
    return p;
  }
  std::string_view rest = all.substr(*at + proposal_marker.size());
  std::string_view body;
  const std::string_view lead = detail::trim(rest);
  if (!lead.empty() && lead.front() == '{') {
    const auto close = lead.find('}');
    body = lead.substr(1, close == std::string_view::npos ? std::string_view::npos : close - 1);
  } else {
    body = lead.substr(0, lead.find('\n'));
  }

  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string_view::npos) comma = body.size();
    const std::string_view item = detail::trim(body.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      p.rejections.push_back("malformed pair '" + std::string(item) + "'");
      continue;
    }
    std::string id(detail::trim(item.substr(0, colon)));
    if (id.size() >= 2 && (id.front() == '"' || id.front() == '\'') && id.back() == id.front())
      id = id.substr(1, id.size() - 2);
    const std::string_view bus = detail::trim(item.substr(colon + 1));
    const auto line = c.find_line(id);
    if (!line) {
      p.rejections.push_back("unknown line '" + id + "'");
      continue;
    }
    if (bus != "0" && bus != "1") {
      p.rejections.push_back("invalid busbar '" + std::string(bus) + "' for line " + id);
      continue;
    }
    const int b = bus == "1" ? 1 : 0;
    auto same = std::find_if(p.changes.begin(), p.changes.end(), [&](const LineChange& lc) { return lc.line == *line; });
    if (same != p.changes.end())
      same->busbar = b;
    else
      p.changes.push_back({*line, b});
  }
  if (p.changes.empty()) {
    if (p.rejections.empty()) p.rejections.push_back("no line changes");
    return p;
  }
  p.status = ProposalStatus::ok;
  return p;
}

/// Turns line-level busbar changes into an element-level action at the one
/// substation shared by every proposed line. With a single line (or only
/// parallel lines) the origin end is used. Returns nullopt when the lines
/// share no substation.
inline std::optional<Action> proposal_to_action(const GridCase& c, const AdvisorProposal& p) {
  if (!p.ok()) return std::nullopt;
  std::vector<std::size_t> common = {c.lines[p.changes.front().line].from, c.lines[p.changes.front().line].to};
  for (const auto& lc : p.changes) {
    const Line& l = c.lines[lc.line];
    std::erase_if(common, [&](std::size_t s) { return s != l.from && s != l.to; });
  }
  if (common.empty()) return std::nullopt;
  const std::size_t sub = common.front();
  Action a;
  for (const auto& lc : p.changes) {
    const Line& l = c.lines[lc.line];
    const ElementKind end = l.from == sub ? ElementKind::line_origin : ElementKind::line_extremity;
    a.changes.push_back({c.element_index({end, lc.line}), lc.busbar});
  }
  return a;
}

/// Renders an action's line-end changes in the proposal syntax.
inline std::string format_proposal(const GridCase& c, const Action& a) {
  std::string out = std::string(proposal_marker) + " {";
  bool first = true;
  for (const auto& ch : a.changes) {
    const ElementRef e = c.element_ref(ch.element);
    if (e.kind != ElementKind::line_origin && e.kind != ElementKind::line_extremity) continue;
    if (!first) out += ", ";
    first = false;
    out += c.lines[e.index].id + ": " + std::to_string(ch.busbar);
  }
  return out + "}";
}

}  // namespace gridsafe
