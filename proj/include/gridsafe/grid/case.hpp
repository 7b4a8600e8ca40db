#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gridsafe/error.hpp"

namespace gridsafe {

struct Bus {
  std::string id;
  double v_min = 0.95;  // p.u.
  double v_max = 1.05;  // p.u.
  double base_kv = 0.0;
};

/// A substation hosts exactly one bus and exposes two busbars (0 and 1).
struct Substation {
  std::string id;
  std::size_t bus = 0;  // index into GridCase::buses
  bool controllable = true;
};

struct Line {
  std::string id;
  std::size_t from = 0;  // substation index
  std::size_t to = 0;    // substation index
  double r = 0.0;        // series resistance, p.u.
  double x = 0.0;        // series reactance, p.u.
  double b = 0.0;        // total shunt susceptance, p.u.
  double i_max = 0.0;    // thermal rating, p.u. current
};

struct Generator {
  std::string id;
  std::size_t substation = 0;
  double p_min = 0.0;  // MW
  double p_max = 0.0;  // MW
  double v_set = 1.0;  // p.u. voltage set-point when voltage_control is on
  bool voltage_control = true;
};

struct Load {
  std::string id;
  std::size_t substation = 0;
  double q_ratio = 0.0;  // Q = q_ratio * P unless the chronics carry a Q column
};

/// Kinds of switchable elements. Element indices are laid out flat as
/// [line origins | line extremities | generators | loads].
enum class ElementKind { line_origin, line_extremity, generator, load };

struct ElementRef {
  ElementKind kind;
  std::size_t index;
  friend bool operator==(const ElementRef&, const ElementRef&) = default;
};

/// Static network description.
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Substation> substations;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::size_t slack_bus = 0;  // index into buses

  std::size_t bus_count() const { return buses.size(); }
  std::size_t line_count() const { return lines.size(); }
  std::size_t element_count() const {
    return 2 * lines.size() + generators.size() + loads.size();
  }

  std::size_t element_index(ElementRef e) const {
    switch (e.kind) {
      case ElementKind::line_origin: return e.index;
      case ElementKind::line_extremity: return lines.size() + e.index;
      case ElementKind::generator: return 2 * lines.size() + e.index;
      case ElementKind::load: return 2 * lines.size() + generators.size() + e.index;
    }
    return 0;
  }

  ElementRef element_ref(std::size_t flat) const {
    const std::size_t m = lines.size();
    if (flat < m) return {ElementKind::line_origin, flat};
    if (flat < 2 * m) return {ElementKind::line_extremity, flat - m};
    if (flat < 2 * m + generators.size()) return {ElementKind::generator, flat - 2 * m};
    return {ElementKind::load, flat - 2 * m - generators.size()};
  }

  std::size_t element_substation(std::size_t flat) const {
    const ElementRef e = element_ref(flat);
    switch (e.kind) {
      case ElementKind::line_origin: return lines[e.index].from;
      case ElementKind::line_extremity: return lines[e.index].to;
      case ElementKind::generator: return generators[e.index].substation;
      case ElementKind::load: return loads[e.index].substation;
    }
    return 0;
  }

  std::string element_name(std::size_t flat) const {
    const ElementRef e = element_ref(flat);
    switch (e.kind) {
      case ElementKind::line_origin: return "line " + lines[e.index].id + " (or)";
      case ElementKind::line_extremity: return "line " + lines[e.index].id + " (ex)";
      case ElementKind::generator: return "gen " + generators[e.index].id;
      case ElementKind::load: return "load " + loads[e.index].id;
    }
    return {};
  }

  /// Flat element indices hosted by a substation, in flat order.
  std::vector<std::size_t> substation_elements(std::size_t sub) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < element_count(); ++e)
      if (element_substation(e) == sub) out.push_back(e);
    return out;
  }

  std::size_t slack_substation() const {
    for (std::size_t s = 0; s < substations.size(); ++s)
      if (substations[s].bus == slack_bus) return s;
    return 0;
  }

  std::optional<std::size_t> find_line(const std::string& id) const {
    for (std::size_t j = 0; j < lines.size(); ++j)
      if (lines[j].id == id) return j;
    return std::nullopt;
  }
};

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <typename T>
T field(const nlohmann::json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(path + "." + key + ": wrong type");
  }
}

template <typename T>
T field_or(const nlohmann::json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, path, key);
}

// Ids may be written as strings or integers.
inline std::string id_field(const nlohmann::json& obj, const std::string& path, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(path + "." + key + ": missing field");
  const auto& v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(path + "." + key + ": expected a string or integer id");
}

inline const nlohmann::json& section(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing section '") + key + "'");
  if (!it->is_array()) throw ParseError(std::string("section '") + key + "' must be a list");
  return *it;
}

}  // namespace detail

/// Checks every GridCase invariant; throws InvariantError naming the element.
inline void validate_case(const GridCase& c) {
  if (c.buses.empty()) throw InvariantError("case has no buses");
  if (c.substations.size() != c.buses.size())
    throw InvariantError("every bus needs exactly one substation (" +
                         std::to_string(c.buses.size()) + " buses, " +
                         std::to_string(c.substations.size()) + " substations)");
  if (!(c.base_mva > 0)) throw InvariantError("base_mva must be positive");
  std::vector<int> bus_used(c.buses.size(), 0);
  for (const auto& s : c.substations) {
    if (s.bus >= c.buses.size()) throw InvariantError("substation " + s.id + ": bad bus");
    if (bus_used[s.bus]++) throw InvariantError("substation " + s.id + ": bus shared with another substation");
  }
  for (const auto& b : c.buses)
    if (!(b.v_min > 0 && b.v_min < b.v_max))
      throw InvariantError("bus " + b.id + ": need 0 < v_min < v_max");
  for (const auto& l : c.lines) {
    if (l.from >= c.substations.size() || l.to >= c.substations.size())
      throw InvariantError("line " + l.id + ": endpoint out of range");
    if (l.from == l.to) throw InvariantError("line " + l.id + ": both ends on one substation");
    if (!(l.r >= 0)) throw InvariantError("line " + l.id + ": r must be >= 0");
    if (!(l.x != 0) || !std::isfinite(l.x)) throw InvariantError("line " + l.id + ": x must be nonzero");
    if (!(l.i_max > 0)) throw InvariantError("line " + l.id + ": i_max must be > 0");
  }
  for (const auto& g : c.generators) {
    if (g.substation >= c.substations.size()) throw InvariantError("generator " + g.id + ": bad substation");
    if (g.p_min > g.p_max) throw InvariantError("generator " + g.id + ": p_min > p_max");
    if (!(g.v_set > 0)) throw InvariantError("generator " + g.id + ": v_set must be > 0");
  }
  for (const auto& l : c.loads)
    if (l.substation >= c.substations.size()) throw InvariantError("load " + l.id + ": bad substation");
  if (c.slack_bus >= c.buses.size()) throw InvariantError("slack bus out of range");
}

/// Parses a case document (JSON, schema in docs/case_schema.md).
inline GridCase load_case(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("case parse error at " + detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                     ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("case document must be an object");

  GridCase c;
  c.name = detail::field_or<std::string>(doc, "case", "name", "");
  c.base_mva = detail::field_or<double>(doc, "case", "base_mva", 100.0);

  std::unordered_map<std::string, std::size_t> bus_ix, sub_ix;
  const auto& buses = detail::section(doc, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string p = "buses[" + std::to_string(i) + "]";
    Bus b;
    b.id = detail::id_field(buses[i], p, "id");
    b.v_min = detail::field_or<double>(buses[i], p, "v_min", 0.95);
    b.v_max = detail::field_or<double>(buses[i], p, "v_max", 1.05);
    b.base_kv = detail::field_or<double>(buses[i], p, "base_kv", 0.0);
    if (!bus_ix.emplace(b.id, i).second) throw ParseError(p + ".id: duplicate bus id '" + b.id + "'");
    c.buses.push_back(b);
  }

  const auto& subs = detail::section(doc, "substations");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string p = "substations[" + std::to_string(i) + "]";
    Substation s;
    s.id = detail::id_field(subs[i], p, "id");
    const std::string bus = detail::id_field(subs[i], p, "bus");
    auto it = bus_ix.find(bus);
    if (it == bus_ix.end()) throw ParseError(p + ".bus: unknown bus '" + bus + "'");
    s.bus = it->second;
    s.controllable = detail::field_or<bool>(subs[i], p, "controllable", true);
    if (!sub_ix.emplace(s.id, i).second) throw ParseError(p + ".id: duplicate substation id '" + s.id + "'");
    c.substations.push_back(s);
  }

  auto sub_ref = [&](const nlohmann::json& obj, const std::string& p, const char* key) {
    const std::string id = detail::id_field(obj, p, key);
    auto it = sub_ix.find(id);
    if (it == sub_ix.end()) throw ParseError(p + "." + key + ": unknown substation '" + id + "'");
    return it->second;
  };

  const auto& lines = detail::section(doc, "lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string p = "lines[" + std::to_string(i) + "]";
    Line l;
    l.id = detail::id_field(lines[i], p, "id");
    l.from = sub_ref(lines[i], p, "from");
    l.to = sub_ref(lines[i], p, "to");
    l.r = detail::field<double>(lines[i], p, "r");
    l.x = detail::field<double>(lines[i], p, "x");
    l.b = detail::field_or<double>(lines[i], p, "b", 0.0);
    l.i_max = detail::field<double>(lines[i], p, "i_max");
    for (const auto& prev : c.lines)
      if (prev.id == l.id) throw ParseError(p + ".id: duplicate line id '" + l.id + "'");
    c.lines.push_back(l);
  }

  const auto& gens = detail::section(doc, "generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string p = "generators[" + std::to_string(i) + "]";
    Generator g;
    g.id = detail::id_field(gens[i], p, "id");
    g.substation = sub_ref(gens[i], p, "substation");
    g.p_min = detail::field_or<double>(gens[i], p, "p_min", 0.0);
    g.p_max = detail::field<double>(gens[i], p, "p_max");
    g.v_set = detail::field_or<double>(gens[i], p, "v_set", 1.0);
    g.voltage_control = detail::field_or<bool>(gens[i], p, "voltage_control", true);
    c.generators.push_back(g);
  }

  const auto& loads = detail::section(doc, "loads");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const std::string p = "loads[" + std::to_string(i) + "]";
    Load l;
    l.id = detail::id_field(loads[i], p, "id");
    l.substation = sub_ref(loads[i], p, "substation");
    l.q_ratio = detail::field_or<double>(loads[i], p, "q_ratio", 0.0);
    c.loads.push_back(l);
  }

  if (!doc.contains("slack")) throw ParseError("missing section 'slack'");
  const std::string slack = detail::id_field(doc, "case", "slack");
  auto it = bus_ix.find(slack);
  if (it == bus_ix.end()) throw ParseError("case.slack: unknown bus '" + slack + "'");
  c.slack_bus = it->second;

  validate_case(c);
  return c;
}

/// Inverse of load_case; ids are emitted as strings.
inline std::string dump_case(const GridCase& c) {
  using nlohmann::json;
  json doc;
  doc["name"] = c.name;
  doc["base_mva"] = c.base_mva;
  doc["buses"] = json::array();
  for (const auto& b : c.buses)
    doc["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}, {"base_kv", b.base_kv}});
  doc["substations"] = json::array();
  for (const auto& s : c.substations)
    doc["substations"].push_back(
        {{"id", s.id}, {"bus", c.buses[s.bus].id}, {"controllable", s.controllable}});
  doc["lines"] = json::array();
  for (const auto& l : c.lines)
    doc["lines"].push_back({{"id", l.id},
                            {"from", c.substations[l.from].id},
                            {"to", c.substations[l.to].id},
                            {"r", l.r},
                            {"x", l.x},
                            {"b", l.b},
                            {"i_max", l.i_max}});
  doc["generators"] = json::array();
  for (const auto& g : c.generators)
    doc["generators"].push_back({{"id", g.id},
                                 {"substation", c.substations[g.substation].id},
                                 {"p_min", g.p_min},
                                 {"p_max", g.p_max},
                                 {"v_set", g.v_set},
                                 {"voltage_control", g.voltage_control}});
  doc["loads"] = json::array();
  for (const auto& l : c.loads)
    doc["loads"].push_back(
        {{"id", l.id}, {"substation", c.substations[l.substation].id}, {"q_ratio", l.q_ratio}});
  doc["slack"] = c.buses[c.slack_bus].id;
  return doc.dump(2) + "\n";
}

}  // namespace gridsafe
