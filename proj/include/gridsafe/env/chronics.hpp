#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "gridsafe/error.hpp"
#include "gridsafe/grid/case.hpp"

namespace gridsafe {

/// Time series driving an episode. Powers are stored in MW / MVAr; one
/// row per step.
struct Chronics {
  double step_minutes = 5.0;
  std::size_t horizon = 0;
  std::vector<std::vector<double>> load_p;  // [row][load]
  std::vector<std::vector<double>> load_q;  // [row][load]
  std::vector<std::vector<double>> gen_p;   // [row][generator], reference P
  std::vector<std::vector<double>> gen_q;   // [row][generator], Q set-point

  std::size_t rows() const { return load_p.size(); }
  double step_hours() const { return step_minutes / 60.0; }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Parses a headered CSV with columns load_<id>_p, gen_<id>_p and optionally
/// gen_<id>_q, load_<id>_q. Missing load Q columns fall back to the case's
/// q_ratio. A horizon of 0 means "all rows".
inline Chronics load_chronics(const std::string& csv, const GridCase& c, double step_minutes,
                              std::size_t horizon = 0) {
  if (!(step_minutes > 0)) throw InvariantError("chronics step duration must be positive");
  std::istringstream in(csv);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) throw ParseError("chronics: missing header row");

  const std::size_t n_load = c.loads.size(), n_gen = c.generators.size();
  std::vector<int> load_p_col(n_load, -1), load_q_col(n_load, -1), gen_p_col(n_gen, -1),
      gen_q_col(n_gen, -1);
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string& h = header[k];
    bool matched = false;
    for (std::size_t i = 0; i < n_load && !matched; ++i) {
      if (h == "load_" + c.loads[i].id + "_p") load_p_col[i] = static_cast<int>(k), matched = true;
      else if (h == "load_" + c.loads[i].id + "_q") load_q_col[i] = static_cast<int>(k), matched = true;
    }
    for (std::size_t i = 0; i < n_gen && !matched; ++i) {
      if (h == "gen_" + c.generators[i].id + "_p") gen_p_col[i] = static_cast<int>(k), matched = true;
      else if (h == "gen_" + c.generators[i].id + "_q") gen_q_col[i] = static_cast<int>(k), matched = true;
    }
    if (!matched) throw ParseError("chronics header column " + std::to_string(k + 1) + ": unknown column '" + h + "'");
  }
  for (std::size_t i = 0; i < n_load; ++i)
    if (load_p_col[i] < 0) throw ParseError("chronics: missing column load_" + c.loads[i].id + "_p");
  for (std::size_t i = 0; i < n_gen; ++i)
    if (gen_p_col[i] < 0) throw ParseError("chronics: missing column gen_" + c.generators[i].id + "_p");

  Chronics ch;
  ch.step_minutes = step_minutes;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("chronics line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    auto num = [&](int col) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[col], &used);
        if (used != cells[col].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw ParseError("chronics line " + std::to_string(line_no) + ", column '" + header[col] +
                         "': not a number");
      }
    };
    std::vector<double> lp(n_load), lq(n_load), gp(n_gen), gq(n_gen, 0.0);
    for (std::size_t i = 0; i < n_load; ++i) {
      lp[i] = num(load_p_col[i]);
      if (lp[i] < 0)
        throw InvariantError("chronics line " + std::to_string(line_no) + ": negative demand for load " +
                             c.loads[i].id);
      lq[i] = load_q_col[i] >= 0 ? num(load_q_col[i]) : c.loads[i].q_ratio * lp[i];
    }
    for (std::size_t i = 0; i < n_gen; ++i) {
      gp[i] = num(gen_p_col[i]);
      if (gen_q_col[i] >= 0) gq[i] = num(gen_q_col[i]);
    }
    ch.load_p.push_back(std::move(lp));
    ch.load_q.push_back(std::move(lq));
    ch.gen_p.push_back(std::move(gp));
    ch.gen_q.push_back(std::move(gq));
  }
  ch.horizon = horizon == 0 ? ch.rows() : horizon;
  if (ch.rows() < ch.horizon)
    throw InvariantError("chronics: " + std::to_string(ch.rows()) + " rows is fewer than horizon " +
                         std::to_string(ch.horizon));
  if (ch.rows() == 0) throw InvariantError("chronics: no data rows");
  return ch;
}

inline std::string dump_chronics(const Chronics& ch, const GridCase& c) {
  std::ostringstream out;
  out.precision(17);
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (const auto& l : c.loads) sep(), out << "load_" << l.id << "_p";
  for (const auto& l : c.loads) sep(), out << "load_" << l.id << "_q";
  for (const auto& g : c.generators) sep(), out << "gen_" << g.id << "_p";
  for (const auto& g : c.generators) sep(), out << "gen_" << g.id << "_q";
  out << '\n';
  for (std::size_t r = 0; r < ch.rows(); ++r) {
    first = true;
    for (double v : ch.load_p[r]) sep(), out << v;
    for (double v : ch.load_q[r]) sep(), out << v;
    for (double v : ch.gen_p[r]) sep(), out << v;
    for (double v : ch.gen_q[r]) sep(), out << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace gridsafe
