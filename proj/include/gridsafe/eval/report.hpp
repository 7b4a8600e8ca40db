#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "gridsafe/env/chronics.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/eval/rollout.hpp"

namespace gridsafe {

inline constexpr const char* report_header =
    "label,seed,episode,offset,survival_step,cumulative_reward,overload_rate,violation_rate,safety_cost_metric";

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// One row per episode, then "mean" and "std" rows (omitted when empty).
/// Lines starting with '#' carry the config fingerprint.
inline std::string report_csv(const RunReport& r) {
  using detail::g17;
  std::ostringstream out;
  if (!r.fingerprint.empty()) out << "# fingerprint " << r.fingerprint << '\n';
  out << report_header << '\n';
  for (const auto& row : r.rows) {
    const auto& m = row.metrics;
    out << row.label << ',' << row.seed << ',' << row.episode << ',' << row.offset << ',' << m.survival_step << ','
        << g17(m.cumulative_reward) << ',' << g17(m.overload_rate) << ',' << g17(m.violation_rate) << ','
        << g17(m.safety_cost_metric) << '\n';
  }
  if (!r.rows.empty()) {
    const ReportAggregate a = aggregate(r);
    for (const auto& [name, s] : {std::pair{"mean", a.mean}, std::pair{"std", a.stddev}})
      out << name << ",,,," << g17(s.survival_step) << ',' << g17(s.cumulative_reward) << ','
          << g17(s.overload_rate) << ',' << g17(s.violation_rate) << ',' << g17(s.safety_cost_metric) << '\n';
  }
  return out.str();
}

struct ParsedReport {
  RunReport report;
  std::vector<ReportAggregate> aggregates;  // empty or one entry
};

inline ParsedReport parse_report_csv(const std::string& text) {
  ParsedReport p;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  ReportAggregate agg;
  int agg_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# fingerprint ";
      if (line.rfind(tag, 0) == 0) p.report.fingerprint = line.substr(tag.size());
      continue;
    }
    if (!header) {
      if (line != report_header) throw ParseError("report line " + std::to_string(line_no) + ": unexpected header");
      header = true;
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 9)
      throw ParseError("report line " + std::to_string(line_no) + ": expected 9 fields, got " +
                       std::to_string(cells.size()));
    try {
      if ((cells[0] == "mean" || cells[0] == "std") && cells[1].empty()) {
        MetricSummary& s = cells[0] == "mean" ? agg.mean : agg.stddev;
        s = {std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6]), std::stod(cells[7]),
             std::stod(cells[8])};
        ++agg_rows;
        continue;
      }
      EpisodeRow row;
      row.label = cells[0];
      row.seed = std::stoull(cells[1]);
      row.episode = std::stoull(cells[2]);
      row.offset = std::stoull(cells[3]);
      row.metrics = {std::stoi(cells[4]), std::stod(cells[5]), std::stod(cells[6]), std::stod(cells[7]),
                     std::stod(cells[8])};
      p.report.rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw ParseError("report line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (!header) throw ParseError("report: missing header");
  if (agg_rows > 0) p.aggregates.push_back(agg);
  return p;
}

/// Learning-curve sample taken during training.
struct CurvePoint {
  std::uint64_t step = 0;
  double reward = 0.0;
  double survival = 0.0;
  double overload_rate = 0.0;
  double violation_rate = 0.0;
};

inline std::string curves_csv(const std::vector<CurvePoint>& pts) {
  using detail::g17;
  std::ostringstream out;
  out << "step,reward,survival_step,overload_rate,violation_rate\n";
  for (const auto& p : pts)
    out << p.step << ',' << g17(p.reward) << ',' << g17(p.survival) << ',' << g17(p.overload_rate) << ','
        << g17(p.violation_rate) << '\n';
  return out.str();
}

/// Four stacked line charts (reward, survival, overload, violation against
/// training step) as a standalone SVG. `provenance` goes into a comment.
inline std::string curves_svg(const std::vector<CurvePoint>& pts, const std::string& provenance) {
  const double W = 640, H = 180, pad = 40;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::string prov = provenance;
  for (std::size_t k; (k = prov.find("--")) != std::string::npos;) prov.replace(k, 2, "- -");
  out << "<!-- " << prov << " -->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << 4 * H << "\">\n";
  struct Panel {
    const char* name;
    double CurvePoint::*field;
  };
  const Panel panels[] = {{"reward", &CurvePoint::reward},
                          {"survival step", &CurvePoint::survival},
                          {"overload rate (%)", &CurvePoint::overload_rate},
                          {"violation rate (%)", &CurvePoint::violation_rate}};
  for (int k = 0; k < 4; ++k) {
    const double y0 = k * H;
    out << "<g>\n<rect x=\"" << pad << "\" y=\"" << y0 + 10 << "\" width=\"" << W - 2 * pad << "\" height=\""
        << H - 40 << "\" fill=\"none\" stroke=\"#999\"/>\n";
    out << "<text x=\"" << pad << "\" y=\"" << y0 + H - 12 << "\" font-size=\"12\" font-family=\"sans-serif\">"
        << panels[k].name << "</text>\n";
    if (!pts.empty()) {
      double lo = pts.front().*panels[k].field, hi = lo;
      for (const auto& p : pts) lo = std::min(lo, p.*panels[k].field), hi = std::max(hi, p.*panels[k].field);
      if (hi - lo < 1e-12) hi = lo + 1.0;
      const double s0 = static_cast<double>(pts.front().step);
      double s1 = static_cast<double>(pts.back().step);
      if (s1 <= s0) s1 = s0 + 1.0;
      out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : pts) {
        const double x = pad + (W - 2 * pad) * (static_cast<double>(p.step) - s0) / (s1 - s0);
        const double y = y0 + 10 + (H - 40) * (1.0 - (p.*panels[k].field - lo) / (hi - lo));
        out << x << ',' << y << ' ';
      }
      out << "\"/>\n";
      out << "<text x=\"" << W - pad << "\" y=\"" << y0 + H - 12
          << "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">[" << lo << ", " << hi
          << "]</text>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace gridsafe
