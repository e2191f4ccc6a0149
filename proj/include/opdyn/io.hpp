#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "opdyn/events.hpp"
#include "opdyn/meanfield.hpp"
#include "opdyn/simulation.hpp"
#include "opdyn/tracker.hpp"

namespace opdyn {

// Shortest round-trip formatting so equal runs produce byte-equal files.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short human-facing formatting for labels and file names.
inline std::string format_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  return out;
}

inline void write_series_csv(const std::string& path, std::span<const SeriesRow> rows) {
  std::ofstream out = open_output(path);
  out << "t,max_gap,n_gaps_above_theta,mean_abs_opinion\n";
  for (const SeriesRow& r : rows)
    out << format_double(r.t) << ',' << format_double(r.max_gap) << ',' << r.gaps_above_theta
        << ',' << format_double(r.mean_abs_opinion) << '\n';
}

inline void write_tracker_csv(const std::string& path,
                              std::span<const TrackerHistoryRow> rows) {
  std::ofstream out = open_output(path);
  out << "t,class_id,position,gap\n";
  for (const TrackerHistoryRow& r : rows)
    out << format_double(r.time) << ',' << r.class_id << ',' << r.edge << ','
        << format_double(r.gap) << '\n';
}

inline void write_events_csv(const std::string& path, std::span<const Event> events) {
  std::ofstream out = open_output(path);
  out << "t,edge\n";
  for (const Event& e : events) out << format_double(e.time) << ',' << e.edge << '\n';
}

inline void write_meanfield_csv(const std::string& path,
                                std::span<const MeanfieldSeriesRow> rows) {
  std::ofstream out = open_output(path);
  out << "t,support_radius,mass_total,mass_in_unit_interval,u_at_c_plus\n";
  for (const MeanfieldSeriesRow& r : rows)
    out << format_double(r.t) << ',' << format_double(r.support_radius) << ','
        << format_double(r.mass_total) << ',' << format_double(r.mass_unit) << ','
        << format_double(r.u_at_c_plus) << '\n';
}

inline void write_profile_csv(const std::string& path, const DensityGrid& g) {
  std::ofstream out = open_output(path);
  out << "a,u\n";
  for (int i = 0; i < g.size(); ++i)
    out << format_double(g.coordinate(i)) << ',' << format_double(g[i]) << '\n';
}

// Minimal static line plot: one polyline per series on shared axes.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

inline void write_line_svg(const std::string& path, const std::vector<SvgSeries>& series,
                           const std::string& title, bool log_y = false) {
  const int width = 900, height = 520;
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  const auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  for (const SvgSeries& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double yv = ty(s.y[i]);
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = yv;
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, yv);
        ymax = std::max(ymax, yv);
      }
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  const auto py = [&](double y) {
    return height - mb - (ty(y) - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream out = open_output(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  out << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
      << height - mb << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
      << "' stroke='black'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    out << "<text x='" << px(xv) << "' y='" << height - mb + 18
        << "' text-anchor='middle' font-size='11'>" << format_double(xv) << "</text>\n";
    out << "<text x='" << ml - 6 << "' y='" << height - mb - (height - mt - mb) * k / 4.0 + 4
        << "' text-anchor='end' font-size='11'>"
        << format_double(log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  int ci = 0;
  for (const SvgSeries& s : series) {
    out << "<polyline fill='none' stroke='" << colors[ci % 5] << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    out << "'/>\n";
    out << "<text x='" << width - mr - 150 << "' y='" << mt + 16 * (ci + 1)
        << "' font-size='12' fill='" << colors[ci % 5] << "'>" << s.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace opdyn
