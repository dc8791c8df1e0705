#include "levelset/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "levelset/config.hpp"
#include "levelset/types.hpp"

namespace levelset {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool drawable(double x, double y, bool log_y) { return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0); }

}  // namespace

std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const Series& s : series) {
    require(s.x.size() == s.y.size(), "plot: series '" + s.name + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!drawable(s.x[i], s.y[i], spec.log_y)) continue;
      const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  require(std::isfinite(xmin), "plot: no drawable points");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const double left = 70.0;
  const double right = 150.0;
  const double top = 40.0;
  const double bottom = 50.0;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 15) << "\" text-anchor=\"middle\">"
      << tick_label(xv) << "</text>\n";
    o << "<text x=\"" << num(left - 5) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
      << tick_label(spec.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 10.0) << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(15," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label + (spec.log_y ? " (log)" : "")) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* colour = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    std::vector<std::string> pieces;
    std::string current;
    double prev_y = 0.0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!drawable(s.x[i], s.y[i], spec.log_y)) {
        if (!current.empty()) pieces.push_back(current);
        current.clear();
        continue;
      }
      const double y = py(spec.log_y ? std::log10(s.y[i]) : s.y[i]);
      const double x = px(s.x[i]);
      if (s.step && !current.empty()) current += ' ' + num(x) + ',' + num(prev_y);
      current += (current.empty() ? "" : " ") + num(x) + ',' + num(y);
      prev_y = y;
    }
    if (!current.empty()) pieces.push_back(current);
    for (const std::string& p : pieces) {
      o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"" << p << "\"/>\n";
    }
    const double ly = top + 15.0 * static_cast<double>(si + 1);
    o << "<line x1=\"" << num(left + pw + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + pw + 30)
      << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(left + pw + 35) << "\" y=\"" << num(ly) << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string trace_plot_svg(const std::vector<TracePlotInput>& traces, const std::string& column, double f_star,
                           bool has_f_star) {
  require(!traces.empty(), "plot: no input traces");
  const bool gap = column == "gap";
  const std::string source = gap ? "f" : column;
  if (gap && !has_f_star) {
    f_star = std::numeric_limits<double>::infinity();
    for (const TracePlotInput& t : traces) {
      const int c = t.table.column("f");
      require(c >= 0, "plot: trace '" + t.name + "' has no f column");
      for (const auto& row : t.table.rows) f_star = std::min(f_star, parse_double(row[static_cast<std::size_t>(c)], "f"));
    }
  }
  std::vector<Series> series;
  for (const TracePlotInput& t : traces) {
    require(!t.table.rows.empty(), "plot: trace '" + t.name + "' is empty");
    const int ck = t.table.column("k");
    const int cy = t.table.column(source);
    require(ck >= 0 && cy >= 0, "plot: trace '" + t.name + "' lacks k or " + source + " columns");
    Series s;
    s.name = t.name;
    for (const auto& row : t.table.rows) {
      require(row.size() == t.table.header.size(), "plot: ragged row in '" + t.name + "'");
      s.x.push_back(parse_double(row[static_cast<std::size_t>(ck)], "k"));
      const double v = parse_double(row[static_cast<std::size_t>(cy)], source);
      s.y.push_back(gap ? v - f_star : v);
    }
    series.push_back(std::move(s));
  }
  ChartSpec spec;
  spec.title = gap ? "optimality gap" : column;
  spec.x_label = "k";
  spec.y_label = gap ? "f - f*" : column;
  spec.log_y = gap || column == "grad_norm";
  return line_chart_svg(spec, series);
}

std::string profile_plot_svg(const ProfileTable& table) {
  require(!table.methods.empty() && !table.budgets.empty(), "plot: empty profile");
  std::vector<Series> series;
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    Series s;
    s.name = table.methods[m];
    s.step = true;
    for (std::size_t b = 0; b < table.budgets.size(); ++b) {
      s.x.push_back(table.budgets[b]);
      s.y.push_back(table.proportion[m][b]);
    }
    series.push_back(std::move(s));
  }
  ChartSpec spec;
  spec.title = "performance profile";
  spec.x_label = "budget";
  spec.y_label = "proportion";
  return line_chart_svg(spec, series);
}

}  // namespace levelset
