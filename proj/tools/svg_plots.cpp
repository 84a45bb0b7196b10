#include "svg_plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace psbal {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const std::map<std::string, std::string> kSeriesColor = {
    {"unweighted", "#444444"},
    {"ipw", "#d95f02"},
    {"att", "#7570b3"},
    {"ow", "#1b9e77"},
};

std::string color_for(const std::string& series) {
  auto it = kSeriesColor.find(series);
  return it != kSeriesColor.end() ? it->second : "#000000";
}

std::string text(double x, double y, const std::string& s, int size = 12,
                 const std::string& anchor = "start") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
         std::to_string(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
         "\">" + s + "</text>\n";
}

}  // namespace

std::string love_plot_svg(const BalanceReport& report) {
  const double left = 170.0, right = 40.0, top = 56.0, row_h = 22.0;
  const double plot_w = 460.0;
  const double width = left + plot_w + right;
  const double height = top + row_h * static_cast<double>(report.rows.size()) + 48.0;

  double max_asd = report.threshold * 1.2;
  for (const auto& row : report.rows) {
    if (std::isfinite(row.unweighted)) max_asd = std::max(max_asd, row.unweighted);
    for (const auto& [_, v] : row.by_scheme) {
      if (std::isfinite(v)) max_asd = std::max(max_asd, v);
    }
  }
  max_asd *= 1.08;
  auto xpos = [&](double v) { return left + plot_w * std::min(v, max_asd) / max_asd; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
         "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
         num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += text(left, 22, "Absolute standardized difference by covariate", 14);

  // Legend
  double lx = left;
  std::map<std::string, bool> series;
  series["unweighted"] = true;
  for (const auto& row : report.rows) {
    for (const auto& [name, _] : row.by_scheme) series[name] = true;
  }
  for (const auto& [name, _] : series) {
    svg += "<circle cx=\"" + num(lx) + "\" cy=\"38\" r=\"5\" fill=\"" + color_for(name) +
           "\"/>\n";
    svg += text(lx + 10, 42, name);
    lx += 16.0 * static_cast<double>(name.size()) * 0.55 + 34.0;
  }

  // Reference line at the balance threshold
  double tx = xpos(report.threshold);
  svg += "<line x1=\"" + num(tx) + "\" y1=\"" + num(top - 6) + "\" x2=\"" + num(tx) +
         "\" y2=\"" + num(height - 40) +
         "\" stroke=\"#888888\" stroke-dasharray=\"5,4\"/>\n";
  svg += text(tx, height - 26, num(report.threshold), 11, "middle");

  double y = top + row_h / 2.0;
  for (const auto& row : report.rows) {
    svg += text(left - 8, y + 4, row.covariate, 12, "end");
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" +
           num(left + plot_w) + "\" y2=\"" + num(y) +
           "\" stroke=\"#eeeeee\"/>\n";
    auto draw_point = [&](const std::string& name, double v) {
      if (!std::isfinite(v)) v = max_asd;
      svg += "<circle cx=\"" + num(xpos(v)) + "\" cy=\"" + num(y) + "\" r=\"5\" fill=\"" +
             color_for(name) + "\" fill-opacity=\"0.85\"/>\n";
    };
    draw_point("unweighted", row.unweighted);
    for (const auto& [name, v] : row.by_scheme) draw_point(name, v);
    y += row_h;
  }

  // Axis
  double axis_y = height - 40.0;
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(axis_y) + "\" x2=\"" +
         num(left + plot_w) + "\" y2=\"" + num(axis_y) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double v = max_asd * t / 4.0;
    svg += "<line x1=\"" + num(xpos(v)) + "\" y1=\"" + num(axis_y) + "\" x2=\"" +
           num(xpos(v)) + "\" y2=\"" + num(axis_y + 5) + "\" stroke=\"black\"/>\n";
    svg += text(xpos(v), axis_y + 18, num(v), 11, "middle");
  }
  svg += "</svg>\n";
  return svg;
}

std::string ps_density_svg(const OverlapSummary& summary) {
  const double left = 60.0, top = 50.0, plot_w = 560.0, plot_h = 260.0;
  const double width = left + plot_w + 30.0;
  const double height = top + plot_h + 50.0;

  long max_count = 1;
  for (long c : summary.group1_counts) max_count = std::max(max_count, c);
  for (long c : summary.group0_counts) max_count = std::max(max_count, c);

  const auto bins = summary.group1_counts.size();
  const double bw = plot_w / static_cast<double>(bins);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
         "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
         num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += text(left, 22, "Estimated propensity scores by group", 14);
  svg += "<rect x=\"" + num(left) + "\" y=\"32\" width=\"12\" height=\"12\" fill=\"#1b9e77\" fill-opacity=\"0.55\"/>\n";
  svg += text(left + 18, 42, "group 1");
  svg += "<rect x=\"" + num(left + 100) + "\" y=\"32\" width=\"12\" height=\"12\" fill=\"#d95f02\" fill-opacity=\"0.55\"/>\n";
  svg += text(left + 118, 42, "group 0");

  auto bars = [&](const std::vector<long>& counts, const std::string& color) {
    std::string out;
    for (std::size_t b = 0; b < counts.size(); ++b) {
      double h = plot_h * static_cast<double>(counts[b]) / static_cast<double>(max_count);
      double x = left + bw * static_cast<double>(b);
      double y = top + plot_h - h;
      out += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(bw) +
             "\" height=\"" + num(h) + "\" fill=\"" + color +
             "\" fill-opacity=\"0.55\"/>\n";
    }
    return out;
  };
  svg += bars(summary.group1_counts, "#1b9e77");
  svg += bars(summary.group0_counts, "#d95f02");

  double axis_y = top + plot_h;
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(axis_y) + "\" x2=\"" +
         num(left + plot_w) + "\" y2=\"" + num(axis_y) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    double frac = static_cast<double>(t) / 5.0;
    double x = left + plot_w * frac;
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(axis_y) + "\" x2=\"" + num(x) +
           "\" y2=\"" + num(axis_y + 5) + "\" stroke=\"black\"/>\n";
    svg += text(x, axis_y + 18, num(frac), 11, "middle");
  }
  svg += text(left + plot_w / 2, axis_y + 36, "propensity score", 12, "middle");
  svg += "</svg>\n";
  return svg;
}

}  // namespace psbal
