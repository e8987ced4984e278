#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "overhyp/error.hpp"
#include "overhyp/experiment/grid.hpp"
#include "overhyp/io/csv.hpp"

namespace overhyp::plot {

/// Block-averaged accuracy of one (w, s, domain, label) cell.
struct CellMean {
  double w = 0.0, s = 0.0;
  BiasClass domain_bias = BiasClass::None;
  BiasClass label_bias = BiasClass::None;
  double mean = 0.0;
  /// sqrt(sum of block SE^2) / n_blocks.
  double se = 0.0;
};

inline std::size_t bias_index(BiasClass b) { return b == BiasClass::Right ? 0 : b == BiasClass::None ? 1 : 2; }

/// Averages summary rows over blocks; output ordered by (w, s), domain, label.
inline std::vector<CellMean> block_averages(const std::vector<SummaryRow>& rows) {
  if (rows.empty()) throw InvalidParameter("plot: empty summary");
  struct Acc {
    double sum = 0, se2 = 0;
    int n = 0;
  };
  std::map<std::tuple<double, double, std::size_t, std::size_t>, Acc> acc;
  for (const auto& r : rows) {
    auto& a = acc[{r.w, r.s, bias_index(r.domain_bias), bias_index(r.label_bias)}];
    a.sum += r.mean_accuracy;
    a.se2 += r.se * r.se;
    ++a.n;
  }
  std::vector<CellMean> out;
  for (const auto& [k, a] : acc) {
    CellMean c;
    c.w = std::get<0>(k);
    c.s = std::get<1>(k);
    c.domain_bias = kBiasClasses[std::get<2>(k)];
    c.label_bias = kBiasClasses[std::get<3>(k)];
    c.mean = a.sum / a.n;
    c.se = std::sqrt(a.se2) / a.n;
    out.push_back(c);
  }
  return out;
}

inline std::string label3(double v) { return fmt::format("{:.3f}", v); }

inline std::string setting_title(double w, double s) {
  return "w=" + io::format_double(w) + ", s=" + io::format_double(s);
}

namespace svg_detail {

inline std::string escape(const std::string& s) {
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

class Doc {
 public:
  Doc(double w, double h) {
    body_ = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" "
        "height=\"{}\" viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" "
        "fill=\"white\"/>\n",
        w, h, w, h);
  }
  void text(double x, double y, const std::string& t, int size = 12, const char* anchor = "middle",
            const char* fill = "black") {
    body_ += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"{}\" text-anchor=\"{}\" fill=\"{}\">{}</text>\n",
                         x, y, size, anchor, fill, escape(t));
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\" "
                         "stroke=\"white\"/>\n",
                         x, y, w, h, fill);
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0) {
    body_ += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" "
                         "stroke-width=\"{}\"/>\n",
                         x1, y1, x2, y2, stroke, width);
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"{}\" fill=\"{}\"/>\n", x, y, r, fill);
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    std::string p;
    for (const auto& [x, y] : pts) p += fmt::format("{:.1f},{:.1f} ", x, y);
    body_ += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", p, stroke);
  }
  std::string str() const { return body_ + "</svg>\n"; }

 private:
  std::string body_;
};

/// Light-to-dark blue ramp for t in [0, 1].
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const std::array<double, 3> lo{239, 243, 255}, hi{8, 69, 148};
  return fmt::format("rgb({},{},{})", static_cast<int>(std::lround(lo[0] + t * (hi[0] - lo[0]))),
                     static_cast<int>(std::lround(lo[1] + t * (hi[1] - lo[1]))),
                     static_cast<int>(std::lround(lo[2] + t * (hi[2] - lo[2]))));
}

inline const char* series_color(std::size_t i) {
  static const char* c[] = {"#1b9e77", "#7570b3", "#d95f02"};
  return c[i % 3];
}

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

inline std::pair<double, double> value_range(const std::vector<CellMean>& cells, bool with_se) {
  double lo = 1.0, hi = 0.0;
  for (const auto& c : cells) {
    lo = std::min(lo, c.mean - (with_se ? c.se : 0.0));
    hi = std::max(hi, c.mean + (with_se ? c.se : 0.0));
  }
  if (hi - lo < 1e-3) {
    lo -= 0.005;
    hi += 0.005;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace svg_detail

/// 3 x 3 heatmap (rows: domain bias, columns: label bias) for one setting.
inline std::string heatmap_svg(const std::vector<CellMean>& cells, double w, double s) {
  std::vector<const CellMean*> sel;
  for (const auto& c : cells)
    if (c.w == w && c.s == s) sel.push_back(&c);
  if (sel.empty()) throw InvalidParameter("heatmap_svg: no cells for " + setting_title(w, s));
  double lo = 1.0, hi = 0.0;
  for (const auto* c : sel) {
    lo = std::min(lo, c->mean);
    hi = std::max(hi, c->mean);
  }
  const double cell = 90, x0 = 120, y0 = 70;
  svg_detail::Doc doc(x0 + 3 * cell + 40, y0 + 3 * cell + 60);
  doc.text(x0 + 1.5 * cell, 28, "Average accuracy (" + setting_title(w, s) + ")", 15);
  doc.text(x0 + 1.5 * cell, 52, "Label bias", 12);
  doc.text(24, y0 + 1.5 * cell, "Domain", 12, "middle");
  for (std::size_t j = 0; j < 3; ++j) {
    doc.text(x0 + (static_cast<double>(j) + 0.5) * cell, y0 + 3 * cell + 20, std::string(to_string(kBiasClasses[j])));
    doc.text(x0 - 10, y0 + (static_cast<double>(j) + 0.5) * cell + 4, std::string(to_string(kBiasClasses[j])), 12, "end");
  }
  for (const auto* c : sel) {
    const double t = hi > lo ? (c->mean - lo) / (hi - lo) : 0.5;
    const double x = x0 + static_cast<double>(bias_index(c->label_bias)) * cell;
    const double y = y0 + static_cast<double>(bias_index(c->domain_bias)) * cell;
    doc.rect(x, y, cell, cell, svg_detail::ramp(t));
    doc.text(x + cell / 2, y + cell / 2 + 5, label3(c->mean), 14, "middle", t > 0.55 ? "white" : "black");
  }
  return doc.str();
}

/// One panel per setting: accuracy against label bias, one line per domain bias.
inline std::string interaction_svg(const std::vector<CellMean>& cells) {
  if (cells.empty()) throw InvalidParameter("interaction_svg: no cells");
  std::vector<std::pair<double, double>> settings;
  for (const auto& c : cells)
    if (std::find(settings.begin(), settings.end(), std::pair{c.w, c.s}) == settings.end()) settings.emplace_back(c.w, c.s);
  const auto [lo, hi] = svg_detail::value_range(cells, false);
  const double pw = 260, ph = 220, x0 = 70, y0 = 60;
  svg_detail::Doc doc(x0 + static_cast<double>(settings.size()) * pw + 120, y0 + ph + 70);
  doc.text((x0 + static_cast<double>(settings.size()) * pw) / 2, 28, "Label x domain interaction", 15);
  const svg_detail::Scale ys{lo, hi, y0 + ph, y0};
  for (double v : {lo, (lo + hi) / 2, hi}) doc.text(x0 - 8, ys(v) + 4, label3(v), 10, "end");
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const double px = x0 + static_cast<double>(k) * pw;
    const svg_detail::Scale xs{0, 2, px + 30, px + pw - 30};
    doc.line(px + 10, y0 + ph, px + pw - 10, y0 + ph, "#444");
    doc.line(px + 10, y0, px + 10, y0 + ph, "#444");
    doc.text(px + pw / 2, y0 - 10, setting_title(settings[k].first, settings[k].second), 12);
    for (std::size_t j = 0; j < 3; ++j)
      doc.text(xs(static_cast<double>(j)), y0 + ph + 18, std::string(to_string(kBiasClasses[j])), 11);
    doc.text(px + pw / 2, y0 + ph + 38, "Label bias", 11);
    for (std::size_t d = 0; d < 3; ++d) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& c : cells)
        if (c.w == settings[k].first && c.s == settings[k].second && bias_index(c.domain_bias) == d)
          pts.emplace_back(xs(static_cast<double>(bias_index(c.label_bias))), ys(c.mean));
      std::sort(pts.begin(), pts.end());
      doc.polyline(pts, svg_detail::series_color(d));
      for (const auto& [x, y] : pts) doc.circle(x, y, 3.5, svg_detail::series_color(d));
    }
  }
  const double lx = x0 + static_cast<double>(settings.size()) * pw + 10;
  doc.text(lx, y0 + 10, "Domain bias", 11, "start");
  for (std::size_t d = 0; d < 3; ++d) {
    const double y = y0 + 30 + 20 * static_cast<double>(d);
    doc.line(lx, y - 4, lx + 20, y - 4, svg_detail::series_color(d), 2);
    doc.text(lx + 26, y, std::string(to_string(kBiasClasses[d])), 11, "start");
  }
  return doc.str();
}

/// Every cell's block-averaged accuracy with +/- 1 SE bars.
inline std::string dotplot_svg(const std::vector<CellMean>& cells) {
  if (cells.empty()) throw InvalidParameter("dotplot_svg: no cells");
  const auto [lo, hi] = svg_detail::value_range(cells, true);
  const double row = 22, x0 = 260, width = 420, y0 = 60;
  const double height = y0 + row * static_cast<double>(cells.size()) + 50;
  svg_detail::Doc doc(x0 + width + 90, height);
  doc.text((x0 + width) / 2 + 60, 28, "Average accuracy +/- SE", 15);
  const svg_detail::Scale xs{lo, hi, x0, x0 + width};
  const double axis_y = y0 + row * static_cast<double>(cells.size()) + 5;
  doc.line(x0, axis_y, x0 + width, axis_y, "#444");
  for (double v : {lo, (lo + hi) / 2, hi}) doc.text(xs(v), axis_y + 18, label3(v), 10);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const double y = y0 + row * (static_cast<double>(i) + 0.5);
    doc.text(x0 - 10, y + 4,
             setting_title(c.w, c.s) + "  domain " + std::string(to_string(c.domain_bias)) + ", label " +
                 std::string(to_string(c.label_bias)),
             11, "end");
    doc.line(xs(c.mean - c.se), y, xs(c.mean + c.se), y, "#555", 1.5);
    doc.circle(xs(c.mean), y, 4, svg_detail::series_color(bias_index(c.label_bias)));
    doc.text(x0 + width + 10, y + 4, label3(c.mean), 10, "start");
  }
  return doc.str();
}

struct PlotFile {
  std::string name;
  std::string content;
};

/// Heatmap per setting, then interaction.svg and dotplot.svg.
inline std::vector<PlotFile> render_all(const std::vector<SummaryRow>& rows) {
  const auto cells = block_averages(rows);
  std::vector<PlotFile> out;
  std::vector<std::pair<double, double>> settings;
  for (const auto& c : cells)
    if (std::find(settings.begin(), settings.end(), std::pair{c.w, c.s}) == settings.end()) settings.emplace_back(c.w, c.s);
  for (const auto& [w, s] : settings)
    out.push_back({"heatmap_w" + io::format_double(w) + "_s" + io::format_double(s) + ".svg", heatmap_svg(cells, w, s)});
  out.push_back({"interaction.svg", interaction_svg(cells)});
  out.push_back({"dotplot.svg", dotplot_svg(cells)});
  return out;
}

}  // namespace overhyp::plot
