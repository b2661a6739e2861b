// Minimal SVG plot writer: axes, polylines, scatter points, legend.
// Deterministic output (no timestamps), so reruns produce identical bytes.
#pragma once

#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "pdfscan/errors.hpp"

namespace pdfscan::tools {

inline const std::vector<std::string>& plot_palette() {
  static const std::vector<std::string> colors{
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors;
}

class SvgPlot {
 public:
  SvgPlot(int width, int height, std::string title, std::string x_label,
          std::string y_label)
      : width_(width),
        height_(height),
        title_(std::move(title)),
        x_label_(std::move(x_label)),
        y_label_(std::move(y_label)) {}

  void set_range(double x_min, double x_max, double y_min, double y_max) {
    x_min_ = x_min;
    x_max_ = x_max > x_min ? x_max : x_min + 1.0;
    y_min_ = y_min;
    y_max_ = y_max > y_min ? y_max : y_min + 1.0;
  }

  void polyline(const std::vector<std::pair<double, double>>& points,
                const std::string& color, const std::string& label) {
    Series s;
    s.points = points;
    s.color = color;
    s.label = label;
    s.scatter = false;
    series_.push_back(std::move(s));
  }

  void scatter(const std::vector<std::pair<double, double>>& points,
               const std::string& color, const std::string& label,
               double radius = 2.5) {
    Series s;
    s.points = points;
    s.color = color;
    s.label = label;
    s.scatter = true;
    s.radius = radius;
    series_.push_back(std::move(s));
  }

  void write(const std::string& path) const {
    std::string out;
    out += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
               "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
               width_, height_, width_, height_);
    out += fmt("<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width_,
               height_);
    out += fmt("<text x=\"%d\" y=\"18\" font-family=\"sans-serif\" "
               "font-size=\"14\" text-anchor=\"middle\">%s</text>\n",
               width_ / 2, title_.c_str());

    const double px0 = kMarginLeft, px1 = width_ - kMarginRight;
    const double py0 = height_ - kMarginBottom, py1 = kMarginTop;
    out += fmt("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" "
               "fill=\"none\" stroke=\"#444\"/>\n",
               px0, py1, px1 - px0, py0 - py1);

    for (int i = 0; i <= kTicks; ++i) {
      const double fx = static_cast<double>(i) / kTicks;
      const double vx = x_min_ + fx * (x_max_ - x_min_);
      const double x = px0 + fx * (px1 - px0);
      out += fmt("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                 "stroke=\"#444\"/>\n",
                 x, py0, x, py0 + 4);
      out += fmt("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                 "font-size=\"10\" text-anchor=\"middle\">%g</text>\n",
                 x, py0 + 16, vx);
      const double vy = y_min_ + fx * (y_max_ - y_min_);
      const double y = py0 - fx * (py0 - py1);
      out += fmt("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                 "stroke=\"#444\"/>\n",
                 px0 - 4, y, px0, y);
      out += fmt("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                 "font-size=\"10\" text-anchor=\"end\">%g</text>\n",
                 px0 - 7, y + 3, vy);
    }
    out += fmt("<text x=\"%g\" y=\"%d\" font-family=\"sans-serif\" "
               "font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
               (px0 + px1) / 2, height_ - 8, x_label_.c_str());
    out += fmt("<text x=\"14\" y=\"%g\" font-family=\"sans-serif\" "
               "font-size=\"12\" text-anchor=\"middle\" "
               "transform=\"rotate(-90 14 %g)\">%s</text>\n",
               (py0 + py1) / 2, (py0 + py1) / 2, y_label_.c_str());

    for (const auto& s : series_) {
      if (s.scatter) {
        for (const auto& [vx, vy] : s.points) {
          out += fmt("<circle cx=\"%g\" cy=\"%g\" r=\"%g\" fill=\"%s\" "
                     "fill-opacity=\"0.75\"/>\n",
                     map_x(vx), map_y(vy), s.radius, s.color.c_str());
        }
      } else if (!s.points.empty()) {
        out += "<polyline fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [vx, vy] : s.points) {
          out += fmt("%g,%g ", map_x(vx), map_y(vy));
        }
        out += "\"/>\n";
      }
    }

    double ly = kMarginTop + 12;
    for (const auto& s : series_) {
      if (s.label.empty()) continue;
      const double lx = width_ - kMarginRight - 130;
      out += fmt("<rect x=\"%g\" y=\"%g\" width=\"10\" height=\"10\" "
                 "fill=\"%s\"/>\n",
                 lx, ly - 9, s.color.c_str());
      out += fmt("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                 "font-size=\"11\">%s</text>\n",
                 lx + 14, ly, s.label.c_str());
      ly += 16;
    }
    out += "</svg>\n";

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    const std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
    const int rc = std::fclose(f);
    if (written != out.size() || rc != 0) throw IoError("short write: " + path);
  }

 private:
  struct Series {
    std::vector<std::pair<double, double>> points;
    std::string color;
    std::string label;
    bool scatter = false;
    double radius = 2.5;
  };

  static std::string fmt(const char* f, ...)
      __attribute__((format(printf, 1, 2))) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
  }

  double map_x(double v) const {
    const double f = (v - x_min_) / (x_max_ - x_min_);
    return kMarginLeft + f * (width_ - kMarginLeft - kMarginRight);
  }
  double map_y(double v) const {
    const double f = (v - y_min_) / (y_max_ - y_min_);
    return height_ - kMarginBottom -
           f * (height_ - kMarginBottom - kMarginTop);
  }

  static constexpr double kMarginLeft = 64, kMarginRight = 16;
  static constexpr double kMarginTop = 28, kMarginBottom = 46;
  static constexpr int kTicks = 5;

  int width_, height_;
  std::string title_, x_label_, y_label_;
  double x_min_ = 0.0, x_max_ = 1.0, y_min_ = 0.0, y_max_ = 1.0;
  std::vector<Series> series_;
};

}  // namespace pdfscan::tools
