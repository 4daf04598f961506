#include "tether/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "tether/errors.hpp"

namespace tether {
namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 540.0;
constexpr double kMarginLeft = 72.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 56.0;
constexpr std::size_t kMaxPointsPerSeries = 2000;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

LinePlot::LinePlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void LinePlot::add_series(std::string name, std::string color,
                          std::vector<std::pair<double, double>> points) {
  series_.push_back(Series{std::move(name), std::move(color), std::move(points)});
}

void LinePlot::write(const std::string& file_path) const {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const auto& s : series_) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (!(x_min <= x_max)) {  // no data at all
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.0;
    y_max = 1.0;
  }
  if (x_max - x_min < 1e-12) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  // 5% padding around data
  const double x_pad = 0.05 * (x_max - x_min);
  const double y_pad = 0.05 * (y_max - y_min);
  x_min -= x_pad;
  x_max += x_pad;
  y_min -= y_pad;
  y_max += y_pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  double sx = plot_w / (x_max - x_min);
  double sy = plot_h / (y_max - y_min);
  if (equal_aspect_) {
    const double s = std::min(sx, sy);
    // Re-center the wider axis.
    const double extra_x = (plot_w / s - (x_max - x_min)) / 2.0;
    const double extra_y = (plot_h / s - (y_max - y_min)) / 2.0;
    x_min -= extra_x;
    x_max += extra_x;
    y_min -= extra_y;
    y_max += extra_y;
    sx = sy = s;
  }
  const auto map_x = [&](double x) { return kMarginLeft + (x - x_min) * sx; };
  const auto map_y = [&](double y) { return kHeight - kMarginBottom - (y - y_min) * sy; };

  std::ofstream out(file_path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open plot output file: " + file_path);
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title_) << "</text>\n";

  // Axes frame
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";

  // Ticks and grid: 6 divisions per axis
  for (int i = 0; i <= 6; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 6.0;
    const double px = map_x(fx);
    out << "<line x1=\"" << px << "\" y1=\"" << kMarginTop << "\" x2=\"" << px << "\" y2=\""
        << kHeight - kMarginBottom << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kHeight - kMarginBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fx)
        << "</text>\n";
    const double fy = y_min + (y_max - y_min) * i / 6.0;
    const double py = map_y(fy);
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << py << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape(x_label_) << "</text>\n";
  out << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << kMarginTop + plot_h / 2 << ")\">" << escape(y_label_)
      << "</text>\n";

  // Series polylines (clipped to the frame)
  out << "<clipPath id=\"plotArea\"><rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
      << "\" width=\"" << plot_w << "\" height=\"" << plot_h << "\"/></clipPath>\n";
  for (const auto& s : series_) {
    if (s.points.empty()) continue;
    const std::size_t stride = std::max<std::size_t>(1, s.points.size() / kMaxPointsPerSeries);
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" clip-path=\"url(#plotArea)\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); i += stride) {
      out << fmt(map_x(s.points[i].first)) << ',' << fmt(map_y(s.points[i].second)) << ' ';
    }
    // Always include the final point so the curve reaches its endpoint.
    if ((s.points.size() - 1) % stride != 0) {
      out << fmt(map_x(s.points.back().first)) << ',' << fmt(map_y(s.points.back().second));
    }
    out << "\"/>\n";
  }

  // Legend (top-right corner)
  double ly = kMarginTop + 16.0;
  for (const auto& s : series_) {
    const double lx = kWidth - kMarginRight - 180.0;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 24 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << lx + 30 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.name) << "</text>\n";
    ly += 18.0;
  }

  out << "</svg>\n";
  if (!out) {
    throw ConfigError("failed while writing plot: " + file_path);
  }
}

}  // namespace tether
