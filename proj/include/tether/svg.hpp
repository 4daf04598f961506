#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tether {

/// Minimal self-contained SVG line-plot writer: axes, ticks, legend, and one
/// polyline per series. Long series are decimated for file size; values are
/// formatted with %g so identical data produces identical files.
class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label);

  void add_series(std::string name, std::string color,
                  std::vector<std::pair<double, double>> points);
  /// Force identical x/y scales (for top-down geometry plots).
  void set_equal_aspect(bool equal) { equal_aspect_ = equal; }

  void write(const std::string& file_path) const;

 private:
  struct Series {
    std::string name;
    std::string color;
    std::vector<std::pair<double, double>> points;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  bool equal_aspect_ = false;
};

}  // namespace tether
