#pragma once

#include <string>
#include <vector>

namespace momsurv::svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "black";
  double width = 1.5;
  bool dashed = false;
  bool step = false;  // right-continuous step function
};

// Static line plot with axes, ticks and a legend.
class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label);

  void set_x_range(double lo, double hi);
  void set_y_range(double lo, double hi);
  void add(Series series);
  // Vertical reference line.
  void add_vline(double x, std::string label, std::string color, bool dashed = true);

  std::string render(int width = 640, int height = 420) const;

 private:
  std::string title_;
  std::string x_label_;
  std::string y_label_;
  double x_lo_ = 0.0, x_hi_ = 1.0, y_lo_ = 0.0, y_hi_ = 1.0;
  bool x_fixed_ = false, y_fixed_ = false;
  std::vector<Series> series_;
};

}  // namespace momsurv::svg
