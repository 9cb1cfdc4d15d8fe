#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace extasym {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Draw a polyline through the points as well as the markers.
  bool line = true;
};

/// Minimal log-log plot. Nonpositive points are dropped. Output depends only
/// on the inputs.
void write_loglog_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<PlotSeries>& series);

}  // namespace extasym
