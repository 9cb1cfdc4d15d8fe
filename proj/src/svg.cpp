#include "extasym/svg.hpp"

#include "extasym/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace extasym {

namespace {

std::string xml_escape(const std::string& s) {
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

std::string fmt(double v) {
  // Two decimals are plenty for pixel coordinates and keep files small.
  return format_double(std::round(v * 100.0) / 100.0);
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_loglog_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!(s.x[i] > 0.0 && s.y[i] > 0.0) || !std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.y[i]));
      ymax = std::max(ymax, std::log10(s.y[i]));
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  xmin = std::floor(xmin), xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin), ymax = std::max(std::ceil(ymax), ymin + 1);
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
     << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
     << "</text>\n";
  for (int e = static_cast<int>(xmin); e <= static_cast<int>(xmax); ++e)
    os << "<line x1=\"" << fmt(px(e)) << "\" y1=\"" << T << "\" x2=\"" << fmt(px(e)) << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/>\n<text x=\"" << fmt(px(e)) << "\" y=\"" << H - B + 16
       << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); ++e)
    os << "<line x1=\"" << L << "\" y1=\"" << fmt(py(e)) << "\" x2=\"" << W - R << "\" y2=\"" << fmt(py(e))
       << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 6 << "\" y=\"" << fmt(py(e) + 4)
       << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(ylabel) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string path;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!(s.x[i] > 0.0 && s.y[i] > 0.0) || !std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double X = px(std::log10(s.x[i])), Y = py(std::log10(s.y[i]));
      path += (path.empty() ? "M" : " L") + fmt(X) + "," + fmt(Y);
      os << "<circle cx=\"" << fmt(X) << "\" cy=\"" << fmt(Y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    if (s.line && !path.empty())
      os << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    const double ly = T + 16 + 18.0 * static_cast<double>(k);
    os << "<rect x=\"" << W - R + 10 << "\" y=\"" << fmt(ly - 9) << "\" width=\"10\" height=\"10\" fill=\"" << color
       << "\"/>\n<text x=\"" << W - R + 26 << "\" y=\"" << fmt(ly) << "\">" << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace extasym
