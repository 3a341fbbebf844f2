#include "sbmh/cli/svg.hpp"

#include "sbmh/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace sbmh::cli {

namespace {

constexpr double kW = 480, kH = 360, kMargin = 48;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kW - 2 * kMargin); }
  double py(double y) const { return kH - kMargin - (y - y0) / (y1 - y0) * (kH - 2 * kMargin); }
};

Frame make_frame(double x0, double x1, double y0, double y1) {
  auto pad = [](double& lo, double& hi) {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  };
  pad(x0, x1);
  pad(y0, y1);
  return {x0, x1, y0, y1};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void header(std::ostream& os, const Frame& f, const std::string& title, const std::string& xl,
            const std::string& yl) {
  os << std::setprecision(4);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
     << "</text>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin
     << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
     << kH - kMargin << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kMargin << "\" y=\"" << kH - kMargin + 14 << "\">" << f.x0 << "</text>\n"
     << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - kMargin + 14
     << "\" text-anchor=\"end\">" << f.x1 << "</text>\n"
     << "<text x=\"" << kMargin - 4 << "\" y=\"" << kH - kMargin << "\" text-anchor=\"end\">" << f.y0
     << "</text>\n"
     << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4 << "\" text-anchor=\"end\">" << f.y1
     << "</text>\n";
  if (!xl.empty()) {
    os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">" << escape(xl)
       << "</text>\n";
  }
  if (!yl.empty()) {
    os << "<text x=\"14\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 14 " << kH / 2
       << ")\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
  }
}

}  // namespace

std::string svg_scatter(const Array& points, const std::string& title, std::size_t max_points) {
  std::ostringstream os;
  if (points.rows() == 0 || points.cols() == 0) {
    header(os, make_frame(0, 1, 0, 1), title, "", "");
    os << "</svg>\n";
    return os.str();
  }
  const Eigen::Index ycol = points.cols() > 1 ? 1 : 0;
  const Frame f = make_frame(points.col(0).minCoeff(), points.col(0).maxCoeff(),
                             points.col(ycol).minCoeff(), points.col(ycol).maxCoeff());
  header(os, f, title, "x0", ycol == 1 ? "x1" : "x0");
  const Eigen::Index stride =
      std::max<Eigen::Index>(1, points.rows() / static_cast<Eigen::Index>(std::max<std::size_t>(1, max_points)));
  for (Eigen::Index i = 0; i < points.rows(); i += stride) {
    os << "<circle cx=\"" << f.px(points(i, 0)) << "\" cy=\"" << f.py(points(i, ycol))
       << "\" r=\"1.2\" fill=\"" << kColors[0] << "\" fill-opacity=\"0.5\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_lines(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  const Frame f = make_frame(x0, x1, y0, y1);
  std::ostringstream os;
  header(os, f, title, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.y[i])) os << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.y[i])) {
        os << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(s.y[i]) << "\" r=\"2.5\" fill=\""
           << color << "\"/>\n";
      }
    }
    os << "<text x=\"" << kW - kMargin - 4 << "\" y=\"" << kMargin + 14 * k << "\" text-anchor=\"end\" fill=\""
       << color << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace sbmh::cli
