#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace embedlab::svg {

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

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

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

struct Frame {
  double width = 640, height = 420, left = 64, right = 24, top = 40, bottom = 52;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

  double px(double x) const { return left + (x - xmin) / (xmax - xmin) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom); }

  void fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    auto span = [](const std::vector<double>& v, double& lo, double& hi) {
      lo = std::numeric_limits<double>::infinity();
      hi = -lo;
      for (double x : v)
        if (std::isfinite(x)) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      if (!std::isfinite(lo)) lo = 0, hi = 1;
      if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    };
    span(xs, xmin, xmax);
    span(ys, ymin, ymax);
  }
};

inline std::string open(const Frame& f, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.width) +
                  "\" height=\"" + num(f.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(f.width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  return s;
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s;
  const double x0 = f.left, y0 = f.height - f.bottom, x1 = f.width - f.right, y1 = f.top;
  s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.xmin + (f.xmax - f.xmin) * i / 4.0;
    const double yv = f.ymin + (f.ymax - f.ymin) * i / 4.0;
    s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" +
         num(xv) + "</text>\n";
    s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" +
         num(yv) + "</text>\n";
  }
  s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(f.height - 12) +
       "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
  s += "<text x=\"14\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       num((y0 + y1) / 2) + ")\">" + escape(ylabel) + "</text>\n";
  return s;
}

}  // namespace detail

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline std::string line_chart(const std::vector<Series>& series, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel) {
  detail::Frame f;
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  f.fit(xs, ys);
  std::string out = detail::open(f, title) + detail::axes(f, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      pts += detail::num(f.px(s.x[i])) + "," + detail::num(f.py(s.y[i])) + " ";
      out += "<circle cx=\"" + detail::num(f.px(s.x[i])) + "\" cy=\"" + detail::num(f.py(s.y[i])) +
             "\" r=\"3\" fill=\"" + detail::palette(k) + "\"/>\n";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(k)) +
           "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    out += "<text x=\"" + detail::num(f.width - f.right - 4) + "\" y=\"" +
           detail::num(f.top + 14 + 16.0 * k) + "\" text-anchor=\"end\" fill=\"" + detail::palette(k) +
           "\">" + detail::escape(s.name) + "</text>\n";
  }
  return out + "</svg>\n";
}

struct Point {
  double x = 0, y = 0;
  std::size_t group = 0;
  std::string label;
};

// Points coloured by group, each labelled with its text.
inline std::string scatter(const std::vector<Point>& points, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel) {
  detail::Frame f;
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  f.fit(xs, ys);
  std::string out = detail::open(f, title) + detail::axes(f, xlabel, ylabel);
  for (const auto& p : points) {
    out += "<circle cx=\"" + detail::num(f.px(p.x)) + "\" cy=\"" + detail::num(f.py(p.y)) +
           "\" r=\"4\" fill=\"" + detail::palette(p.group) + "\"/>\n";
    if (!p.label.empty())
      out += "<text x=\"" + detail::num(f.px(p.x) + 5) + "\" y=\"" + detail::num(f.py(p.y) - 5) +
             "\" font-size=\"9\">" + detail::escape(p.label) + "</text>\n";
  }
  return out + "</svg>\n";
}

// Count matrix, rows = true class, columns = predicted class.
inline std::string heatmap(const std::vector<std::vector<std::uint64_t>>& counts,
                           const std::vector<std::string>& labels, const std::string& title) {
  const std::size_t n = counts.size();
  const double cell = 56, left = 110, top = 60;
  detail::Frame f;
  f.width = left + cell * static_cast<double>(n) + 24;
  f.height = top + cell * static_cast<double>(n) + 40;
  std::uint64_t peak = 1;
  for (const auto& r : counts)
    for (auto c : r) peak = std::max(peak, c);
  std::string out = detail::open(f, title);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = i < labels.size() ? labels[i] : std::to_string(i);
    out += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(top + cell * (i + 0.5) + 4) +
           "\" text-anchor=\"end\">" + detail::escape(name) + "</text>\n";
    out += "<text x=\"" + detail::num(left + cell * (i + 0.5)) + "\" y=\"" + detail::num(top - 8) +
           "\" text-anchor=\"middle\">" + detail::escape(name) + "</text>\n";
    for (std::size_t j = 0; j < n; ++j) {
      const double shade = static_cast<double>(counts[i][j]) / static_cast<double>(peak);
      const int level = static_cast<int>(std::lround(255.0 * (1.0 - shade)));
      char color[16];
      std::snprintf(color, sizeof color, "#%02x%02xff", level, level);
      out += "<rect x=\"" + detail::num(left + cell * j) + "\" y=\"" + detail::num(top + cell * i) +
             "\" width=\"" + detail::num(cell) + "\" height=\"" + detail::num(cell) + "\" fill=\"" +
             color + "\" stroke=\"#999\"/>\n";
      out += "<text x=\"" + detail::num(left + cell * (j + 0.5)) + "\" y=\"" +
             detail::num(top + cell * (i + 0.5) + 4) + "\" text-anchor=\"middle\" fill=\"" +
             (shade > 0.6 ? "white" : "black") + "\">" + std::to_string(counts[i][j]) + "</text>\n";
    }
  }
  out += "<text x=\"" + detail::num(left + cell * n / 2.0) + "\" y=\"" + detail::num(f.height - 12) +
         "\" text-anchor=\"middle\">predicted</text>\n";
  return out + "</svg>\n";
}

}  // namespace embedlab::svg
