#pragma once

// CSV tables and SVG line plots for branches, profiles and traces.
// Numbers are written in shortest round-trip form, so parse(render(t)) == t.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mems4/error.hpp"

namespace mems4::io {

[[nodiscard]] inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last)
    throw Error(Errc::invalid_argument, "not a number: '" + std::string(s) + "'");
  return x;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    require(row.size() == header.size(), Errc::invalid_argument, "row width differs from header");
    rows.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw Error(Errc::invalid_argument, "no column '" + std::string(name) + "'");
  }

  [[nodiscard]] std::string render() const {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j) out += ',';
      out += header[j];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out += ',';
        out += format_double(row[j]);
      }
      out += '\n';
    }
    return out;
  }

  [[nodiscard]] static CsvTable parse(std::string_view text) {
    CsvTable t;
    auto split = [](std::string_view line) {
      std::vector<std::string_view> cells;
      std::size_t start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      return cells;
    };
    bool first = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      const auto cells = split(line);
      if (first) {
        for (auto c : cells) t.header.emplace_back(c);
        first = false;
        continue;
      }
      require(cells.size() == t.header.size(), Errc::invalid_argument, "csv row width differs from header");
      std::vector<double> row;
      row.reserve(cells.size());
      for (auto c : cells) row.push_back(parse_double(c));
      t.rows.push_back(std::move(row));
    }
    require(!first, Errc::invalid_argument, "csv has no header");
    return t;
  }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::invalid_argument, "cannot write " + path);
  f << text;
  if (!f) throw Error(Errc::invalid_argument, "write failed: " + path);
}

[[nodiscard]] inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::invalid_argument, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

namespace detail {

inline std::string escape_xml(std::string_view s) {
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

// Tick positions at 1, 2 or 5 times a power of ten.
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
    ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return ticks;
}

inline std::string tick_label(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

}  // namespace detail

struct SvgPlot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;

  static constexpr int kWidth = 800;
  static constexpr int kHeight = 600;

  [[nodiscard]] std::string render() const {
    constexpr double left = 90, right = 30, top = 50, bottom = 70;
    const double pw = kWidth - left - right;
    const double ph = kHeight - top - bottom;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double ypad = 0.05 * (y1 - y0);
    y0 -= ypad;
    y1 += ypad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream o;
    o.precision(6);
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">"
      << detail::escape_xml(title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : detail::nice_ticks(x0, x1)) {
      const double x = px(t);
      o << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x << "\" y2=\"" << top + ph + 6
        << "\" stroke=\"black\"/>";
      o << "<text x=\"" << x << "\" y=\"" << top + ph + 22
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::tick_label(t)
        << "</text>\n";
    }
    for (double t : detail::nice_ticks(y0, y1)) {
      const double y = py(t);
      o << "<line x1=\"" << left - 6 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
        << "\" stroke=\"black\"/>";
      o << "<text x=\"" << left - 10 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << detail::tick_label(t)
        << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << kHeight - 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << detail::escape_xml(xlabel)
      << "</text>\n";
    o << "<text x=\"20\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\""
      << " transform=\"rotate(-90 20 " << top + ph / 2 << ")\">" << detail::escape_xml(ylabel) << "</text>\n";
    int k = 0;
    for (const auto& s : series) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      }
      o << "\"/>\n";
      if (!s.label.empty()) {
        const double ly = top + 20 + 18 * k;
        o << "<line x1=\"" << left + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw - 125 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>";
        o << "<text x=\"" << left + pw - 120 << "\" y=\"" << ly
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::escape_xml(s.label) << "</text>\n";
      }
      ++k;
    }
    o << "</svg>\n";
    return o.str();
  }
};

}  // namespace mems4::io
