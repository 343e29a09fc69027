// Copyright 2026 The wildcensus Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wildcensus/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>

#include "wildcensus/error.hpp"
#include "wildcensus/io.hpp"

namespace wildcensus {

namespace {

// Plot area inside a 480 x 360 canvas.
constexpr double kLeft = 60.0;
constexpr double kTop = 40.0;
constexpr double kWidth = 390.0;
constexpr double kHeight = 270.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
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

double px(double x) { return kLeft + std::clamp(x, 0.0, 1.0) * kWidth; }
double py(double y) { return kTop + (1.0 - std::clamp(y, 0.0, 1.0)) * kHeight; }

std::string open_svg(std::string_view title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" viewBox=\"0 0 480 360\" "
         "font-family=\"sans-serif\" font-size=\"11\">\n"
         "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n"
         "<text x=\"240\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
}

/// Unit-square axes with ticks every 0.2.
std::string unit_axes(std::string_view xlabel, std::string_view ylabel) {
  std::string s = "<g stroke=\"#ccc\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = i / 5.0;
    s += "<line x1=\"" + fmt(px(t)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(t)) + "\" y2=\"" + fmt(py(1)) + "\"/>\n";
    s += "<line x1=\"" + fmt(px(0)) + "\" y1=\"" + fmt(py(t)) + "\" x2=\"" + fmt(px(1)) + "\" y2=\"" + fmt(py(t)) + "\"/>\n";
  }
  s += "</g>\n<g text-anchor=\"middle\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = i / 5.0;
    s += "<text x=\"" + fmt(px(t)) + "\" y=\"" + fmt(py(0) + 15) + "\">" + fmt(t).substr(0, 3) + "</text>\n";
    s += "<text x=\"" + fmt(kLeft - 18) + "\" y=\"" + fmt(py(t) + 4) + "\">" + fmt(t).substr(0, 3) + "</text>\n";
  }
  s += "<text x=\"" + fmt(kLeft + kWidth / 2) + "\" y=\"" + fmt(py(0) + 32) + "\">" + escape(xlabel) + "</text>\n";
  s += "<text transform=\"translate(16 " + fmt(kTop + kHeight / 2) + ") rotate(-90)\">" + escape(ylabel) + "</text>\n";
  s += "</g>\n<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(kWidth) + "\" height=\"" +
       fmt(kHeight) + "\" fill=\"none\" stroke=\"black\"/>\n";
  return s;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ValidationError("not a number: '" + std::string(s) + "'", line);
  }
  return v;
}

/// Data rows of a CSV with the exact header `header`.
std::vector<std::vector<std::string_view>> rows(std::string_view text, std::string_view header,
                                                std::vector<std::size_t>& lines) {
  std::vector<std::vector<std::string_view>> out;
  std::size_t line = 0;
  bool seen_header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view row = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.empty()) continue;
    if (!seen_header) {
      if (row != header) throw ValidationError("expected header '" + std::string(header) + "'", line);
      seen_header = true;
      continue;
    }
    std::vector<std::string_view> cells;
    for (std::size_t pos = 0;;) {
      const auto comma = row.find(',', pos);
      cells.push_back(row.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    const auto want = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    if (cells.size() != want) throw ValidationError("expected " + std::to_string(want) + " columns", line);
    out.push_back(std::move(cells));
    lines.push_back(line);
  }
  if (!seen_header) throw ValidationError("missing header '" + std::string(header) + "'");
  return out;
}

}  // namespace

std::vector<PRPoint> parse_pr_csv(std::string_view text) {
  std::vector<std::size_t> lines;
  std::vector<PRPoint> out;
  const auto r = rows(text, "confidence,recall,precision", lines);
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.push_back({parse_double(r[i][1], lines[i]), parse_double(r[i][2], lines[i]), parse_double(r[i][0], lines[i])});
  }
  return out;
}

std::vector<SweepPoint> parse_sweep_csv(std::string_view text) {
  std::vector<std::size_t> lines;
  std::vector<SweepPoint> out;
  const auto r = rows(text, "tau,ap", lines);
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.push_back({parse_double(r[i][0], lines[i]), parse_double(r[i][1], lines[i])});
  }
  return out;
}

Eigen::MatrixXi parse_confusion_csv(std::string_view text) {
  std::vector<std::size_t> lines;
  const auto r = rows(text, "gt_count,pred_count,images", lines);
  struct Cell {
    int g, p, n;
  };
  std::vector<Cell> cells;
  int rows_n = 0;
  int cols_n = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double g = parse_double(r[i][0], lines[i]);
    const double p = parse_double(r[i][1], lines[i]);
    const double n = parse_double(r[i][2], lines[i]);
    if (g < 0 || p < 0 || n < 0 || g != static_cast<int>(g) || p != static_cast<int>(p) || n != static_cast<int>(n) ||
        g > 10000 || p > 10000) {
      throw ValidationError("confusion cells must be small non-negative integers", lines[i]);
    }
    cells.push_back({static_cast<int>(g), static_cast<int>(p), static_cast<int>(n)});
    rows_n = std::max(rows_n, cells.back().g + 1);
    cols_n = std::max(cols_n, cells.back().p + 1);
  }
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(rows_n, cols_n);
  for (const auto& c : cells) m(c.g, c.p) += c.n;
  return m;
}

std::string svg_pr_curve(std::span<const PRPoint> points, std::string_view title) {
  std::string s = open_svg(title) + unit_axes("recall", "precision");
  if (!points.empty()) {
    std::vector<PRPoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.recall < b.recall; });
    // Step from the origin: each point holds its precision back to the previous recall.
    std::string d = "M" + fmt(px(0)) + " " + fmt(py(sorted.front().precision));
    double prev_r = 0.0;
    for (const auto& p : sorted) {
      d += " L" + fmt(px(prev_r)) + " " + fmt(py(p.precision)) + " L" + fmt(px(p.recall)) + " " + fmt(py(p.precision));
      prev_r = p.recall;
    }
    s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
    for (const auto& p : sorted) {
      s += "<circle cx=\"" + fmt(px(p.recall)) + "\" cy=\"" + fmt(py(p.precision)) +
           "\" r=\"2\" fill=\"#1f77b4\"><title>conf " + format_number(p.confidence) + "</title></circle>\n";
    }
  }
  return s + "</svg>\n";
}

std::string svg_sweep(std::span<const SweepPoint> profile, std::string_view title) {
  std::string s = open_svg(title) + unit_axes("confidence threshold", "AP");
  if (!profile.empty()) {
    std::string d;
    for (const auto& p : profile) d += (d.empty() ? "M" : " L") + fmt(px(p.tau)) + " " + fmt(py(p.ap));
    s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    // Smallest threshold among the maxima, as the sweep reports it.
    const SweepPoint* best = &profile.front();
    for (const auto& p : profile) {
      if (p.ap > best->ap + 1e-12 || (std::abs(p.ap - best->ap) <= 1e-12 && p.tau < best->tau)) best = &p;
    }
    s += "<line x1=\"" + fmt(px(best->tau)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(best->tau)) + "\" y2=\"" +
         fmt(py(1)) + "\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
    s += "<text x=\"" + fmt(px(best->tau) + 4) + "\" y=\"" + fmt(kTop + 12) + "\">tau " + format_number(best->tau) +
         ", AP " + fmt(best->ap) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string svg_confusion(const Eigen::MatrixXi& cells, std::string_view title) {
  std::string s = open_svg(title);
  const auto rows_n = std::max<Eigen::Index>(cells.rows(), 1);
  const auto cols_n = std::max<Eigen::Index>(cells.cols(), 1);
  const double cw = kWidth / static_cast<double>(cols_n);
  const double ch = kHeight / static_cast<double>(rows_n);
  const int peak = cells.size() ? std::max(cells.maxCoeff(), 1) : 1;
  for (Eigen::Index g = 0; g < cells.rows(); ++g) {
    for (Eigen::Index p = 0; p < cells.cols(); ++p) {
      const int n = cells(g, p);
      // Log scale so the dominant (0, 0) cell does not wash out the rest.
      const double t = n ? std::log1p(n) / std::log1p(peak) : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 - 200.0 * t));
      const double x = kLeft + static_cast<double>(p) * cw;
      const double y = kTop + static_cast<double>(g) * ch;
      s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(cw) + "\" height=\"" + fmt(ch) +
           "\" fill=\"rgb(" + std::to_string(shade) + "," + std::to_string(shade) + ",255)\" stroke=\"white\"/>\n";
      s += "<text x=\"" + fmt(x + cw / 2) + "\" y=\"" + fmt(y + ch / 2 + 4) + "\" text-anchor=\"middle\">" +
           std::to_string(n) + "</text>\n";
    }
  }
  s += "<g text-anchor=\"middle\">\n";
  for (Eigen::Index p = 0; p < cells.cols(); ++p) {
    s += "<text x=\"" + fmt(kLeft + (static_cast<double>(p) + 0.5) * cw) + "\" y=\"" + fmt(kTop + kHeight + 15) +
         "\">" + std::to_string(p) + "</text>\n";
  }
  for (Eigen::Index g = 0; g < cells.rows(); ++g) {
    s += "<text x=\"" + fmt(kLeft - 12) + "\" y=\"" + fmt(kTop + (static_cast<double>(g) + 0.5) * ch + 4) + "\">" +
         std::to_string(g) + "</text>\n";
  }
  s += "<text x=\"" + fmt(kLeft + kWidth / 2) + "\" y=\"" + fmt(kTop + kHeight + 32) + "\">detected per image</text>\n";
  s += "<text transform=\"translate(16 " + fmt(kTop + kHeight / 2) + ") rotate(-90)\">labeled per image</text>\n";
  return s + "</g>\n</svg>\n";
}

std::vector<std::string> render_report(const std::string& in_dir, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  auto present = [&](const char* name) { return fs::exists(fs::path(in_dir) / name); };
  auto load = [&](const char* name) { return read_file(join_path(in_dir, name)); };
  if (present("pr_curve.csv")) {
    const auto pts = parse_pr_csv(load("pr_curve.csv"));
    write_file(join_path(out_dir, "pr_curve.svg"), svg_pr_curve(pts));
    written.push_back("pr_curve.svg");
  }
  if (present("sweep.csv")) {
    const auto prof = parse_sweep_csv(load("sweep.csv"));
    write_file(join_path(out_dir, "sweep.svg"), svg_sweep(prof));
    written.push_back("sweep.svg");
  }
  if (present("confusion.csv")) {
    write_file(join_path(out_dir, "confusion.svg"), svg_confusion(parse_confusion_csv(load("confusion.csv"))));
    written.push_back("confusion.svg");
  }
  if (written.empty()) {
    throw InvalidInput("no pr_curve.csv, sweep.csv or confusion.csv in '" + in_dir + "'");
  }
  return written;
}

}  // namespace wildcensus
