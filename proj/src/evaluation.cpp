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

#include "wildcensus/evaluation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "wildcensus/error.hpp"
#include "wildcensus/io.hpp"
#include "wildcensus/parallel.hpp"

namespace wildcensus {

namespace {

constexpr double kTieTolerance = 1e-12;

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  if (!(a.w > 0.0 && a.h > 0.0 && b.w > 0.0 && b.h > 0.0)) {
    throw InvalidInput("iou: boxes must have positive width and height");
  }
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

std::size_t MatchResult::tp() const {
  return static_cast<std::size_t>(
      std::count_if(detections.begin(), detections.end(), [](const auto& d) { return d.true_positive; }));
}

std::size_t MatchResult::fp() const { return detections.size() - tp(); }

std::size_t MatchResult::fn() const {
  return static_cast<std::size_t>(
      std::count_if(label_match.begin(), label_match.end(), [](const auto& m) { return !m; }));
}

MatchResult match(std::span<const Detection> detections, std::span<const GroundTruthLabel> labels,
                  double iou_threshold, double confidence_threshold) {
  check_unit(iou_threshold, "iou threshold");
  check_unit(confidence_threshold, "confidence threshold");

  MatchResult out;
  out.iou_threshold = iou_threshold;
  out.confidence_threshold = confidence_threshold;
  if (!detections.empty()) out.image_id = detections.front().image_id;
  else if (!labels.empty()) out.image_id = labels.front().image_id;
  for (const auto& d : detections) {
    if (d.image_id != out.image_id) throw InvalidInput("match: records span images '" + out.image_id + "' and '" + d.image_id + "'");
  }
  for (const auto& l : labels) {
    if (l.image_id != out.image_id) throw InvalidInput("match: records span images '" + out.image_id + "' and '" + l.image_id + "'");
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].confidence >= confidence_threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = detections[a];
    const auto& db = detections[b];
    if (da.confidence != db.confidence) return da.confidence > db.confidence;
    if (da.bbox.x != db.bbox.x) return da.bbox.x < db.bbox.x;
    return da.bbox.y < db.bbox.y;
  });

  out.label_match.assign(labels.size(), std::nullopt);
  out.label_classes.reserve(labels.size());
  for (const auto& l : labels) out.label_classes.push_back(l.cls);

  out.detections.reserve(order.size());
  for (std::size_t di : order) {
    const Detection& d = detections[di];
    DetectionVerdict v{di, d.cls, d.confidence, false, std::nullopt};
    double best = -1.0;
    for (std::size_t li = 0; li < labels.size(); ++li) {
      if (out.label_match[li] || labels[li].cls != d.cls) continue;
      const double o = iou(d.bbox, labels[li].bbox);
      if (o >= iou_threshold && o > best) {
        best = o;
        v.label = li;
      }
    }
    if (v.label) {
      v.true_positive = true;
      out.label_match[*v.label] = di;
    }
    out.detections.push_back(v);
  }
  return out;
}

std::vector<PRPoint> pr_curve(std::span<const MatchResult> results, AnimalClass cls) {
  std::size_t positives = 0;
  std::vector<std::pair<double, bool>> verdicts;
  for (const auto& r : results) {
    positives += static_cast<std::size_t>(std::count(r.label_classes.begin(), r.label_classes.end(), cls));
    for (const auto& d : r.detections) {
      if (d.cls == cls) verdicts.emplace_back(d.confidence, d.true_positive);
    }
  }
  if (positives == 0) {
    throw InvalidInput("pr_curve: no ground-truth labels of class '" + std::string(to_string(cls)) + "'");
  }
  std::sort(verdicts.begin(), verdicts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<PRPoint> points;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    tp += verdicts[i].second;
    ++seen;
    if (i + 1 == verdicts.size() || verdicts[i + 1].first != verdicts[i].first) {
      points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                        static_cast<double>(tp) / static_cast<double>(seen), verdicts[i].first});
    }
  }
  return points;
}

double average_precision(std::span<const PRPoint> points) {
  if (points.empty()) throw InvalidInput("average_precision: empty PR curve");
  std::vector<PRPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.recall < b.recall; });
  std::vector<double> envelope(sorted.size());
  double run = 0.0;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    run = std::max(run, sorted[i].precision);
    envelope[i] = run;
  }
  // One term per run of equal envelope: the recall steps inside a run
  // telescope, so a flat curve of precision 1 up to recall 1 gives exactly 1.
  double ap = 0.0;
  double start = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && envelope[i + 1] == envelope[i]) continue;
    ap += (sorted[i].recall - start) * envelope[i];
    start = sorted[i].recall;
  }
  return ap;
}

std::vector<double> default_sweep_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(i * 0.005);
  return grid;
}

ImageSet group_by_image(const std::vector<std::string>& image_ids, const std::vector<Detection>& detections,
                        const std::vector<GroundTruthLabel>& labels) {
  ImageSet set;
  set.image_ids = image_ids;
  set.detections.resize(image_ids.size());
  set.labels.resize(image_ids.size());
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(image_ids.size());
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    if (!index.emplace(image_ids[i], i).second) throw ValidationError("duplicate image id '" + image_ids[i] + "'");
  }
  for (const auto& d : detections) {
    const auto it = index.find(d.image_id);
    if (it == index.end()) throw ValidationError("detection references unknown image '" + d.image_id + "'");
    set.detections[it->second].push_back(d);
  }
  for (const auto& l : labels) {
    const auto it = index.find(l.image_id);
    if (it == index.end()) throw ValidationError("label references unknown image '" + l.image_id + "'");
    set.labels[it->second].push_back(l);
  }
  return set;
}

ImageSet group_by_image(const std::vector<Detection>& detections, const std::vector<GroundTruthLabel>& labels) {
  std::set<std::string> ids;
  for (const auto& d : detections) ids.insert(d.image_id);
  for (const auto& l : labels) ids.insert(l.image_id);
  return group_by_image(std::vector<std::string>(ids.begin(), ids.end()), detections, labels);
}

std::vector<MatchResult> match_all(const ImageSet& images, double iou_threshold, double confidence_threshold,
                                   unsigned threads) {
  check_unit(iou_threshold, "iou threshold");
  check_unit(confidence_threshold, "confidence threshold");
  std::vector<MatchResult> out(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    out[i] = match(images.detections[i], images.labels[i], iou_threshold, confidence_threshold);
    out[i].image_id = images.image_ids[i];
  });
  return out;
}

namespace {

std::size_t label_count(std::span<const MatchResult> results, AnimalClass cls) {
  std::size_t n = 0;
  for (const auto& r : results) {
    n += static_cast<std::size_t>(std::count(r.label_classes.begin(), r.label_classes.end(), cls));
  }
  return n;
}

/// Points of `curve` at or above `tau`; curves are in descending confidence.
std::span<const PRPoint> prefix_at(std::span<const PRPoint> curve, double tau) {
  std::size_t k = 0;
  while (k < curve.size() && curve[k].confidence >= tau) ++k;
  return curve.first(k);
}

double prefix_ap(std::span<const PRPoint> curve, double tau) {
  const auto prefix = prefix_at(curve, tau);
  return prefix.empty() ? 0.0 : average_precision(prefix);
}

SweepResult sweep_from_results(std::span<const MatchResult> results, const std::vector<double>& grid,
                               const std::vector<AnimalClass>& classes) {
  if (grid.empty()) throw InvalidInput("sweep: empty threshold grid");
  for (double t : grid) check_unit(t, "sweep threshold");
  std::vector<std::vector<PRPoint>> curves;
  for (AnimalClass c : classes) {
    if (label_count(results, c) > 0) curves.push_back(pr_curve(results, c));
  }
  if (curves.empty()) throw InvalidInput("sweep: no ground-truth labels for the evaluated classes");

  SweepResult out;
  bool first = true;
  for (double tau : grid) {
    double sum = 0.0;
    for (const auto& c : curves) sum += prefix_ap(c, tau);
    const double ap = sum / static_cast<double>(curves.size());
    out.profile.push_back({tau, ap});
    const bool better = ap > out.optimal_ap + kTieTolerance;
    const bool tie_lower = std::abs(ap - out.optimal_ap) <= kTieTolerance && tau < out.optimal_confidence;
    if (first || better || tie_lower) {
      out.optimal_ap = ap;
      out.optimal_confidence = tau;
      first = false;
    }
  }
  return out;
}

}  // namespace

SweepResult sweep_confidence(const ImageSet& images, double iou_threshold, const std::vector<double>& grid,
                             const std::vector<AnimalClass>& classes, unsigned threads) {
  const auto results = match_all(images, iou_threshold, 0.0, threads);
  return sweep_from_results(results, grid, classes);
}

CountConfusion count_confusion(const ImageSet& images, double tau, AnimalClass cls) {
  check_unit(tau, "confidence threshold");
  std::vector<std::pair<int, int>> counts;
  counts.reserve(images.size());
  int max_g = 0;
  int max_p = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    int g = 0;
    int p = 0;
    for (const auto& l : images.labels[i]) g += l.cls == cls;
    for (const auto& d : images.detections[i]) p += d.cls == cls && d.confidence >= tau;
    counts.emplace_back(g, p);
    max_g = std::max(max_g, g);
    max_p = std::max(max_p, p);
  }
  CountConfusion out;
  out.cls = cls;
  out.tau = tau;
  out.cells = Eigen::MatrixXi::Zero(max_g + 1, max_p + 1);
  for (const auto& [g, p] : counts) ++out.cells(g, p);
  return out;
}

EvalReport evaluate(const ImageSet& images, const EvalOptions& options) {
  const auto results = match_all(images, options.iou_threshold, 0.0, options.threads);

  EvalReport report;
  report.images = images.size();
  report.iou_threshold = options.iou_threshold;
  report.sweep = sweep_from_results(results, options.grid, options.classes);
  report.confidence_threshold = options.confidence_threshold.value_or(report.sweep.optimal_confidence);
  check_unit(report.confidence_threshold, "confidence threshold");
  const double tau = report.confidence_threshold;

  std::set<AnimalClass> present(options.classes.begin(), options.classes.end());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& l : images.labels[i]) present.insert(l.cls);
    for (const auto& d : images.detections[i]) present.insert(d.cls);
  }

  double map_sum = 0.0;
  std::size_t map_n = 0;
  for (AnimalClass c : present) {
    ClassReport cr;
    cr.cls = c;
    cr.labels = label_count(results, c);
    for (const auto& r : results) {
      for (const auto& d : r.detections) {
        if (d.cls != c || d.confidence < tau) continue;
        ++cr.detections;
        cr.tp += d.true_positive;
      }
    }
    cr.fp = cr.detections - cr.tp;
    cr.fn = cr.labels - cr.tp;
    if (cr.labels > 0) {
      cr.pr = pr_curve(results, c);
      cr.ap = prefix_ap(cr.pr, tau);
      if (std::find(options.classes.begin(), options.classes.end(), c) != options.classes.end()) {
        map_sum += cr.ap;
        ++map_n;
      }
    }
    report.per_class.push_back(std::move(cr));
  }
  report.map = map_n ? map_sum / static_cast<double>(map_n) : 0.0;
  report.confusion = count_confusion(images, tau, options.census_class);
  return report;
}

std::string pr_curve_csv(std::span<const PRPoint> points) {
  std::string out = "confidence,recall,precision\n";
  for (const auto& p : points) {
    out += format_number(p.confidence) + "," + format_number(p.recall) + "," + format_number(p.precision) + "\n";
  }
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = "tau,ap\n";
  for (const auto& p : sweep.profile) out += format_number(p.tau) + "," + format_number(p.ap) + "\n";
  return out;
}

std::string confusion_csv(const CountConfusion& confusion) {
  // Every cell, row-major, zeros included.
  std::string out = "gt_count,pred_count,images\n";
  for (Eigen::Index g = 0; g < confusion.cells.rows(); ++g) {
    for (Eigen::Index p = 0; p < confusion.cells.cols(); ++p) {
      out += std::to_string(g) + "," + std::to_string(p) + "," + std::to_string(confusion.cells(g, p)) + "\n";
    }
  }
  return out;
}

nlohmann::ordered_json report_json(const EvalReport& report, const nlohmann::ordered_json& config) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["schema"] = "wildcensus-report/1";
  doc["config"] = config;
  doc["images"] = report.images;
  doc["iou_threshold"] = report.iou_threshold;
  doc["confidence_threshold"] = report.confidence_threshold;
  doc["map"] = report.map;
  doc["sweep"] = {{"optimal_confidence", report.sweep.optimal_confidence}, {"optimal_ap", report.sweep.optimal_ap}};
  json classes = json::array();
  for (const auto& c : report.per_class) {
    json j;
    j["class"] = std::string(to_string(c.cls));
    j["labels"] = c.labels;
    j["detections"] = c.detections;
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    j["precision"] = c.detections ? json(static_cast<double>(c.tp) / static_cast<double>(c.detections)) : json(nullptr);
    j["recall"] = c.labels ? json(static_cast<double>(c.tp) / static_cast<double>(c.labels)) : json(nullptr);
    j["ap"] = c.labels ? json(c.ap) : json(nullptr);
    classes.push_back(std::move(j));
  }
  doc["per_class"] = std::move(classes);
  json rows = json::array();
  for (Eigen::Index g = 0; g < report.confusion.cells.rows(); ++g) {
    json row = json::array();
    for (Eigen::Index p = 0; p < report.confusion.cells.cols(); ++p) row.push_back(report.confusion.cells(g, p));
    rows.push_back(std::move(row));
  }
  doc["confusion"] = {{"class", std::string(to_string(report.confusion.cls))},
                      {"tau", report.confusion.tau},
                      {"cells", std::move(rows)}};
  return doc;
}

void write_eval_outputs(const std::string& dir, const EvalReport& report, const nlohmann::ordered_json& config) {
  const ClassReport* census = nullptr;
  for (const auto& c : report.per_class) {
    if (c.cls == report.confusion.cls) census = &c;
  }
  write_file(join_path(dir, "pr_curve.csv"), pr_curve_csv(census ? std::span<const PRPoint>(census->pr)
                                                                 : std::span<const PRPoint>()));
  write_file(join_path(dir, "sweep.csv"), sweep_csv(report.sweep));
  write_file(join_path(dir, "confusion.csv"), confusion_csv(report.confusion));
  write_json_file(join_path(dir, "report.json"), report_json(report, config));
}

}  // namespace wildcensus
