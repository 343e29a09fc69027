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

/// \file evaluation.hpp
/// Box-level detection metrics.
///
/// Matching is greedy: detections at or above the confidence threshold are
/// visited in descending confidence (ties: ascending box x, then y, then
/// input order) and each takes the unmatched same-class label of highest
/// IoU, provided that IoU reaches the threshold. Because the visiting order
/// does not depend on the threshold, the matches of the detections above any
/// cutoff equal those of a run filtered at that cutoff; the PR curve and the
/// confidence sweep rely on this.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "wildcensus/datastore.hpp"

namespace wildcensus {

/// Intersection over union. Throws InvalidInput for non-positive sizes.
double iou(const BBox& a, const BBox& b);

struct DetectionVerdict {
  std::size_t detection = 0;  ///< index into the matched span
  AnimalClass cls = AnimalClass::deer;
  double confidence = 0.0;
  bool true_positive = false;
  std::optional<std::size_t> label;  ///< matched label index
};

struct MatchResult {
  std::string image_id;
  double iou_threshold = 0.10;
  double confidence_threshold = 0.0;
  /// Detections at or above the confidence threshold, in visiting order.
  std::vector<DetectionVerdict> detections;
  /// Per label: index of the detection that matched it.
  std::vector<std::optional<std::size_t>> label_match;
  std::vector<AnimalClass> label_classes;

  std::size_t tp() const;
  std::size_t fp() const;
  std::size_t fn() const;
};

/// All records must share one image_id (an empty input is fine).
MatchResult match(std::span<const Detection> detections, std::span<const GroundTruthLabel> labels,
                  double iou_threshold = 0.10, double confidence_threshold = 0.0);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double confidence = 0.0;  ///< cutoff that produced the point
};

/// One point per distinct detection confidence (descending), with the
/// cumulative TP/FP of all detections at or above it. Throws InvalidInput
/// when the results contain no label of `cls`.
std::vector<PRPoint> pr_curve(std::span<const MatchResult> results, AnimalClass cls = AnimalClass::deer);

/// All-points interpolated AP: integral over recall of the precision
/// envelope max{p_j : r_j >= r}. Throws InvalidInput on an empty curve.
double average_precision(std::span<const PRPoint> points);

/// Every 0.005 from 0 to 1.
std::vector<double> default_sweep_grid();

struct SweepPoint {
  double tau = 0.0;
  double ap = 0.0;  ///< mean over evaluated classes
};

struct SweepResult {
  std::vector<SweepPoint> profile;
  double optimal_confidence = 0.0;
  double optimal_ap = 0.0;
};

/// Per-image detections and labels, grouped for evaluation.
struct ImageSet {
  std::vector<std::string> image_ids;
  std::vector<std::vector<Detection>> detections;
  std::vector<std::vector<GroundTruthLabel>> labels;

  std::size_t size() const { return image_ids.size(); }
};

/// Groups records by image in `image_ids` order. Records for images outside
/// the list throw ValidationError.
ImageSet group_by_image(const std::vector<std::string>& image_ids,
                        const std::vector<Detection>& detections,
                        const std::vector<GroundTruthLabel>& labels);

/// Same, taking the image list from the records themselves (sorted ids).
ImageSet group_by_image(const std::vector<Detection>& detections,
                        const std::vector<GroundTruthLabel>& labels);

/// Matches every image; `threads` > 1 spreads images over workers. The
/// output order follows the image set regardless of scheduling.
std::vector<MatchResult> match_all(const ImageSet& images, double iou_threshold,
                                   double confidence_threshold, unsigned threads = 1);

/// Mean AP over `classes` that have at least one label, for each grid
/// threshold; the optimum is the highest AP, ties to the smallest tau.
SweepResult sweep_confidence(const ImageSet& images, double iou_threshold,
                             const std::vector<double>& grid,
                             const std::vector<AnimalClass>& classes = {AnimalClass::deer},
                             unsigned threads = 1);

/// cells(g, p) = number of images with g labels and p detections (at or
/// above `tau`) of `cls`.
struct CountConfusion {
  AnimalClass cls = AnimalClass::deer;
  double tau = 0.0;
  Eigen::MatrixXi cells;

  int total() const { return cells.sum(); }
};

CountConfusion count_confusion(const ImageSet& images, double tau, AnimalClass cls = AnimalClass::deer);

struct ClassReport {
  AnimalClass cls = AnimalClass::deer;
  std::size_t labels = 0;
  std::size_t detections = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<PRPoint> pr;  ///< full curve, every confidence
  double ap = 0.0;          ///< AP of the curve points at or above the threshold
};

struct EvalOptions {
  double iou_threshold = 0.10;
  /// Threshold for AP, counts and the confusion matrix; unset means the
  /// sweep optimum.
  std::optional<double> confidence_threshold;
  std::vector<double> grid = default_sweep_grid();
  std::vector<AnimalClass> classes = {AnimalClass::deer};
  AnimalClass census_class = AnimalClass::deer;
  unsigned threads = 1;
};

struct EvalReport {
  double iou_threshold = 0.10;
  double confidence_threshold = 0.0;
  SweepResult sweep;
  std::vector<ClassReport> per_class;  ///< every class with labels or detections
  double map = 0.0;                    ///< mean AP over EvalOptions::classes with labels
  CountConfusion confusion;
  std::size_t images = 0;
};

EvalReport evaluate(const ImageSet& images, const EvalOptions& options = {});

std::string pr_curve_csv(std::span<const PRPoint> points);
std::string sweep_csv(const SweepResult& sweep);
std::string confusion_csv(const CountConfusion& confusion);
nlohmann::ordered_json report_json(const EvalReport& report,
                                   const nlohmann::ordered_json& config = nlohmann::ordered_json::object());

/// Writes pr_curve.csv, sweep.csv, confusion.csv and report.json.
void write_eval_outputs(const std::string& dir, const EvalReport& report,
                        const nlohmann::ordered_json& config);

}  // namespace wildcensus
