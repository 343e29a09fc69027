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

/// \file census.hpp
/// Verified detections to a population estimate: reconcile the two reviews
/// of each image, georeference the agreed boxes, merge repeat sightings of
/// one animal, and scale the count by the surveyed area.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildcensus/datastore.hpp"
#include "wildcensus/review_service.hpp"
#include "wildcensus/survey_planner.hpp"

namespace wildcensus {

/// Census-eligible images lacking two reviews and an adjudication.
class IncompleteReview : public InvalidInput {
 public:
  explicit IncompleteReview(std::vector<std::string> image_ids);
  const std::vector<std::string>& image_ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

enum class SightingSource { human, model_assisted };
std::string_view to_string(SightingSource s);

struct ConfirmedSighting {
  std::string sighting_id;  ///< "<image_id>#<k>", unique
  std::string image_id;
  std::optional<Point2> ground_point;  ///< ENU meters about the plan origin
  double timestamp = 0.0;
  std::int64_t transect_id = 0;
  AnimalClass cls = AnimalClass::deer;
  BBox bbox;  ///< mean of the supporting boxes
  std::vector<std::string> supporting_observers;
  SightingSource source = SightingSource::human;
  bool adjudicated = false;
};

/// A box only one observer asserted.
struct ConflictBox {
  std::string observer_id;
  AnimalClass cls = AnimalClass::deer;
  BBox bbox;
};

struct ImageConflict {
  std::string image_id;
  std::vector<ConflictBox> boxes;
};

struct Reconciliation {
  std::vector<ConfirmedSighting> sightings;
  std::vector<ImageConflict> conflicts;  ///< excluded pending adjudication
};

/// Per census-eligible image: an adjudication is authoritative; otherwise
/// the asserted boxes of the two reviews are paired one-to-one (same class,
/// IoU >= threshold) and each pair becomes a sighting supported by both
/// observers. Unpaired boxes go to the conflict list.
Reconciliation reconcile(const std::vector<ImageReview>& reviews, const Manifest& manifest,
                         const CameraRegistry& cameras, const Geodetic& origin,
                         double iou_threshold = 0.10);

struct UniqueIndividual {
  int individual_id = 0;
  std::vector<std::string> members;  ///< sighting ids, sorted
  Point2 representative = Point2::Zero();  ///< centroid of member ground points
};

/// Single-linkage clusters: two sightings link when their ground points are
/// at most `radius_m` apart and their timestamps at most `window_s` apart.
/// The result is a partition of the input and does not depend on its order.
std::vector<UniqueIndividual> dedup(const std::vector<ConfirmedSighting>& sightings, double radius_m = 20.0,
                                    double window_s = 3.0 * 3600.0);

struct CensusEstimate {
  std::size_t unique_count = 0;
  double surveyed_area_m2 = 0.0;
  double density_per_km2 = 0.0;  ///< unique_count / surveyed area
  double study_area_m2 = 0.0;
  double abundance = 0.0;        ///< density * study area
  double coverage = 0.0;         ///< surveyed / study area
};

CensusEstimate estimate(std::size_t unique_count, double surveyed_area_m2, double study_area_m2);
CensusEstimate estimate(std::size_t unique_count, const SurveyPlan& plan);

struct CensusOptions {
  double dedup_radius_m = 20.0;
  double time_window_s = 3.0 * 3600.0;
  double iou_threshold = 0.10;
  AnimalClass census_class = AnimalClass::deer;
};

struct CensusResult {
  Reconciliation reconciliation;
  std::vector<ConfirmedSighting> counted;  ///< census-class sightings
  std::vector<UniqueIndividual> individuals;
  CensusEstimate estimate;
};

CensusResult run_census(const std::vector<ImageReview>& reviews, const Manifest& manifest,
                        const CameraRegistry& cameras, const SurveyPlan& plan, const CensusOptions& options = {});

/// census.json ("wildcensus-census/1").
nlohmann::ordered_json census_json(const CensusResult& result, const CensusOptions& options,
                                   const nlohmann::ordered_json& config = nlohmann::ordered_json::object());
/// conflicts.jsonl: one line per image with unresolved boxes.
std::string conflicts_jsonl(const Reconciliation& reconciliation);

}  // namespace wildcensus
