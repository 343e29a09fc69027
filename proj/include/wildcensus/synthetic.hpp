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

/// \file synthetic.hpp
/// Seeded synthetic surveys with known ground truth: a planned flight over a
/// rectangular area, frames every photo interval, animals planted on census
/// transects, a detector with controlled hit and false-alarm behavior, and
/// simulated observers driving a review service.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wildcensus/datastore.hpp"
#include "wildcensus/review_service.hpp"
#include "wildcensus/survey_planner.hpp"

namespace wildcensus {

struct DetectorProfile {
  double tp_rate = 1.0;        ///< chance each visible animal is detected
  double fp_per_image = 0.02;  ///< Poisson mean of spurious deer boxes
  std::pair<double, double> tp_confidence{0.6, 1.0};
  std::pair<double, double> fp_confidence{0.01, 0.3};
  double box_jitter_px = 4.0;
};

struct ObserverProfile {
  std::vector<std::string> ids = {"obs-a", "obs-b", "obs-c"};
  double miss_rate = 0.0;        ///< per animal per review
  double false_box_rate = 0.0;   ///< per review
  double box_jitter_px = 3.0;
  double review_s = 20.0;
  double candidate_tau = 0.26;
  bool adjudicate = true;        ///< an expert resolves conflicts from the truth
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  Geodetic origin{-34.0, -58.9};
  double area_ew_m = 6000.0;
  double area_ns_m = 6000.0;
  GridSpec grid;
  double coverage = 0.10;
  double min_transect_m = 760.0;
  double max_route_length_m = 10000.0;
  std::string camera_id = "phantom4pro";
  double altitude_m = 45.0;
  double speed_mps = 6.5;
  double photo_interval_s = 5.0;
  double start_utc = 1565000000.0;
  int deer = 25;
  int cows = 0;
  double min_spacing_m = 50.0;
  std::pair<double, double> animal_size_m{1.2, 2.0};
  double pose_jitter_m = 1.0;
  double dedup_radius_m = 20.0;
  DetectorProfile detector;
  ObserverProfile observers;

  /// Ground-point error bound for one sighting: pose jitter, clipping of a
  /// box at the frame edge and observer box jitter.
  double localization_bound_m() const;
};

/// Throws InvalidInput for out-of-range values, including spacing that does
/// not separate distinct animals from duplicate sightings at the dedup radius.
void validate(const ScenarioSpec& spec);

ScenarioSpec scenario_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const ScenarioSpec& spec);

struct PlantedAnimal {
  int animal_id = 0;
  AnimalClass cls = AnimalClass::deer;
  Point2 ground = Point2::Zero();
  int transect_id = 0;
  std::vector<std::string> image_ids;  ///< frames that contain it
};

struct SyntheticSurvey {
  ScenarioSpec spec;
  SurveyPlan plan;
  std::vector<ImageRecord> records;
  std::vector<GroundTruthLabel> labels;
  std::vector<Detection> detections;
  std::vector<VerificationEvent> events;
  std::vector<ImageReview> reviews;
  std::vector<PlantedAnimal> animals;

  std::size_t planted(AnimalClass cls) const;
};

/// Deterministic in `spec`. Throws InvalidInput when the animals cannot be
/// placed at the requested spacing.
SyntheticSurvey generate(const ScenarioSpec& spec, const CameraRegistry& cameras = default_cameras());

/// scenario.json, plan.json, manifest.jsonl, labels.jsonl, detections.jsonl,
/// review/events.jsonl and truth.json under `dir`.
void write_survey(const std::string& dir, const SyntheticSurvey& survey,
                  const nlohmann::ordered_json& config = nlohmann::ordered_json::object());

nlohmann::ordered_json truth_json(const SyntheticSurvey& survey);

}  // namespace wildcensus
