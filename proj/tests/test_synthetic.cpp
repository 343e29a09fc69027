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

#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "wildcensus/census.hpp"
#include "wildcensus/evaluation.hpp"
#include "wildcensus/io.hpp"
#include "wildcensus/synthetic.hpp"

using namespace wildcensus;
namespace fs = std::filesystem;

namespace {

ScenarioSpec small(int deer, std::uint64_t seed = 3) {
  ScenarioSpec s;
  s.seed = seed;
  s.deer = deer;
  return s;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wildcensus_synth_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("scenario json round trip and validation") {
  ScenarioSpec s = small(7);
  s.cows = 2;
  s.observers.miss_rate = 0.1;
  const auto back = scenario_from_json(nlohmann::json::parse(to_json(s).dump()));
  CHECK(to_json(back) == to_json(s));

  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"deer": 3, "wolves": 1})")), InvalidInput);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"detector": {"tp": 1}})")), InvalidInput);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"deer": "many"})")), InvalidInput);
  // Spacing must separate distinct animals beyond the dedup radius.
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"min_spacing_m": 15})")), InvalidInput);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"dedup_radius_m": 2})")), InvalidInput);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"observers": {"ids": ["a"]}})")), InvalidInput);
}

TEST_CASE("infeasible spacing is refused") {
  ScenarioSpec s = small(5000);
  CHECK_THROWS_AS(generate(s), InvalidInput);
  s = small(3);
  s.min_spacing_m = 2000.0;
  s.dedup_radius_m = 20.0;
  CHECK_THROWS_AS(generate(s), InvalidInput);
}

TEST_CASE("generation is seed-deterministic") {
  const auto a = generate(small(25));
  const auto b = generate(small(25));
  CHECK(manifest_to_jsonl(a.records) == manifest_to_jsonl(b.records));
  CHECK(labels_to_jsonl(a.labels) == labels_to_jsonl(b.labels));
  CHECK(detections_to_jsonl(a.detections) == detections_to_jsonl(b.detections));
  CHECK(event_log_to_jsonl(a.events) == event_log_to_jsonl(b.events));
  CHECK(truth_json(a) == truth_json(b));
  const auto c = generate(small(25, 4));
  CHECK(labels_to_jsonl(a.labels) != labels_to_jsonl(c.labels));
}

TEST_CASE("planted animals respect the placement rules") {
  auto spec = small(60);
  spec.cows = 10;
  const auto s = generate(spec);
  REQUIRE(s.animals.size() == 70);
  CHECK(s.planted(AnimalClass::deer) == 60);
  CHECK(s.planted(AnimalClass::cow) == 10);
  std::map<std::string, const ImageRecord*> rec;
  for (const auto& r : s.records) rec[r.image_id] = &r;
  std::size_t duplicated = 0;
  for (std::size_t i = 0; i < s.animals.size(); ++i) {
    const auto& a = s.animals[i];
    REQUIRE_FALSE(a.image_ids.empty());
    duplicated += a.image_ids.size() > 1;
    for (const auto& id : a.image_ids) {
      CHECK(rec.at(id)->transect_id == a.transect_id);
      CHECK(rec.at(id)->census_eligible);
    }
    for (std::size_t j = i + 1; j < s.animals.size(); ++j) {
      CHECK((a.ground - s.animals[j].ground).norm() >= spec.min_spacing_m);
    }
  }
  // Forward overlap puts a good share of animals in two frames.
  CHECK(duplicated > 5);
  std::size_t label_count = 0;
  for (const auto& a : s.animals) label_count += a.image_ids.size();
  CHECK(s.labels.size() == label_count);
}

TEST_CASE("written files pass datastore validation and replay") {
  const auto s = generate(small(25));
  const auto dir = scratch("files");
  write_survey(dir.string(), s, {{"subcommand", "synth"}});
  const auto cams = default_cameras();
  const auto manifest = load_manifest((dir / "manifest.jsonl").string());
  CHECK(manifest.size() == s.records.size());
  CHECK(load_labels((dir / "labels.jsonl").string(), manifest, cams).size() == s.labels.size());
  CHECK(load_detections((dir / "detections.jsonl").string(), manifest, cams).size() == s.detections.size());
  const auto plan = load_plan((dir / "plan.json").string());
  CHECK(plan.surveyed_area_m2() == s.plan.surveyed_area_m2());
  const auto log = load_event_log((dir / "review" / "events.jsonl").string());
  const auto replayed = ReviewService::replay(log);
  CHECK(replayed->census_reviews().size() == s.reviews.size());
  CHECK(read_json_file((dir / "truth.json").string())["deer"] == 25);
  fs::remove_all(dir);
}

TEST_CASE("census recovers the planted count") {
  for (int k : {0, 1, 25}) {
    CAPTURE(k);
    const auto s = generate(small(k, 10 + k));
    if (k == 0) CHECK(s.labels.empty());
    const Manifest manifest(s.records);
    const auto res = run_census(s.reviews, manifest, default_cameras(), s.plan);
    CHECK(res.reconciliation.conflicts.empty());
    CHECK(res.individuals.size() == static_cast<std::size_t>(k));
    CHECK(res.estimate.density_per_km2 == static_cast<double>(k) / (s.plan.surveyed_area_m2() / 1e6));

    // Each individual is one planted animal and lies within the radius.
    std::map<std::string, std::set<int>> animals_in;
    for (const auto& a : s.animals) {
      for (const auto& id : a.image_ids) animals_in[id].insert(a.animal_id);
    }
    std::map<std::string, const ConfirmedSighting*> by_id;
    for (const auto& c : res.counted) by_id[c.sighting_id] = &c;
    for (const auto& ind : res.individuals) {
      for (const auto& m : ind.members) {
        const auto* c = by_id.at(m);
        CHECK((*c->ground_point - ind.representative).norm() <= 20.0);
        CHECK(animals_in[c->image_id].size() == 1);
      }
    }
  }
}

TEST_CASE("observer errors are settled by adjudication") {
  auto spec = small(40, 21);
  spec.observers.miss_rate = 0.2;
  spec.observers.false_box_rate = 0.05;
  const auto s = generate(spec);
  std::size_t adjudicated = 0;
  for (const auto& r : s.reviews) {
    CHECK(r.reviews.size() == 2);
    CHECK(r.reviews[0].observer_id != r.reviews[1].observer_id);
    adjudicated += r.adjudication.has_value();
  }
  CHECK(adjudicated > 0);
  const Manifest manifest(s.records);
  const auto res = run_census(s.reviews, manifest, default_cameras(), s.plan);
  CHECK(res.reconciliation.conflicts.empty());
  // Agreeing misses can only lose animals; false boxes are always conflicts.
  CHECK(res.individuals.size() <= 40);
  CHECK(res.individuals.size() >= 30);
}

TEST_CASE("separated confidences give a clean sweep optimum") {
  auto spec = small(40, 5);
  spec.detector.fp_per_image = 0.3;
  const auto s = generate(spec);
  std::vector<std::string> ids;
  for (const auto& r : s.records) ids.push_back(r.image_id);
  const auto images = group_by_image(ids, s.detections, s.labels);
  const auto sweep = sweep_confidence(images, 0.10, default_sweep_grid());
  CHECK(sweep.optimal_ap == doctest::Approx(1.0).epsilon(1e-12));
  // Every threshold between the two confidence bands scores a perfect AP.
  // False alarms ranked after every hit do not lower AP, so lower
  // thresholds tie and the smallest one wins.
  std::size_t inside = 0;
  for (const auto& p : sweep.profile) {
    if (p.tau > spec.detector.fp_confidence.second && p.tau <= spec.detector.tp_confidence.first) {
      CHECK(p.ap == doctest::Approx(1.0).epsilon(1e-12));
      ++inside;
    }
  }
  CHECK(inside > 10);
  CHECK(sweep.optimal_confidence == sweep.profile.front().tau);
  // With the false alarms filtered, what remains is exactly the hits.
  const auto at = match_all(images, 0.10, spec.detector.tp_confidence.first);
  std::size_t fp = 0;
  for (const auto& m : at) fp += m.fp();
  CHECK(fp == 0);
}
