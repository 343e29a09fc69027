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
#include <set>

#include "support/reference_fixture.hpp"
#include "wildcensus/datastore.hpp"
#include "wildcensus/io.hpp"

using namespace wildcensus;
namespace fs = std::filesystem;

namespace {

const char* kTwoImages = R"({"schema":"wildcensus-manifest/1"}
{"image_id":"a","file":"a.jpg","transect_id":1,"lat":-34.0,"lon":-58.9,"alt_agl_m":45,"heading_deg":0,"timestamp_utc":100,"camera_id":"phantom4pro","census_eligible":true}
{"image_id":"b","file":"b.jpg","transect_id":1,"camera_id":"phantom4pro","census_eligible":false}
)";

std::string temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wildcensus_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("load_manifest") {
  const Manifest m = parse_manifest(kTwoImages);
  REQUIRE(m.size() == 2);
  CHECK(m.at("a").pose->alt_agl_m == 45.0);
  CHECK(!m.at("b").pose);
  CHECK(parse_manifest("").empty());
  CHECK(parse_manifest("\n\n").empty());

  const std::string dup = std::string(kTwoImages) +
                          R"({"image_id":"a","file":"c.jpg","transect_id":2,"camera_id":"phantom4pro","census_eligible":false})";
  try {
    parse_manifest(dup);
    FAIL("expected a duplicate-id error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    CHECK(e.line() == 4);
  }

  CHECK_THROWS_AS(parse_manifest(R"({"image_id":"x","file":"x","transect_id":1,"camera_id":"c","census_eligible":true})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_manifest("{not json}\n"), ValidationError);
  CHECK_THROWS_AS(parse_manifest(R"({"schema":"wildcensus-labels/1"})"), ValidationError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.jsonl"), IoError);
}

TEST_CASE("load_manifest at campaign scale") {
  const auto ds = testing::make_reference_dataset();
  const Manifest m = parse_manifest(manifest_to_jsonl(ds.records));
  CHECK(m.size() == 39798);
  std::set<std::int64_t> transects;
  for (const auto& r : m.records()) transects.insert(r.transect_id);
  CHECK(transects.size() == 575);
}

TEST_CASE("load_detections and load_labels validate against the manifest") {
  const Manifest m = parse_manifest(kTwoImages);
  const auto& cams = default_cameras();
  const auto dets = parse_detections(
      R"({"image_id":"a","class":"deer","bbox":[10,20,30,40],"confidence":0.5,"mask":[[10,20],[40,20],[40,60]]})", m, cams);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].mask->size() == 3);

  CHECK_THROWS_AS(parse_detections(R"({"image_id":"a","class":"deer","bbox":[10,20,30,40],"confidence":1.5})", m, cams),
                  ValidationError);
  CHECK_THROWS_AS(parse_detections(R"({"image_id":"a","class":"deer","bbox":[5460,20,30,40],"confidence":0.5})", m, cams),
                  ValidationError);
  CHECK_THROWS_AS(parse_detections(R"({"image_id":"a","class":"deer","bbox":[10,20,0,40],"confidence":0.5})", m, cams),
                  ValidationError);
  CHECK_THROWS_AS(parse_detections(R"({"image_id":"zzz","class":"deer","bbox":[10,20,30,40],"confidence":0.5})", m, cams),
                  ValidationError);
  CHECK_THROWS_AS(parse_detections(R"({"image_id":"a","class":"horse","bbox":[10,20,30,40],"confidence":0.5})", m, cams),
                  ValidationError);

  const auto labels = parse_labels(R"({"image_id":"b","class":"cow","bbox":[1,2,3,4],"observers":["o1","o2"]})", m, cams);
  REQUIRE(labels.size() == 1);
  CHECK(labels[0].observers == std::vector<std::string>{"o1", "o2"});
  CHECK_THROWS_AS(parse_labels(R"({"image_id":"b","class":"cow","bbox":[1,2,3,4],"confidence":0.3})", m, cams),
                  ValidationError);
}

TEST_CASE("class counts on the full label set") {
  const auto ds = testing::make_reference_dataset();
  const Manifest m(ds.records);
  const auto labels = parse_labels(labels_to_jsonl(ds.labels), m, default_cameras());
  const auto counts = images_per_class(labels);
  CHECK(counts.at(AnimalClass::deer) == 232);
  CHECK(counts.at(AnimalClass::cow) == 88);
  CHECK(counts.at(AnimalClass::other_animal) == 3);
}

TEST_CASE("records survive load -> serialize -> load") {
  const auto ds = testing::make_reference_dataset(9);
  std::vector<ImageRecord> few(ds.records.begin(), ds.records.begin() + 50);
  few[3].census_eligible = false;
  few[3].pose.reset();
  const std::string text = manifest_to_jsonl(few);
  const Manifest m = parse_manifest(text);
  CHECK(manifest_to_jsonl(m.records()) == text);

  const Manifest full(ds.records);
  const std::string labels_text = labels_to_jsonl(ds.labels);
  CHECK(labels_to_jsonl(parse_labels(labels_text, full, default_cameras())) == labels_text);

  std::vector<Detection> dets;
  for (const auto& l : ds.labels) dets.push_back({l.image_id, l.cls, l.bbox, 0.123456789, l.mask});
  const std::string dets_text = detections_to_jsonl(dets);
  CHECK(detections_to_jsonl(parse_detections(dets_text, full, default_cameras())) == dets_text);
}

TEST_CASE("make_splits reproduces the reference counts") {
  const auto ds = testing::make_reference_dataset();
  const Manifest m(ds.records);
  const auto splits = make_splits(m, ds.labels, SplitSpec::reference(), 42);

  const SplitCounts expected[3] = {{140, 54, 3, 575}, {46, 17, 0, 575}, {46, 17, 0, 575}};
  for (Split s : kAllSplits) {
    for (Category c : kAllCategories) {
      CHECK(splits[s].ids(c).size() == expected[static_cast<int>(s)][c]);
    }
  }
  CHECK(140 + 46 + 46 == 232);
  CHECK(54 + 17 + 17 == 88);
  CHECK_NOTHROW(check_disjoint(splits));

  // One empty image per transect in each split.
  for (Split s : kAllSplits) {
    std::set<std::int64_t> transects;
    for (const auto& id : splits[s].ids(Category::empty)) transects.insert(m.at(id).transect_id);
    CHECK(transects.size() == 575);
  }

  const auto again = make_splits(m, ds.labels, SplitSpec::reference(), 42);
  CHECK(splits_to_json(again).dump() == splits_to_json(splits).dump());
  const auto other = make_splits(m, ds.labels, SplitSpec::reference(), 43);
  CHECK(splits_to_json(other).dump() != splits_to_json(splits).dump());

  const auto parsed = splits_from_json(nlohmann::json::parse(splits_to_json(splits).dump()));
  CHECK(splits_to_json(parsed).dump() == splits_to_json(splits).dump());

  auto reuse_spec = SplitSpec::reference();
  reuse_spec.reuse_empty = true;
  const auto reused = make_splits(m, ds.labels, reuse_spec, 42);
  CHECK(reused[Split::train].ids(Category::empty) == reused[Split::test].ids(Category::empty));
  CHECK_NOTHROW(check_disjoint(reused));

  auto greedy = SplitSpec::reference();
  greedy.counts[0].deer = 200;
  CHECK_THROWS_AS(make_splits(m, ds.labels, greedy, 42), InvalidInput);
}

TEST_CASE("check_disjoint names the shared image") {
  SplitSet s;
  s.splits[0].image_ids[0] = {"x"};
  s.splits[2].image_ids[0] = {"x"};
  s.splits[2].split = Split::test;
  CHECK_THROWS_WITH_AS(check_disjoint(s), doctest::Contains("'x'"), ValidationError);
}

TEST_CASE("export_training_set") {
  const auto ds = testing::make_reference_dataset();
  const Manifest m(ds.records);
  const auto splits = make_splits(m, ds.labels, SplitSpec::reference(), 42);
  const std::string dir = temp_dir("export");
  const auto summary = export_training_set(splits[Split::train], ds.labels, m, default_cameras(), dir);
  CHECK(summary.images.deer == 140);
  CHECK(summary.images.cow == 54);
  CHECK(summary.images.other == 3);
  CHECK(summary.images.empty == 575);
  CHECK(summary.annotation_files == 140 + 54 + 3 + 575);
  const auto meta = read_json_file(dir + "/dataset.json");
  CHECK(meta.at("no_overlap").get<bool>());
  CHECK(meta.at("schema") == "wildcensus-trainset/1");

  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir + "/labels")) files += e.is_regular_file();
  CHECK(files == summary.annotation_files);

  // Normalization round-trips within half a pixel.
  const MaskPolygon poly = {{0, 0}, {5472, 10.25}, {1234.5, 3648}};
  const auto back = denormalize_polygon(normalize_polygon(poly, 5472, 3648), 5472, 3648);
  for (std::size_t i = 0; i < poly.size(); ++i) CHECK((back[i] - poly[i]).norm() < 0.5);
  for (const auto& p : normalize_polygon(poly, 5472, 3648)) {
    CHECK(p.x() >= 0.0);
    CHECK(p.x() <= 1.0);
  }

  auto unmasked = ds.labels;
  const std::string victim = splits[Split::train].ids(Category::deer).front();
  for (auto& l : unmasked) {
    if (l.image_id == victim) l.mask.reset();
  }
  CHECK_THROWS_WITH_AS(export_training_set(splits[Split::train], unmasked, m, default_cameras(), dir),
                       doctest::Contains(victim.c_str()), ValidationError);
  fs::remove_all(dir);
}
