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

/// \file datastore.hpp
/// On-disk data model. Every stream is JSON lines; an optional first line
/// `{"schema": "wildcensus-<name>/1"}` identifies the file.
///
///   manifest.jsonl    {"image_id", "file", "transect_id", "lat", "lon",
///                      "alt_agl_m", "heading_deg", "timestamp_utc",
///                      "camera_id", "census_eligible"}
///   detections.jsonl  {"image_id", "class", "bbox": [x, y, w, h],
///                      "confidence", "mask": [[x, y], ...]?}
///   labels.jsonl      as detections minus "confidence", plus "observers"
///   splits.json       per-split arrays of image ids by category, plus "seed"

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wildcensus/geometry.hpp"

namespace wildcensus {

inline constexpr std::string_view kManifestSchema = "wildcensus-manifest/1";
inline constexpr std::string_view kDetectionsSchema = "wildcensus-detections/1";
inline constexpr std::string_view kLabelsSchema = "wildcensus-labels/1";
inline constexpr std::string_view kSplitsSchema = "wildcensus-splits/1";
inline constexpr std::string_view kTrainsetSchema = "wildcensus-trainset/1";

enum class AnimalClass { deer, cow, other_animal };

inline constexpr std::array<AnimalClass, 3> kAllClasses = {AnimalClass::deer, AnimalClass::cow,
                                                           AnimalClass::other_animal};

std::string_view to_string(AnimalClass c);
/// Accepts "deer", "cow", "other_animal" (and "other").
AnimalClass parse_animal_class(std::string_view s);

/// Axis-aligned pixel box: top-left corner plus size.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Point2 center() const { return {x + w / 2.0, y + h / 2.0}; }
  double area() const { return w * h; }
  bool operator==(const BBox&) const = default;
};

/// Mask outline in pixel coordinates.
using MaskPolygon = std::vector<Point2>;

struct ImageRecord {
  std::string image_id;
  std::string file;
  std::int64_t transect_id = 0;
  std::optional<FlightPosed> pose;
  std::string camera_id;
  bool census_eligible = true;
};

struct Detection {
  std::string image_id;
  AnimalClass cls = AnimalClass::deer;
  BBox bbox;
  double confidence = 0.0;
  std::optional<MaskPolygon> mask;
};

struct GroundTruthLabel {
  std::string image_id;
  AnimalClass cls = AnimalClass::deer;
  BBox bbox;
  std::optional<MaskPolygon> mask;
  std::vector<std::string> observers;
};

/// Image records with an id index. Immutable once loaded.
class Manifest {
 public:
  Manifest() = default;
  /// Throws ValidationError on a duplicate id or a census-eligible record
  /// without a pose.
  explicit Manifest(std::vector<ImageRecord> records);

  const std::vector<ImageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const ImageRecord* find(std::string_view image_id) const;
  const ImageRecord& at(std::string_view image_id) const;
  std::size_t index_of(std::string_view image_id) const;

 private:
  std::vector<ImageRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Image width/height in pixels for `record`, via its camera.
std::pair<int, int> image_size(const ImageRecord& record, const CameraRegistry& cameras);

void validate_bbox(const BBox& box, int width, int height);

Manifest load_manifest(const std::string& path);
Manifest parse_manifest(std::string_view jsonl);

std::vector<Detection> load_detections(const std::string& path, const Manifest& manifest,
                                       const CameraRegistry& cameras);
std::vector<Detection> parse_detections(std::string_view jsonl, const Manifest& manifest,
                                        const CameraRegistry& cameras);
std::vector<GroundTruthLabel> load_labels(const std::string& path, const Manifest& manifest,
                                          const CameraRegistry& cameras);
std::vector<GroundTruthLabel> parse_labels(std::string_view jsonl, const Manifest& manifest,
                                           const CameraRegistry& cameras);

nlohmann::ordered_json to_json(const ImageRecord& r);
nlohmann::ordered_json to_json(const Detection& d);
nlohmann::ordered_json to_json(const GroundTruthLabel& l);

/// Header line plus one record per line.
std::string manifest_to_jsonl(const std::vector<ImageRecord>& records);
std::string detections_to_jsonl(const std::vector<Detection>& detections);
std::string labels_to_jsonl(const std::vector<GroundTruthLabel>& labels);

/// Number of distinct images containing at least one instance of each class.
std::map<AnimalClass, std::size_t> images_per_class(const std::vector<GroundTruthLabel>& labels);

// ---------------------------------------------------------------------------
// Splits

enum class Split { train, val, test };
enum class Category { deer, cow, other, empty };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::val, Split::test};
inline constexpr std::array<Category, 4> kAllCategories = {Category::deer, Category::cow,
                                                           Category::other, Category::empty};

std::string_view to_string(Split s);
std::string_view to_string(Category c);

/// Deer beats cow beats other; images without labels are empty.
Category image_category(const std::vector<const GroundTruthLabel*>& image_labels);

struct SplitCounts {
  std::size_t deer = 0;
  std::size_t cow = 0;
  std::size_t other = 0;
  std::size_t empty = 0;

  std::size_t& operator[](Category c);
  std::size_t operator[](Category c) const;
};

struct SplitSpec {
  std::array<SplitCounts, 3> counts;  ///< indexed by Split
  /// Empty images are drawn one per transect (the count is the number of
  /// transects sampled).
  bool empty_per_transect = true;
  /// Let every split draw the same empty image from a transect.
  bool reuse_empty = false;

  /// train 140/54/3/575, val 46/17/0/575, test 46/17/0/575.
  static SplitSpec reference();
};

struct SplitManifest {
  Split split = Split::train;
  std::array<std::vector<std::string>, 4> image_ids;  ///< indexed by Category

  const std::vector<std::string>& ids(Category c) const { return image_ids[static_cast<int>(c)]; }
  std::size_t total() const;
};

struct SplitSet {
  std::uint64_t seed = 0;
  SplitSpec spec;
  std::array<SplitManifest, 3> splits;

  const SplitManifest& operator[](Split s) const { return splits[static_cast<int>(s)]; }
};

/// Seeded shuffle per category, then partition to the requested counts.
/// Throws InvalidInput when a category has too few images.
SplitSet make_splits(const Manifest& manifest, const std::vector<GroundTruthLabel>& labels,
                     const SplitSpec& spec, std::uint64_t seed);

/// Throws ValidationError naming the first image id found in two splits
/// (empties are exempt when the spec allows reuse).
void check_disjoint(const SplitSet& splits);

nlohmann::ordered_json splits_to_json(const SplitSet& splits);
SplitSet splits_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Training export

struct ExportSummary {
  SplitCounts images;
  std::size_t annotation_files = 0;
  std::size_t instances = 0;
};

/// Polygon vertices scaled into [0, 1] by the image size.
std::vector<Point2> normalize_polygon(const MaskPolygon& poly, int width, int height);
MaskPolygon denormalize_polygon(const std::vector<Point2>& poly, int width, int height);

/// Writes one `<image_id>.txt` per image (class index and normalized
/// polygon per line), `images.txt` and `dataset.json` under `out_dir`. Deer
/// labels must carry masks; other classes fall back to their box outline.
ExportSummary export_training_set(const SplitManifest& split,
                                  const std::vector<GroundTruthLabel>& labels,
                                  const Manifest& manifest, const CameraRegistry& cameras,
                                  const std::string& out_dir);

}  // namespace wildcensus
