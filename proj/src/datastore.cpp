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

#include "wildcensus/datastore.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "wildcensus/io.hpp"
#include "wildcensus/random.hpp"

namespace wildcensus {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

/// True for a header-only line; throws when the schema does not match.
bool is_header(const json& rec, std::string_view schema, std::size_t line) {
  if (!rec.is_object()) throw ValidationError("record is not a JSON object", line);
  const auto it = rec.find("schema");
  if (it == rec.end()) return false;
  if (!it->is_string() || it->get<std::string>() != schema) {
    throw ValidationError("expected schema " + std::string(schema), line);
  }
  return !rec.contains("image_id");
}

const json& field(const json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) {
    throw ValidationError(std::string("missing field '") + key + "'", line);
  }
  return *it;
}

std::string string_field(const json& rec, const char* key, std::size_t line) {
  const json& v = field(rec, key, line);
  if (!v.is_string()) throw ValidationError(std::string("'") + key + "' must be a string", line);
  return v.get<std::string>();
}

double number_field(const json& rec, const char* key, std::size_t line) {
  const json& v = field(rec, key, line);
  if (!v.is_number()) throw ValidationError(std::string("'") + key + "' must be a number", line);
  return v.get<double>();
}

bool has_value(const json& rec, const char* key) {
  const auto it = rec.find(key);
  return it != rec.end() && !it->is_null();
}

BBox parse_bbox(const json& rec, std::size_t line) {
  const json& v = field(rec, "bbox", line);
  if (!v.is_array() || v.size() != 4) throw ValidationError("'bbox' must be [x, y, w, h]", line);
  for (const auto& n : v) {
    if (!n.is_number()) throw ValidationError("'bbox' entries must be numbers", line);
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

std::optional<MaskPolygon> parse_mask(const json& rec, int width, int height, std::size_t line) {
  if (!has_value(rec, "mask")) return std::nullopt;
  const json& v = rec.at("mask");
  if (!v.is_array() || v.size() < 3) throw ValidationError("'mask' needs at least three vertices", line);
  MaskPolygon poly;
  poly.reserve(v.size());
  for (const auto& p : v) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ValidationError("'mask' vertices must be [x, y]", line);
    }
    const Point2 q(p[0].get<double>(), p[1].get<double>());
    if (!(q.x() >= 0 && q.x() <= width && q.y() >= 0 && q.y() <= height)) {
      throw ValidationError("mask vertex outside the image", line);
    }
    poly.push_back(q);
  }
  return poly;
}

ojson mask_json(const MaskPolygon& poly) {
  ojson arr = ojson::array();
  for (const auto& p : poly) arr.push_back(ojson::array({p.x(), p.y()}));
  return arr;
}

ImageRecord parse_image_record(const json& rec, std::size_t line) {
  ImageRecord r;
  r.image_id = string_field(rec, "image_id", line);
  if (r.image_id.empty()) throw ValidationError("empty image_id", line);
  r.file = string_field(rec, "file", line);
  const json& tid = field(rec, "transect_id", line);
  if (!tid.is_number_integer()) throw ValidationError("'transect_id' must be an integer", line);
  r.transect_id = tid.get<std::int64_t>();
  r.camera_id = string_field(rec, "camera_id", line);
  if (has_value(rec, "census_eligible")) {
    if (!rec.at("census_eligible").is_boolean()) {
      throw ValidationError("'census_eligible' must be a boolean", line);
    }
    r.census_eligible = rec.at("census_eligible").get<bool>();
  }

  static constexpr const char* kPoseKeys[] = {"lat", "lon", "alt_agl_m", "heading_deg", "timestamp_utc"};
  const bool any = std::any_of(std::begin(kPoseKeys), std::end(kPoseKeys),
                               [&](const char* k) { return has_value(rec, k); });
  const bool all = std::all_of(std::begin(kPoseKeys), std::end(kPoseKeys),
                               [&](const char* k) { return has_value(rec, k); });
  if (all) {
    FlightPosed pose;
    pose.position = {number_field(rec, "lat", line), number_field(rec, "lon", line)};
    pose.alt_agl_m = number_field(rec, "alt_agl_m", line);
    pose.heading_deg = number_field(rec, "heading_deg", line);
    pose.timestamp_utc = number_field(rec, "timestamp_utc", line);
    try {
      validate(pose);
    } catch (const InvalidInput& e) {
      throw ValidationError("image '" + r.image_id + "': " + e.what(), line);
    }
    r.pose = pose;
  } else if (r.census_eligible) {
    throw ValidationError("census-eligible image '" + r.image_id + "' is missing its pose", line);
  } else if (any) {
    throw ValidationError("image '" + r.image_id + "' has an incomplete pose", line);
  }
  return r;
}

template <class T>
T parse_instance(const json& rec, const Manifest& manifest, const CameraRegistry& cameras,
                 std::size_t line, bool with_confidence) {
  T out;
  out.image_id = string_field(rec, "image_id", line);
  const ImageRecord* img = manifest.find(out.image_id);
  if (!img) throw ValidationError("unknown image_id '" + out.image_id + "'", line);
  const auto [w, h] = image_size(*img, cameras);
  try {
    out.cls = parse_animal_class(string_field(rec, "class", line));
    out.bbox = parse_bbox(rec, line);
    validate_bbox(out.bbox, w, h);
  } catch (const ValidationError& e) {
    if (e.line() != 0) throw;
    throw ValidationError(e.what(), line);
  } catch (const InvalidInput& e) {
    throw ValidationError("image '" + out.image_id + "': " + e.what(), line);
  }
  out.mask = parse_mask(rec, w, h, line);
  if constexpr (std::is_same_v<T, Detection>) {
    if (with_confidence) {
      out.confidence = number_field(rec, "confidence", line);
      if (!(out.confidence >= 0.0 && out.confidence <= 1.0)) {
        throw ValidationError("confidence outside [0, 1] for image '" + out.image_id + "'", line);
      }
    }
  } else {
    if (has_value(rec, "observers")) {
      const json& obs = rec.at("observers");
      if (!obs.is_array()) throw ValidationError("'observers' must be an array", line);
      for (const auto& o : obs) {
        if (!o.is_string()) throw ValidationError("observer ids must be strings", line);
        out.observers.push_back(o.get<std::string>());
      }
    }
  }
  return out;
}

template <class T>
std::string to_jsonl(std::string_view schema, const std::vector<T>& items) {
  std::string out = ojson{{"schema", schema}}.dump() + "\n";
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string_view to_string(AnimalClass c) {
  switch (c) {
    case AnimalClass::deer: return "deer";
    case AnimalClass::cow: return "cow";
    case AnimalClass::other_animal: return "other_animal";
  }
  return "?";
}

AnimalClass parse_animal_class(std::string_view s) {
  if (s == "deer") return AnimalClass::deer;
  if (s == "cow") return AnimalClass::cow;
  if (s == "other_animal" || s == "other") return AnimalClass::other_animal;
  throw ValidationError("unknown class '" + std::string(s) + "'");
}

Manifest::Manifest(std::vector<ImageRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!index_.emplace(r.image_id, i).second) {
      throw ValidationError("duplicate image_id '" + r.image_id + "'");
    }
    if (r.census_eligible && !r.pose) {
      throw ValidationError("census-eligible image '" + r.image_id + "' is missing its pose");
    }
  }
}

const ImageRecord* Manifest::find(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const ImageRecord& Manifest::at(std::string_view image_id) const {
  const ImageRecord* r = find(image_id);
  if (!r) throw ValidationError("unknown image_id '" + std::string(image_id) + "'");
  return *r;
}

std::size_t Manifest::index_of(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  if (it == index_.end()) throw ValidationError("unknown image_id '" + std::string(image_id) + "'");
  return it->second;
}

std::pair<int, int> image_size(const ImageRecord& record, const CameraRegistry& cameras) {
  const auto& cam = find_camera(cameras, record.camera_id);
  return {cam.image_width_px, cam.image_height_px};
}

void validate_bbox(const BBox& b, int width, int height) {
  if (!(b.w > 0) || !(b.h > 0)) throw InvalidInput("bbox width and height must be positive");
  if (!(b.x >= 0 && b.y >= 0 && b.x + b.w <= width && b.y + b.h <= height)) {
    throw InvalidInput("bbox extends past the image edge");
  }
}

Manifest parse_manifest(std::string_view jsonl) {
  std::vector<ImageRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl_text(jsonl, [&](const json& rec, std::size_t line) {
    if (is_header(rec, kManifestSchema, line)) return;
    ImageRecord r = parse_image_record(rec, line);
    if (!seen.emplace(r.image_id, line).second) {
      throw ValidationError("duplicate image_id '" + r.image_id + "' (first seen on line " +
                                std::to_string(seen[r.image_id]) + ")",
                            line);
    }
    records.push_back(std::move(r));
  });
  return Manifest(std::move(records));
}

Manifest load_manifest(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_manifest(text);
  } catch (const ValidationError& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

std::vector<Detection> parse_detections(std::string_view jsonl, const Manifest& manifest,
                                        const CameraRegistry& cameras) {
  std::vector<Detection> out;
  for_each_jsonl_text(jsonl, [&](const json& rec, std::size_t line) {
    if (is_header(rec, kDetectionsSchema, line)) return;
    out.push_back(parse_instance<Detection>(rec, manifest, cameras, line, true));
  });
  return out;
}

std::vector<Detection> load_detections(const std::string& path, const Manifest& manifest,
                                       const CameraRegistry& cameras) {
  const std::string text = read_file(path);
  try {
    return parse_detections(text, manifest, cameras);
  } catch (const ValidationError& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

std::vector<GroundTruthLabel> parse_labels(std::string_view jsonl, const Manifest& manifest,
                                           const CameraRegistry& cameras) {
  std::vector<GroundTruthLabel> out;
  for_each_jsonl_text(jsonl, [&](const json& rec, std::size_t line) {
    if (is_header(rec, kLabelsSchema, line)) return;
    if (rec.contains("confidence")) throw ValidationError("labels carry no confidence", line);
    out.push_back(parse_instance<GroundTruthLabel>(rec, manifest, cameras, line, false));
  });
  return out;
}

std::vector<GroundTruthLabel> load_labels(const std::string& path, const Manifest& manifest,
                                          const CameraRegistry& cameras) {
  const std::string text = read_file(path);
  try {
    return parse_labels(text, manifest, cameras);
  } catch (const ValidationError& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

ojson to_json(const ImageRecord& r) {
  ojson j;
  j["image_id"] = r.image_id;
  j["file"] = r.file;
  j["transect_id"] = r.transect_id;
  if (r.pose) {
    j["lat"] = r.pose->position.lat_deg;
    j["lon"] = r.pose->position.lon_deg;
    j["alt_agl_m"] = r.pose->alt_agl_m;
    j["heading_deg"] = r.pose->heading_deg;
    j["timestamp_utc"] = r.pose->timestamp_utc;
  }
  j["camera_id"] = r.camera_id;
  j["census_eligible"] = r.census_eligible;
  return j;
}

ojson to_json(const Detection& d) {
  ojson j;
  j["image_id"] = d.image_id;
  j["class"] = to_string(d.cls);
  j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
  j["confidence"] = d.confidence;
  if (d.mask) j["mask"] = mask_json(*d.mask);
  return j;
}

ojson to_json(const GroundTruthLabel& l) {
  ojson j;
  j["image_id"] = l.image_id;
  j["class"] = to_string(l.cls);
  j["bbox"] = {l.bbox.x, l.bbox.y, l.bbox.w, l.bbox.h};
  if (l.mask) j["mask"] = mask_json(*l.mask);
  j["observers"] = l.observers;
  return j;
}

std::string manifest_to_jsonl(const std::vector<ImageRecord>& records) {
  return to_jsonl(kManifestSchema, records);
}
std::string detections_to_jsonl(const std::vector<Detection>& detections) {
  return to_jsonl(kDetectionsSchema, detections);
}
std::string labels_to_jsonl(const std::vector<GroundTruthLabel>& labels) {
  return to_jsonl(kLabelsSchema, labels);
}

std::map<AnimalClass, std::size_t> images_per_class(const std::vector<GroundTruthLabel>& labels) {
  std::map<AnimalClass, std::set<std::string>> ids;
  for (const auto& l : labels) ids[l.cls].insert(l.image_id);
  std::map<AnimalClass, std::size_t> out;
  for (AnimalClass c : kAllClasses) out[c] = ids[c].size();
  return out;
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::deer: return "deer";
    case Category::cow: return "cow";
    case Category::other: return "other";
    case Category::empty: return "empty";
  }
  return "?";
}

Category image_category(const std::vector<const GroundTruthLabel*>& image_labels) {
  bool cow = false;
  bool other = false;
  for (const auto* l : image_labels) {
    if (l->cls == AnimalClass::deer) return Category::deer;
    cow |= l->cls == AnimalClass::cow;
    other |= l->cls == AnimalClass::other_animal;
  }
  if (cow) return Category::cow;
  if (other) return Category::other;
  return Category::empty;
}

std::size_t& SplitCounts::operator[](Category c) {
  switch (c) {
    case Category::deer: return deer;
    case Category::cow: return cow;
    case Category::other: return other;
    case Category::empty: break;
  }
  return empty;
}

std::size_t SplitCounts::operator[](Category c) const {
  return const_cast<SplitCounts&>(*this)[c];
}

SplitSpec SplitSpec::reference() {
  SplitSpec spec;
  spec.counts[static_cast<int>(Split::train)] = {140, 54, 3, 575};
  spec.counts[static_cast<int>(Split::val)] = {46, 17, 0, 575};
  spec.counts[static_cast<int>(Split::test)] = {46, 17, 0, 575};
  return spec;
}

std::size_t SplitManifest::total() const {
  std::size_t n = 0;
  for (const auto& v : image_ids) n += v.size();
  return n;
}

SplitSet make_splits(const Manifest& manifest, const std::vector<GroundTruthLabel>& labels,
                     const SplitSpec& spec, std::uint64_t seed) {
  std::unordered_map<std::string, std::vector<const GroundTruthLabel*>> by_image;
  for (const auto& l : labels) {
    manifest.at(l.image_id);
    by_image[l.image_id].push_back(&l);
  }

  // Pools in image-id order so the result only depends on content and seed.
  std::array<std::vector<std::string>, 4> pools;
  std::map<std::int64_t, std::vector<std::string>> empty_by_transect;
  static const std::vector<const GroundTruthLabel*> kNone;
  for (const auto& r : manifest.records()) {
    const auto it = by_image.find(r.image_id);
    const Category c = image_category(it == by_image.end() ? kNone : it->second);
    pools[static_cast<int>(c)].push_back(r.image_id);
    if (c == Category::empty) empty_by_transect[r.transect_id].push_back(r.image_id);
  }
  for (auto& p : pools) std::sort(p.begin(), p.end());
  for (auto& [_, ids] : empty_by_transect) std::sort(ids.begin(), ids.end());

  SplitSet out;
  out.seed = seed;
  out.spec = spec;
  for (Split s : kAllSplits) out.splits[static_cast<int>(s)].split = s;

  for (Category c : {Category::deer, Category::cow, Category::other}) {
    auto pool = pools[static_cast<int>(c)];
    std::size_t needed = 0;
    for (const auto& counts : spec.counts) needed += counts[c];
    if (pool.size() < needed) {
      throw InvalidInput("insufficient " + std::string(to_string(c)) + " images: need " +
                         std::to_string(needed) + ", have " + std::to_string(pool.size()));
    }
    Rng rng(derive_seed(seed, std::string("split/") + std::string(to_string(c))));
    rng.shuffle(std::span<std::string>(pool));
    std::size_t next = 0;
    for (Split s : kAllSplits) {
      auto& dst = out.splits[static_cast<int>(s)].image_ids[static_cast<int>(c)];
      const std::size_t n = spec.counts[static_cast<int>(s)][c];
      dst.assign(pool.begin() + next, pool.begin() + next + n);
      next += n;
    }
  }

  auto& empty_pool = pools[static_cast<int>(Category::empty)];
  if (!spec.empty_per_transect) {
    std::size_t needed = 0;
    for (const auto& counts : spec.counts) needed += counts.empty;
    if (!spec.reuse_empty && empty_pool.size() < needed) {
      throw InvalidInput("insufficient empty images: need " + std::to_string(needed) + ", have " +
                         std::to_string(empty_pool.size()));
    }
    Rng rng(derive_seed(seed, "split/empty"));
    rng.shuffle(std::span<std::string>(empty_pool));
    std::size_t next = 0;
    for (Split s : kAllSplits) {
      const std::size_t n = spec.counts[static_cast<int>(s)].empty;
      if (spec.reuse_empty) next = 0;
      if (empty_pool.size() < next + n) throw InvalidInput("insufficient empty images");
      out.splits[static_cast<int>(s)].image_ids[static_cast<int>(Category::empty)].assign(
          empty_pool.begin() + next, empty_pool.begin() + next + n);
      next += n;
    }
    return out;
  }

  // One empty image per transect per split.
  std::vector<std::int64_t> transects;
  std::map<std::int64_t, std::size_t> cursor;
  for (auto& [tid, ids] : empty_by_transect) {
    Rng rng(derive_seed(seed, "split/empty/" + std::to_string(tid)));
    rng.shuffle(std::span<std::string>(ids));
    transects.push_back(tid);
    cursor[tid] = 0;
  }
  Rng order_rng(derive_seed(seed, "split/empty-transects"));
  order_rng.shuffle(std::span<std::int64_t>(transects));
  for (Split s : kAllSplits) {
    const std::size_t n = spec.counts[static_cast<int>(s)].empty;
    auto& dst = out.splits[static_cast<int>(s)].image_ids[static_cast<int>(Category::empty)];
    for (std::int64_t tid : transects) {
      if (dst.size() == n) break;
      const auto& ids = empty_by_transect[tid];
      const std::size_t k = spec.reuse_empty ? 0 : cursor[tid];
      if (k >= ids.size()) continue;
      dst.push_back(ids[k]);
      if (!spec.reuse_empty) ++cursor[tid];
    }
    if (dst.size() < n) {
      throw InvalidInput("insufficient empty images: " + std::string(to_string(s)) + " needs one from " +
                         std::to_string(n) + " transects, only " + std::to_string(dst.size()) +
                         " can supply one");
    }
  }
  return out;
}

void check_disjoint(const SplitSet& splits) {
  std::unordered_map<std::string, Split> owner;
  for (const auto& sm : splits.splits) {
    for (Category c : kAllCategories) {
      if (c == Category::empty && splits.spec.reuse_empty) continue;
      for (const auto& id : sm.ids(c)) {
        const auto [it, inserted] = owner.emplace(id, sm.split);
        if (!inserted) {
          throw ValidationError("image '" + id + "' appears in both " +
                                std::string(to_string(it->second)) + " and " +
                                std::string(to_string(sm.split)));
        }
      }
    }
  }
}

ojson splits_to_json(const SplitSet& splits) {
  ojson doc;
  doc["schema"] = kSplitsSchema;
  doc["seed"] = splits.seed;
  doc["empty_per_transect"] = splits.spec.empty_per_transect;
  doc["reuse_empty"] = splits.spec.reuse_empty;
  ojson body = ojson::object();
  for (const auto& sm : splits.splits) {
    ojson cats = ojson::object();
    for (Category c : kAllCategories) cats[std::string(to_string(c))] = sm.ids(c);
    body[std::string(to_string(sm.split))] = std::move(cats);
  }
  doc["splits"] = std::move(body);
  return doc;
}

SplitSet splits_from_json(const json& doc) {
  try {
    if (doc.value("schema", "") != kSplitsSchema) {
      throw ValidationError("splits: expected schema " + std::string(kSplitsSchema));
    }
    SplitSet out;
    out.seed = doc.at("seed").get<std::uint64_t>();
    out.spec.empty_per_transect = doc.value("empty_per_transect", true);
    out.spec.reuse_empty = doc.value("reuse_empty", false);
    for (Split s : kAllSplits) {
      auto& sm = out.splits[static_cast<int>(s)];
      sm.split = s;
      const auto& cats = doc.at("splits").at(std::string(to_string(s)));
      for (Category c : kAllCategories) {
        sm.image_ids[static_cast<int>(c)] = cats.at(std::string(to_string(c))).get<std::vector<std::string>>();
        out.spec.counts[static_cast<int>(s)][c] = sm.ids(c).size();
      }
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("splits: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training export

std::vector<Point2> normalize_polygon(const MaskPolygon& poly, int width, int height) {
  std::vector<Point2> out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.emplace_back(p.x() / width, p.y() / height);
  return out;
}

MaskPolygon denormalize_polygon(const std::vector<Point2>& poly, int width, int height) {
  MaskPolygon out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.emplace_back(p.x() * width, p.y() * height);
  return out;
}

ExportSummary export_training_set(const SplitManifest& split,
                                  const std::vector<GroundTruthLabel>& labels,
                                  const Manifest& manifest, const CameraRegistry& cameras,
                                  const std::string& out_dir) {
  std::unordered_map<std::string, std::vector<const GroundTruthLabel*>> by_image;
  for (const auto& l : labels) by_image[l.image_id].push_back(&l);

  std::vector<std::string> missing;
  for (Category c : kAllCategories) {
    for (const auto& id : split.ids(c)) {
      const auto it = by_image.find(id);
      if (it == by_image.end()) continue;
      for (const auto* l : it->second) {
        if (l->cls == AnimalClass::deer && !l->mask) {
          missing.push_back(id);
          break;
        }
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "deer labels without masks in images:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }

  ExportSummary summary;
  std::string image_list;
  for (Category c : kAllCategories) {
    for (const auto& id : split.ids(c)) {
      const ImageRecord& rec = manifest.at(id);
      const auto [w, h] = image_size(rec, cameras);
      std::ostringstream lines;
      lines.precision(9);
      const auto it = by_image.find(id);
      if (it != by_image.end()) {
        for (const auto* l : it->second) {
          const MaskPolygon outline =
              l->mask ? *l->mask
                      : MaskPolygon{{l->bbox.x, l->bbox.y},
                                    {l->bbox.x + l->bbox.w, l->bbox.y},
                                    {l->bbox.x + l->bbox.w, l->bbox.y + l->bbox.h},
                                    {l->bbox.x, l->bbox.y + l->bbox.h}};
          lines << static_cast<int>(l->cls);
          for (const auto& p : normalize_polygon(outline, w, h)) lines << ' ' << p.x() << ' ' << p.y();
          lines << '\n';
          ++summary.instances;
        }
      }
      std::string name = id;
      std::replace(name.begin(), name.end(), '/', '_');
      write_file(join_path(join_path(out_dir, "labels"), name + ".txt"), lines.str());
      image_list += rec.file + "\n";
      ++summary.annotation_files;
      ++summary.images[c];
    }
  }
  write_file(join_path(out_dir, "images.txt"), image_list);

  ojson meta;
  meta["schema"] = kTrainsetSchema;
  meta["split"] = to_string(split.split);
  meta["classes"] = {"deer", "cow", "other_animal"};
  meta["format"] = "class_index followed by polygon vertices normalized by image width/height";
  // Instances of the same class are annotated as non-overlapping.
  meta["no_overlap"] = true;
  meta["images"] = {{"deer", summary.images.deer},
                    {"cow", summary.images.cow},
                    {"other", summary.images.other},
                    {"empty", summary.images.empty}};
  meta["instances"] = summary.instances;
  write_json_file(join_path(out_dir, "dataset.json"), meta);
  return summary;
}

}  // namespace wildcensus
