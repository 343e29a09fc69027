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

#include "wildcensus/census.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "wildcensus/error.hpp"

namespace wildcensus {

namespace {

using ojson = nlohmann::ordered_json;

std::string id_list(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > shown) out += " and " + std::to_string(ids.size() - shown) + " more";
  return out;
}

ojson bbox_json(const BBox& b) { return ojson::array({b.x, b.y, b.w, b.h}); }

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Ground point under the center of `box`, clamped into the frame.
Point2 georeference(const ImageRecord& rec, const CameraRegistry& cameras, const BBox& box, const Geodetic& origin) {
  const auto& cam = find_camera(cameras, rec.camera_id);
  const Point2 c = box.center();
  const Point2 px(std::clamp(c.x(), 0.0, static_cast<double>(cam.image_width_px)),
                  std::clamp(c.y(), 0.0, static_cast<double>(cam.image_height_px)));
  return pixel_to_ground(*rec.pose, cam, px, origin);
}

}  // namespace

IncompleteReview::IncompleteReview(std::vector<std::string> image_ids)
    : InvalidInput("incomplete review: " + std::to_string(image_ids.size()) +
                   " census-eligible image(s) lack two reviews or an adjudication: " + id_list(image_ids)),
      ids_(std::move(image_ids)) {}

std::string_view to_string(SightingSource s) { return s == SightingSource::human ? "human" : "model-assisted"; }

Reconciliation reconcile(const std::vector<ImageReview>& reviews, const Manifest& manifest,
                         const CameraRegistry& cameras, const Geodetic& origin, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw InvalidInput("IoU threshold must lie in (0, 1]");
  std::unordered_map<std::string, const ImageReview*> by_image;
  for (const auto& r : reviews) by_image[r.image_id] = &r;

  Reconciliation out;
  std::vector<std::string> incomplete;
  for (const auto& rec : manifest.records()) {
    if (!rec.census_eligible) continue;
    const auto it = by_image.find(rec.image_id);
    const ImageReview* review = it == by_image.end() ? nullptr : it->second;
    if (!review || (!review->adjudication && review->reviews.size() < 2)) {
      incomplete.push_back(rec.image_id);
      continue;
    }
    if (!incomplete.empty()) continue;

    int k = 0;
    auto add = [&](const BBox& box, AnimalClass cls, std::vector<std::string> observers, bool model, bool adjudicated) {
      ConfirmedSighting s;
      s.sighting_id = rec.image_id + "#" + std::to_string(k++);
      s.image_id = rec.image_id;
      s.ground_point = georeference(rec, cameras, box, origin);
      s.timestamp = rec.pose->timestamp_utc;
      s.transect_id = rec.transect_id;
      s.cls = cls;
      s.bbox = box;
      s.supporting_observers = std::move(observers);
      s.source = model ? SightingSource::model_assisted : SightingSource::human;
      s.adjudicated = adjudicated;
      out.sightings.push_back(std::move(s));
    };

    if (review->adjudication) {
      for (const auto* b : review->adjudication->asserted()) {
        add(b->bbox, b->cls, {review->adjudication->observer_id}, b->action == BoxAction::confirm_model, true);
      }
      continue;
    }
    // The two counting reviews; the service never records more.
    const Verdict& a = review->reviews[0];
    const Verdict& b = review->reviews[1];
    if (a.observer_id == b.observer_id) {
      throw ValidationError("image '" + rec.image_id + "' has two reviews by '" + a.observer_id + "'");
    }
    const auto xa = a.asserted();
    const auto xb = b.asserted();
    std::vector<bool> used_a(xa.size(), false);
    std::vector<bool> used_b(xb.size(), false);
    for (const auto& [i, j] : correspond(a, b, iou_threshold)) {
      used_a[i] = used_b[j] = true;
      const BBox m{(xa[i]->bbox.x + xb[j]->bbox.x) / 2, (xa[i]->bbox.y + xb[j]->bbox.y) / 2,
                   (xa[i]->bbox.w + xb[j]->bbox.w) / 2, (xa[i]->bbox.h + xb[j]->bbox.h) / 2};
      std::vector<std::string> obs = {a.observer_id, b.observer_id};
      std::sort(obs.begin(), obs.end());
      const bool model = xa[i]->action == BoxAction::confirm_model || xb[j]->action == BoxAction::confirm_model;
      add(m, xa[i]->cls, std::move(obs), model, false);
    }
    ImageConflict conflict{rec.image_id, {}};
    for (std::size_t i = 0; i < xa.size(); ++i) {
      if (!used_a[i]) conflict.boxes.push_back({a.observer_id, xa[i]->cls, xa[i]->bbox});
    }
    for (std::size_t j = 0; j < xb.size(); ++j) {
      if (!used_b[j]) conflict.boxes.push_back({b.observer_id, xb[j]->cls, xb[j]->bbox});
    }
    if (!conflict.boxes.empty()) out.conflicts.push_back(std::move(conflict));
  }
  if (!incomplete.empty()) throw IncompleteReview(std::move(incomplete));
  return out;
}

std::vector<UniqueIndividual> dedup(const std::vector<ConfirmedSighting>& sightings, double radius_m,
                                    double window_s) {
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) throw InvalidInput("dedup radius must be positive");
  if (!(window_s >= 0.0)) throw InvalidInput("dedup time window must be non-negative");

  // Canonical order by sighting id makes the output independent of input order.
  std::vector<const ConfirmedSighting*> s;
  s.reserve(sightings.size());
  for (const auto& x : sightings) {
    if (!x.ground_point) throw InvalidInput("sighting '" + x.sighting_id + "' has no ground point");
    s.push_back(&x);
  }
  std::sort(s.begin(), s.end(), [](const auto* a, const auto* b) { return a->sighting_id < b->sighting_id; });
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i]->sighting_id == s[i - 1]->sighting_id) {
      throw InvalidInput("duplicate sighting id '" + s[i]->sighting_id + "'");
    }
  }

  // Cells of side radius: linked points lie in the same or an adjacent cell.
  auto cell_of = [&](const Point2& p) {
    return std::pair<std::int64_t, std::int64_t>(static_cast<std::int64_t>(std::floor(p.x() / radius_m)),
                                                 static_cast<std::int64_t>(std::floor(p.y() / radius_m)));
  };
  auto key = [](std::int64_t cx, std::int64_t cy) {
    return static_cast<std::uint64_t>(cx) * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(cy);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto [cx, cy] = cell_of(*s[i]->ground_point);
    grid[key(cx, cy)].push_back(i);
  }
  DisjointSet ds(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto [cx, cy] = cell_of(*s[i]->ground_point);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = grid.find(key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (std::size_t j : it->second) {
          if (j <= i) continue;
          if ((*s[i]->ground_point - *s[j]->ground_point).norm() <= radius_m &&
              std::abs(s[i]->timestamp - s[j]->timestamp) <= window_s) {
            ds.unite(i, j);
          }
        }
      }
    }
  }

  // Roots are the smallest member index, so clusters come out ordered by
  // their first sighting id.
  std::vector<UniqueIndividual> out;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t r = ds.find(i);
    auto [it, fresh] = slot.emplace(r, out.size());
    if (fresh) out.push_back({static_cast<int>(out.size()) + 1, {}, Point2::Zero()});
    auto& ind = out[it->second];
    ind.members.push_back(s[i]->sighting_id);
    ind.representative += *s[i]->ground_point;
  }
  for (auto& ind : out) ind.representative /= static_cast<double>(ind.members.size());
  return out;
}

CensusEstimate estimate(std::size_t unique_count, double surveyed_area_m2, double study_area_m2) {
  if (!(surveyed_area_m2 > 0.0)) throw InvalidInput("surveyed area must be positive");
  if (!(study_area_m2 > 0.0)) throw InvalidInput("study area must be positive");
  CensusEstimate e;
  e.unique_count = unique_count;
  e.surveyed_area_m2 = surveyed_area_m2;
  e.study_area_m2 = study_area_m2;
  e.density_per_km2 = static_cast<double>(unique_count) / (surveyed_area_m2 / 1e6);
  e.abundance = e.density_per_km2 * (study_area_m2 / 1e6);
  e.coverage = surveyed_area_m2 / study_area_m2;
  return e;
}

CensusEstimate estimate(std::size_t unique_count, const SurveyPlan& plan) {
  return estimate(unique_count, plan.surveyed_area_m2(), plan.study_area_m2);
}

CensusResult run_census(const std::vector<ImageReview>& reviews, const Manifest& manifest,
                        const CameraRegistry& cameras, const SurveyPlan& plan, const CensusOptions& options) {
  CensusResult r;
  r.reconciliation = reconcile(reviews, manifest, cameras, plan.origin, options.iou_threshold);
  for (const auto& s : r.reconciliation.sightings) {
    if (s.cls == options.census_class) r.counted.push_back(s);
  }
  r.individuals = dedup(r.counted, options.dedup_radius_m, options.time_window_s);
  r.estimate = estimate(r.individuals.size(), plan);
  return r;
}

ojson census_json(const CensusResult& result, const CensusOptions& options, const ojson& config) {
  ojson doc;
  doc["schema"] = "wildcensus-census/1";
  doc["config"] = config;
  doc["parameters"] = {{"dedup_radius_m", options.dedup_radius_m},
                       {"time_window_s", options.time_window_s},
                       {"iou_threshold", options.iou_threshold},
                       {"census_class", std::string(to_string(options.census_class))},
                       {"note", "dedup radius and time window are tool defaults, not survey measurements"}};
  ojson sightings = ojson::array();
  for (const auto& s : result.counted) {
    ojson j;
    j["sighting_id"] = s.sighting_id;
    j["image_id"] = s.image_id;
    j["transect_id"] = s.transect_id;
    j["timestamp_utc"] = s.timestamp;
    j["ground_point"] = ojson::array({s.ground_point->x(), s.ground_point->y()});
    j["bbox"] = bbox_json(s.bbox);
    j["supporting_observers"] = s.supporting_observers;
    j["source"] = std::string(to_string(s.source));
    j["adjudicated"] = s.adjudicated;
    sightings.push_back(std::move(j));
  }
  doc["sightings"] = std::move(sightings);
  ojson individuals = ojson::array();
  for (const auto& ind : result.individuals) {
    individuals.push_back({{"individual_id", ind.individual_id},
                           {"representative", ojson::array({ind.representative.x(), ind.representative.y()})},
                           {"members", ind.members}});
  }
  doc["individuals"] = std::move(individuals);
  doc["conflict_images"] = result.reconciliation.conflicts.size();
  const auto& e = result.estimate;
  doc["estimate"] = {{"unique_count", e.unique_count},
                     {"surveyed_area_m2", e.surveyed_area_m2},
                     {"density_per_km2", e.density_per_km2},
                     {"study_area_m2", e.study_area_m2},
                     {"coverage", e.coverage},
                     {"abundance", e.abundance}};
  return doc;
}

std::string conflicts_jsonl(const Reconciliation& reconciliation) {
  std::string out;
  for (const auto& c : reconciliation.conflicts) {
    ojson j;
    j["image_id"] = c.image_id;
    ojson boxes = ojson::array();
    for (const auto& b : c.boxes) {
      boxes.push_back({{"observer_id", b.observer_id}, {"class", std::string(to_string(b.cls))}, {"bbox", bbox_json(b.bbox)}});
    }
    j["boxes"] = std::move(boxes);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace wildcensus
