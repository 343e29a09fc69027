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

#include "wildcensus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>

#include "wildcensus/error.hpp"
#include "wildcensus/evaluation.hpp"
#include "wildcensus/io.hpp"
#include "wildcensus/random.hpp"

namespace wildcensus {

namespace {

using ojson = nlohmann::ordered_json;

struct Frame {
  std::size_t record = 0;
  FlightPosed truth;  ///< the recorded pose differs by the pose jitter
  Point2 center = Point2::Zero();
  int transect_id = 0;
};

/// Uniform hash of points into square cells.
class PointGrid {
 public:
  explicit PointGrid(double cell) : cell_(cell) {}

  void insert(const Point2& p, std::size_t value) { cells_[key(cell(p.x()), cell(p.y()))].push_back(value); }

  template <class Fn>
  void near(const Point2& p, Fn&& fn) const {
    const auto cx = cell(p.x());
    const auto cy = cell(p.y());
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t v : it->second) fn(v);
      }
    }
  }

 private:
  std::int64_t cell(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(y);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

double heading_of(const Point2& d) {
  double h = std::atan2(d.x(), d.y()) * 180.0 / std::numbers::pi;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

double quantize(double v) { return std::round(v * 1e4) / 1e4; }

/// Clips `b` to the frame; empty when nothing remains.
std::optional<BBox> clip(const BBox& b, double w, double h) {
  const double x0 = std::clamp(b.x, 0.0, w);
  const double y0 = std::clamp(b.y, 0.0, h);
  const double x1 = std::clamp(b.x + b.w, 0.0, w);
  const double y1 = std::clamp(b.y + b.h, 0.0, h);
  if (x1 - x0 < 1.0 || y1 - y0 < 1.0) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

BBox jitter(Rng& rng, const BBox& b, double px, double w, double h) {
  if (px <= 0.0) return b;
  BBox j{b.x + rng.uniform(-px, px), b.y + rng.uniform(-px, px), b.w, b.h};
  return clip(j, w, h).value_or(b);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput("scenario: " + what);
}

std::pair<double, double> range_from(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InvalidInput(std::string("scenario: ") + name + " must be [low, high]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Reads known keys from an object and rejects any other key.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw InvalidInput("scenario: " + where_ + " must be an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw InvalidInput("scenario: unknown key '" + k + "' in " + where_);
    }
  }

  const nlohmann::json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (const auto* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const nlohmann::json::exception&) {
        throw InvalidInput("scenario: '" + key + "' in " + where_ + " has the wrong type");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

double ScenarioSpec::localization_bound_m() const {
  // Clipping at the frame edge moves the box center by at most half the
  // animal; 0.05 m covers a few pixels of box jitter at nadir.
  return pose_jitter_m + animal_size_m.second / 2.0 + 0.05;
}

void validate(const ScenarioSpec& s) {
  require(s.area_ew_m > 0.0 && s.area_ns_m > 0.0, "area dimensions must be positive");
  require(s.coverage > 0.0 && s.coverage <= 1.0, "coverage must lie in (0, 1]");
  require(s.altitude_m > 0.0 && s.speed_mps > 0.0 && s.photo_interval_s > 0.0,
          "altitude, speed and photo interval must be positive");
  require(s.deer >= 0 && s.cows >= 0, "animal counts must be non-negative");
  require(s.animal_size_m.first > 0.0 && s.animal_size_m.first <= s.animal_size_m.second,
          "animal size range must be positive and ordered");
  require(s.pose_jitter_m >= 0.0, "pose jitter must be non-negative");
  require(s.dedup_radius_m > 0.0, "dedup radius must be positive");
  const double e = s.localization_bound_m();
  require(s.dedup_radius_m > 2.0 * e, "dedup radius must exceed twice the localization error bound (" +
                                          format_number(2.0 * e) + " m)");
  require(s.min_spacing_m > s.dedup_radius_m + 2.0 * e,
          "minimum spacing must exceed the dedup radius plus twice the localization error bound");
  const auto& d = s.detector;
  for (const auto& r : {d.tp_confidence, d.fp_confidence}) {
    require(r.first >= 0.0 && r.first <= r.second && r.second <= 1.0, "confidence ranges must lie in [0, 1]");
  }
  require(d.tp_rate >= 0.0 && d.tp_rate <= 1.0, "detector tp_rate must lie in [0, 1]");
  require(d.fp_per_image >= 0.0, "detector fp_per_image must be non-negative");
  require(d.box_jitter_px >= 0.0 && d.box_jitter_px <= 10.0, "detector box jitter must lie in [0, 10] px");
  const auto& o = s.observers;
  require(o.ids.size() >= 2, "at least two observers are needed");
  require(std::set<std::string>(o.ids.begin(), o.ids.end()).size() == o.ids.size(), "observer ids must be distinct");
  for (const auto& id : o.ids) require(!id.empty() && id != "expert", "observer ids must be non-empty and not 'expert'");
  require(o.miss_rate >= 0.0 && o.miss_rate <= 1.0, "observer miss_rate must lie in [0, 1]");
  require(o.false_box_rate >= 0.0 && o.false_box_rate <= 1.0, "observer false_box_rate must lie in [0, 1]");
  require(o.box_jitter_px >= 0.0 && o.box_jitter_px <= 4.0, "observer box jitter must lie in [0, 4] px");
  require(o.review_s >= 0.0, "review duration must be non-negative");
  require(o.candidate_tau >= 0.0 && o.candidate_tau <= 1.0, "candidate_tau must lie in [0, 1]");
}

ScenarioSpec scenario_from_json(const nlohmann::json& doc) {
  ScenarioSpec s;
  {
    Fields f(doc, "scenario");
    f.read("seed", s.seed);
    if (const auto* o = f.get("origin")) {
      Fields g(*o, "origin");
      g.read("lat", s.origin.lat_deg);
      g.read("lon", s.origin.lon_deg);
    }
    if (const auto* a = f.get("area_m")) std::tie(s.area_ew_m, s.area_ns_m) = range_from(*a, "area_m");
    if (const auto* g = f.get("grid")) {
      Fields h(*g, "grid");
      h.read("cell_ns_m", s.grid.cell_ns_m);
      h.read("cell_ew_m", s.grid.cell_ew_m);
    }
    f.read("coverage", s.coverage);
    f.read("min_transect_m", s.min_transect_m);
    f.read("max_route_length_m", s.max_route_length_m);
    f.read("camera_id", s.camera_id);
    f.read("altitude_m", s.altitude_m);
    f.read("speed_mps", s.speed_mps);
    f.read("photo_interval_s", s.photo_interval_s);
    f.read("start_utc", s.start_utc);
    f.read("deer", s.deer);
    f.read("cows", s.cows);
    f.read("min_spacing_m", s.min_spacing_m);
    if (const auto* a = f.get("animal_size_m")) s.animal_size_m = range_from(*a, "animal_size_m");
    f.read("pose_jitter_m", s.pose_jitter_m);
    f.read("dedup_radius_m", s.dedup_radius_m);
    if (const auto* d = f.get("detector")) {
      Fields g(*d, "detector");
      g.read("tp_rate", s.detector.tp_rate);
      g.read("fp_per_image", s.detector.fp_per_image);
      if (const auto* r = g.get("tp_confidence")) s.detector.tp_confidence = range_from(*r, "tp_confidence");
      if (const auto* r = g.get("fp_confidence")) s.detector.fp_confidence = range_from(*r, "fp_confidence");
      g.read("box_jitter_px", s.detector.box_jitter_px);
    }
    if (const auto* o = f.get("observers")) {
      Fields g(*o, "observers");
      g.read("ids", s.observers.ids);
      g.read("miss_rate", s.observers.miss_rate);
      g.read("false_box_rate", s.observers.false_box_rate);
      g.read("box_jitter_px", s.observers.box_jitter_px);
      g.read("review_s", s.observers.review_s);
      g.read("candidate_tau", s.observers.candidate_tau);
      g.read("adjudicate", s.observers.adjudicate);
    }
  }
  validate(s);
  return s;
}

ojson to_json(const ScenarioSpec& s) {
  ojson j;
  j["seed"] = s.seed;
  j["origin"] = {{"lat", s.origin.lat_deg}, {"lon", s.origin.lon_deg}};
  j["area_m"] = {s.area_ew_m, s.area_ns_m};
  j["grid"] = {{"cell_ns_m", s.grid.cell_ns_m}, {"cell_ew_m", s.grid.cell_ew_m}};
  j["coverage"] = s.coverage;
  j["min_transect_m"] = s.min_transect_m;
  j["max_route_length_m"] = s.max_route_length_m;
  j["camera_id"] = s.camera_id;
  j["altitude_m"] = s.altitude_m;
  j["speed_mps"] = s.speed_mps;
  j["photo_interval_s"] = s.photo_interval_s;
  j["start_utc"] = s.start_utc;
  j["deer"] = s.deer;
  j["cows"] = s.cows;
  j["min_spacing_m"] = s.min_spacing_m;
  j["animal_size_m"] = {s.animal_size_m.first, s.animal_size_m.second};
  j["pose_jitter_m"] = s.pose_jitter_m;
  j["dedup_radius_m"] = s.dedup_radius_m;
  const auto& d = s.detector;
  j["detector"] = {{"tp_rate", d.tp_rate},
                   {"fp_per_image", d.fp_per_image},
                   {"tp_confidence", {d.tp_confidence.first, d.tp_confidence.second}},
                   {"fp_confidence", {d.fp_confidence.first, d.fp_confidence.second}},
                   {"box_jitter_px", d.box_jitter_px}};
  const auto& o = s.observers;
  j["observers"] = {{"ids", o.ids},
                    {"miss_rate", o.miss_rate},
                    {"false_box_rate", o.false_box_rate},
                    {"box_jitter_px", o.box_jitter_px},
                    {"review_s", o.review_s},
                    {"candidate_tau", o.candidate_tau},
                    {"adjudicate", o.adjudicate}};
  return j;
}

std::size_t SyntheticSurvey::planted(AnimalClass cls) const {
  return static_cast<std::size_t>(
      std::count_if(animals.begin(), animals.end(), [&](const auto& a) { return a.cls == cls; }));
}

namespace {

/// Frames along every flown leg, in flight order.
std::vector<Frame> fly(const ScenarioSpec& spec, const SurveyPlan& plan, const CameraIntrinsicsd& cam, Rng& rng,
                       std::vector<ImageRecord>& records) {
  std::vector<Frame> frames;
  const double step = spec.speed_mps * spec.photo_interval_s;
  for (std::size_t r = 0; r < plan.routes.size(); ++r) {
    const auto& route = plan.routes[r];
    const auto& sched = plan.schedule.at(r);
    Point2 cursor = plan.home;
    double flown = 0.0;
    for (const auto& leg : route.legs) {
      const Transect& t = plan.transect(leg.transect_id);
      const Point2 a = leg.reversed ? t.end : t.start;
      const Point2 b = leg.reversed ? t.start : t.end;
      flown += (a - cursor).norm();
      const double len = (b - a).norm();
      const Point2 dir = (b - a) / len;
      const double heading = heading_of(dir);
      for (double s = 0.0; s <= len + 1e-9; s += step) {
        Frame f;
        f.center = a + dir * s;
        f.transect_id = t.id;
        f.truth = FlightPosed{enu_unproject(plan.origin, f.center), spec.altitude_m, heading,
                              sched.start_utc + (flown + s) / sched.speed_mps};
        f.record = records.size();

        ImageRecord rec;
        char id[32];
        std::snprintf(id, sizeof id, "SYN%06zu", records.size());
        rec.image_id = id;
        rec.file = "images/" + rec.image_id + ".jpg";
        rec.transect_id = t.id;
        rec.camera_id = spec.camera_id;
        // Distance from the nearer transect end, in the transect's own frame.
        const double from_start = leg.reversed ? len - s : s;
        const double trim = t.truncated_ends_m;
        rec.census_eligible = t.census_eligible && from_start >= trim && from_start <= len - trim;
        const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double rad = spec.pose_jitter_m * std::sqrt(rng.uniform());
        const Point2 recorded = f.center + rad * Point2(std::cos(ang), std::sin(ang));
        rec.pose = FlightPosed{enu_unproject(plan.origin, recorded), spec.altitude_m, heading, f.truth.timestamp_utc};
        records.push_back(std::move(rec));
        frames.push_back(f);
      }
      flown += len;
      cursor = b;
    }
  }
  (void)cam;
  return frames;
}

struct Visible {
  std::size_t animal = 0;
  BBox bbox;
};

/// Truth-based verdict for one observer; misses and false boxes come from
/// `rng` when `errors` is set.
Verdict simulate_verdict(const std::string& observer, const std::vector<const GroundTruthLabel*>& truth,
                         const std::vector<Candidate>& candidates, const ObserverProfile& prof, bool errors,
                         Rng& rng, double w, double h) {
  Verdict v;
  v.observer_id = observer;
  v.duration_s = prof.review_s;
  std::vector<bool> used(candidates.size(), false);
  for (const auto* l : truth) {
    if (errors && rng.bernoulli(prof.miss_rate)) continue;
    int best = -1;
    double best_iou = 0.5;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c] || candidates[c].cls != l->cls) continue;
      const double o = iou(candidates[c].bbox, l->bbox);
      if (o >= best_iou) {
        best_iou = o;
        best = static_cast<int>(c);
      }
    }
    if (best >= 0) {
      used[best] = true;
      v.boxes.push_back({candidates[best].bbox, l->cls, BoxAction::confirm_model, candidates[best].candidate_id});
    } else {
      const BBox b = errors ? jitter(rng, l->bbox, prof.box_jitter_px, w, h) : l->bbox;
      v.boxes.push_back({b, l->cls, BoxAction::add_manual, std::nullopt});
    }
  }
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!used[c]) {
      v.boxes.push_back({candidates[c].bbox, candidates[c].cls, BoxAction::reject_model, candidates[c].candidate_id});
    }
  }
  if (errors && rng.bernoulli(prof.false_box_rate)) {
    const BBox b{rng.uniform(0.0, w - 150.0), rng.uniform(0.0, h - 100.0), 150.0, 100.0};
    v.boxes.push_back({b, AnimalClass::deer, BoxAction::add_manual, std::nullopt});
  }
  v.declared_empty = v.asserted().empty();
  return v;
}

}  // namespace

SyntheticSurvey generate(const ScenarioSpec& spec, const CameraRegistry& cameras) {
  validate(spec);
  const auto& cam = find_camera(cameras, spec.camera_id);
  const double W = cam.image_width_px;
  const double H = cam.image_height_px;
  const double swath = ground_swath(cam, spec.altitude_m);
  const double extent = along_track_extent(cam, spec.altitude_m);
  const double gsd_x = swath / W;
  const double gsd_y = extent / H;

  SyntheticSurvey out;
  out.spec = spec;

  PlanRequest req;
  req.study_area = {{-spec.area_ew_m / 2, -spec.area_ns_m / 2},
                    {spec.area_ew_m / 2, -spec.area_ns_m / 2},
                    {spec.area_ew_m / 2, spec.area_ns_m / 2},
                    {-spec.area_ew_m / 2, spec.area_ns_m / 2}};
  req.origin = spec.origin;
  req.grid = spec.grid;
  req.swath_m = swath;
  req.min_length_m = spec.min_transect_m;
  req.coverage_target = spec.coverage;
  req.seed = derive_seed(spec.seed, "plan");
  req.max_route_length_m = spec.max_route_length_m;
  req.start_utc = spec.start_utc;
  req.speed_mps = spec.speed_mps;
  out.plan = make_plan(req);

  Rng pose_rng(derive_seed(spec.seed, "pose"));
  const std::vector<Frame> frames = fly(spec, out.plan, cam, pose_rng, out.records);
  PointGrid frame_grid(50.0);
  for (std::size_t i = 0; i < frames.size(); ++i) frame_grid.insert(frames[i].center, i);
  const double reach = std::hypot(swath, extent) / 2.0;

  auto containing = [&](const Point2& p, std::vector<std::size_t>& hits) {
    hits.clear();
    frame_grid.near(p, [&](std::size_t i) {
      if ((frames[i].center - p).norm() > reach) return;
      const Point2 px = ground_to_pixel(frames[i].truth, cam, p, spec.origin);
      if (px.x() > 0.0 && px.x() < W && px.y() > 0.0 && px.y() < H) hits.push_back(i);
    });
    std::sort(hits.begin(), hits.end());
  };

  // Animals go on census-eligible primaries, clear of the trimmed ends and
  // the swath edges. A spot seen from two transects or from a frame outside
  // the census is rejected, so every duplicate is a consecutive-frame one.
  std::vector<const Transect*> lanes;
  std::vector<double> cumulative;
  const double edge = std::max(spec.animal_size_m.second, 1.5);
  double total = 0.0;
  double usable_area = 0.0;
  for (const auto& t : out.plan.transects) {
    if (t.kind != TransectKind::primary || !t.census_eligible) continue;
    const double usable = t.length_m - 2.0 * (t.truncated_ends_m + extent / 2.0 + 1.0);
    if (usable <= 0.0) continue;
    lanes.push_back(&t);
    total += usable;
    cumulative.push_back(total);
    usable_area += usable * (swath - 2.0 * edge);
  }
  const int n_animals = spec.deer + spec.cows;
  // Hexagonal packing bound on discs of diameter min_spacing.
  const double packing = std::sqrt(3.0) / 2.0 * spec.min_spacing_m * spec.min_spacing_m;
  if (n_animals > 0 && (lanes.empty() || n_animals * packing > usable_area)) {
    throw InvalidInput("infeasible spacing: " + std::to_string(n_animals) + " animals at " +
                       format_number(spec.min_spacing_m) + " m do not fit the surveyed strips");
  }

  Rng place_rng(derive_seed(spec.seed, "placement"));
  PointGrid animal_grid(spec.min_spacing_m);
  std::vector<std::size_t> hits;
  const long max_attempts = 1000L + 200L * n_animals;
  long attempts = 0;
  while (static_cast<int>(out.animals.size()) < n_animals) {
    if (++attempts > max_attempts) {
      throw InvalidInput("infeasible spacing: placed " + std::to_string(out.animals.size()) + " of " +
                         std::to_string(n_animals) + " animals at " + format_number(spec.min_spacing_m) + " m");
    }
    const double u = place_rng.uniform(0.0, total);
    const std::size_t k = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const Transect& t = *lanes[std::min(k, lanes.size() - 1)];
    const double margin = t.truncated_ends_m + extent / 2.0 + 1.0;
    const Point2 dir = (t.end - t.start) / t.length_m;
    const Point2 right(dir.y(), -dir.x());
    const double along = place_rng.uniform(margin, t.length_m - margin);
    const double across = place_rng.uniform(-(swath / 2.0 - edge), swath / 2.0 - edge);
    const Point2 p = t.start + dir * along + right * across;

    bool clear = true;
    animal_grid.near(p, [&](std::size_t a) { clear = clear && (out.animals[a].ground - p).norm() >= spec.min_spacing_m; });
    if (!clear) continue;
    containing(p, hits);
    if (hits.empty()) continue;
    bool ok = true;
    for (std::size_t f : hits) {
      ok = ok && frames[f].transect_id == t.id && out.records[frames[f].record].census_eligible;
    }
    if (!ok) continue;

    PlantedAnimal a;
    a.animal_id = static_cast<int>(out.animals.size()) + 1;
    a.cls = static_cast<int>(out.animals.size()) < spec.deer ? AnimalClass::deer : AnimalClass::cow;
    a.ground = p;
    a.transect_id = t.id;
    for (std::size_t f : hits) a.image_ids.push_back(out.records[frames[f].record].image_id);
    animal_grid.insert(p, out.animals.size());
    out.animals.push_back(std::move(a));
  }

  // Labels: one box per animal per containing frame, clipped to the image.
  Rng size_rng(derive_seed(spec.seed, "size"));
  std::map<std::size_t, std::vector<Visible>> per_frame;
  for (std::size_t a = 0; a < out.animals.size(); ++a) {
    const double len = size_rng.uniform(spec.animal_size_m.first, spec.animal_size_m.second);
    const double wid = len * size_rng.uniform(0.5, 0.7);
    containing(out.animals[a].ground, hits);
    for (std::size_t f : hits) {
      const Point2 c = ground_to_pixel(frames[f].truth, cam, out.animals[a].ground, spec.origin);
      const BBox full{c.x() - len / gsd_x / 2.0, c.y() - wid / gsd_y / 2.0, len / gsd_x, wid / gsd_y};
      if (auto b = clip(full, W, H)) per_frame[frames[f].record].push_back({a, *b});
    }
  }
  for (const auto& [rec, vis] : per_frame) {
    for (const auto& v : vis) {
      GroundTruthLabel l;
      l.image_id = out.records[rec].image_id;
      l.cls = out.animals[v.animal].cls;
      l.bbox = v.bbox;
      l.observers = {"truth"};
      out.labels.push_back(std::move(l));
    }
  }

  // Detections: hits with high confidence, false alarms with low.
  Rng det_rng(derive_seed(spec.seed, "detector"));
  const auto& dp = spec.detector;
  for (std::size_t r = 0; r < out.records.size(); ++r) {
    const auto it = per_frame.find(r);
    if (it != per_frame.end()) {
      for (const auto& v : it->second) {
        if (!det_rng.bernoulli(dp.tp_rate)) continue;
        Detection d;
        d.image_id = out.records[r].image_id;
        d.cls = out.animals[v.animal].cls;
        d.bbox = jitter(det_rng, v.bbox, dp.box_jitter_px, W, H);
        d.confidence = quantize(det_rng.uniform(dp.tp_confidence.first, dp.tp_confidence.second));
        out.detections.push_back(std::move(d));
      }
    }
    const int fps = det_rng.poisson(dp.fp_per_image);
    for (int k = 0; k < fps; ++k) {
      Detection d;
      d.image_id = out.records[r].image_id;
      d.cls = AnimalClass::deer;
      const double bw = std::round(det_rng.uniform(60.0, 200.0));
      const double bh = std::round(det_rng.uniform(40.0, 140.0));
      d.bbox = {std::round(det_rng.uniform(0.0, W - bw)), std::round(det_rng.uniform(0.0, H - bh)), bw, bh};
      d.confidence = quantize(det_rng.uniform(dp.fp_confidence.first, dp.fp_confidence.second));
      out.detections.push_back(std::move(d));
    }
  }

  // Review: observers take turns leasing until nothing is left, then an
  // expert settles every conflict from the truth.
  std::unordered_map<std::string, std::vector<const GroundTruthLabel*>> truth_by_image;
  for (const auto& l : out.labels) truth_by_image[l.image_id].push_back(&l);
  double now = spec.start_utc + 7.0 * 86400.0;
  ReviewOptions ro;
  ro.clock = [&now] { return now; };
  ReviewService svc(ro);
  svc.create_tasks(out.records);
  svc.seed_candidates(out.detections, spec.observers.candidate_tau);
  Rng obs_rng(derive_seed(spec.seed, "observers"));
  const std::vector<const GroundTruthLabel*> none;
  auto truth_of = [&](const std::string& id) -> const std::vector<const GroundTruthLabel*>& {
    const auto it = truth_by_image.find(id);
    return it == truth_by_image.end() ? none : it->second;
  };
  for (bool progress = true; progress;) {
    progress = false;
    for (const auto& obs : spec.observers.ids) {
      const auto task = svc.lease_next(obs);
      if (!task) continue;
      progress = true;
      now += spec.observers.review_s;
      svc.submit_verdict(task->image_id, simulate_verdict(obs, truth_of(task->image_id), task->candidates,
                                                          spec.observers, true, obs_rng, W, H));
    }
  }
  if (spec.observers.adjudicate) {
    for (const auto& t : svc.tasks()) {
      if (t.state != TaskState::conflict) continue;
      now += spec.observers.review_s;
      svc.adjudicate(t.image_id,
                     simulate_verdict("expert", truth_of(t.image_id), t.candidates, spec.observers, false, obs_rng, W, H));
    }
  }
  out.events = svc.events();
  out.reviews = svc.census_reviews();
  return out;
}

ojson truth_json(const SyntheticSurvey& s) {
  ojson j;
  j["schema"] = "wildcensus-truth/1";
  j["deer"] = s.planted(AnimalClass::deer);
  j["cows"] = s.planted(AnimalClass::cow);
  j["images"] = s.records.size();
  j["surveyed_area_m2"] = s.plan.surveyed_area_m2();
  j["study_area_m2"] = s.plan.study_area_m2;
  ojson animals = ojson::array();
  for (const auto& a : s.animals) {
    animals.push_back({{"animal_id", a.animal_id},
                       {"class", std::string(to_string(a.cls))},
                       {"ground_point", {a.ground.x(), a.ground.y()}},
                       {"transect_id", a.transect_id},
                       {"image_ids", a.image_ids}});
  }
  j["animals"] = std::move(animals);
  return j;
}

void write_survey(const std::string& dir, const SyntheticSurvey& s, const ojson& config) {
  ojson scenario;
  scenario["schema"] = "wildcensus-scenario/1";
  scenario["config"] = config;
  scenario["scenario"] = to_json(s.spec);
  write_json_file(join_path(dir, "scenario.json"), scenario);
  write_json_file(join_path(dir, "plan.json"), plan_to_json(s.plan, config));
  write_file(join_path(dir, "manifest.jsonl"), manifest_to_jsonl(s.records));
  write_file(join_path(dir, "labels.jsonl"), labels_to_jsonl(s.labels));
  write_file(join_path(dir, "detections.jsonl"), detections_to_jsonl(s.detections));
  write_file(join_path(join_path(dir, "review"), "events.jsonl"), event_log_to_jsonl(s.events));
  ojson truth = truth_json(s);
  truth["config"] = config;
  write_json_file(join_path(dir, "truth.json"), truth);
}

}  // namespace wildcensus
