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

// Acceptance criteria, one PASS/FAIL line each. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "support/eval_oracle.hpp"
#include "support/reference_fixture.hpp"
#include "support/review_fixture.hpp"
#include "wildcensus/census.hpp"
#include "wildcensus/datastore.hpp"
#include "wildcensus/evaluation.hpp"
#include "wildcensus/geometry.hpp"
#include "wildcensus/io.hpp"
#include "wildcensus/random.hpp"
#include "wildcensus/review_service.hpp"
#include "wildcensus/survey_planner.hpp"
#include "wildcensus/synthetic.hpp"

using namespace wildcensus;
using namespace wildcensus::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failures for one criterion; the first few are reported.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 3) failures_.push_back(what);
    ++count_;
  }
  bool ok() const { return count_ == 0; }
  std::string failures() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    if (count_ > failures_.size()) s += "; +" + std::to_string(count_ - failures_.size()) + " more";
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

int failed = 0;

void criterion(const char* name, const std::function<std::string(Check&)>& body) {
  Check c;
  std::string detail;
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const bool ok = c.ok();
  failed += !ok;
  std::printf("%s  %-18s %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.c_str(), ok ? "" : " | ",
              ok ? "" : c.failures().c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// At most six images, at most five labels and five detections on each.
EvalInstance small_instance(Rng& rng) {
  EvalInstance inst;
  auto box = [&] {
    return BBox{static_cast<double>(rng.below(8)) * 4.0, static_cast<double>(rng.below(8)) * 4.0,
                8.0 + static_cast<double>(rng.below(3)) * 4.0, 8.0 + static_cast<double>(rng.below(3)) * 4.0};
  };
  auto cls = [&] { return rng.bernoulli(0.3) ? AnimalClass::cow : AnimalClass::deer; };
  const auto images = 1 + rng.below(6);
  for (std::uint64_t i = 0; i < images; ++i) {
    const std::string id = "im" + std::to_string(i);
    for (auto k = rng.below(6); k > 0; --k) inst.labels.push_back({id, cls(), box(), std::nullopt, {}});
    for (auto k = rng.below(6); k > 0; --k) {
      inst.detections.push_back({id, cls(), box(), static_cast<double>(1 + rng.below(10)) / 10.0, std::nullopt});
    }
  }
  return inst;
}

const CameraIntrinsicsd& phantom() {
  static const CameraIntrinsicsd c = find_camera(default_cameras(), "phantom4pro");
  return c;
}

std::string geometry(Check& c) {
  const auto t0 = Clock::now();
  const double swath = ground_swath(phantom(), 45.0);
  c.expect(std::abs(swath - 67.5) <= 0.1, "swath " + fmt("%.6f", swath));

  const Geodetic origin{-34.05, -58.85};
  const Point2 corners[4] = {{0, 0}, {5472, 0}, {5472, 3648}, {0, 3648}};
  Rng rng(2026);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const FlightPosed pose{{origin.lat_deg + rng.uniform(-0.05, 0.05), origin.lon_deg + rng.uniform(-0.05, 0.05)},
                           rng.uniform(1.0, 300.0), rng.uniform(0.0, 360.0), 0.0};
    const auto fp = footprint_polygon(pose, phantom(), origin);
    for (int k = 0; k < 4; ++k) {
      worst = std::max(worst, (pixel_to_ground(pose, phantom(), corners[k], origin) - fp.corners[k]).norm());
    }
  }
  c.expect(worst <= 1e-6, "corner error " + fmt("%.3g", worst));
  const double t = seconds_since(t0);
  c.expect(t < 1.0, "runtime " + fmt("%.3f s", t));
  return "swath " + fmt("%.4f m", swath) + ", max corner error " + fmt("%.2g m", worst) + " over 1000 poses, " +
         fmt("%.3f s", t);
}

std::string ap_oracle(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = small_instance(rng);
    const double thr = std::array{0.1, 0.3, 0.5}[rng.below(3)];
    const auto rs = match_all(group_by_image(inst.detections, inst.labels), thr, 0.0);
    for (AnimalClass cls : {AnimalClass::deer, AnimalClass::cow}) {
      if (oracle_positives(inst, cls) == 0) continue;
      const auto curve = pr_curve(rs, cls);
      const double got = curve.empty() ? 0.0 : average_precision(curve);
      const double err = std::abs(got - oracle_ap(inst, thr, cls, 0.0));
      worst = std::max(worst, err);
      c.expect(err <= 1e-9, "trial " + std::to_string(trial) + " off by " + fmt("%.3g", err));
      ++compared;
    }

    // The same labels detected perfectly.
    std::vector<Detection> perfect;
    for (const auto& l : inst.labels) {
      perfect.push_back({l.image_id, l.cls, l.bbox, static_cast<double>(1 + rng.below(10)) / 10.0, std::nullopt});
    }
    const auto prs = match_all(group_by_image(perfect, inst.labels), thr, 0.0);
    for (AnimalClass cls : {AnimalClass::deer, AnimalClass::cow}) {
      if (oracle_positives(inst, cls) == 0) continue;
      const double ap = average_precision(pr_curve(prs, cls));
      c.expect(ap == 1.0, "perfect detector AP " + fmt("%.17g", ap));
    }
  }
  const double t = seconds_since(t0);
  c.expect(t < 10.0, "runtime " + fmt("%.3f s", t));
  return std::to_string(compared) + " class curves over 500 instances, max error " + fmt("%.2g", worst) +
         ", perfect detector 1.0, " + fmt("%.3f s", t);
}

std::string matching(Check& c) {
  Rng rng(202);
  std::size_t images = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = small_instance(rng);
    const double thr = std::array{0.1, 0.3, 0.5}[rng.below(3)];
    const double cutoff = static_cast<double>(rng.below(11)) / 10.0;
    const auto set = group_by_image(inst.detections, inst.labels);
    const auto rs = match_all(set, thr, cutoff);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& r = rs[i];
      const auto kept = static_cast<std::size_t>(std::count_if(
          set.detections[i].begin(), set.detections[i].end(), [&](const auto& d) { return d.confidence >= cutoff; }));
      const std::string where = "trial " + std::to_string(trial) + " " + r.image_id;
      c.expect(r.tp() + r.fn() == set.labels[i].size(), where + ": TP+FN != labels");
      c.expect(r.tp() + r.fp() == kept, where + ": TP+FP != filtered detections");
      std::set<std::size_t> used;
      for (const auto& v : r.detections) {
        if (!v.label) continue;
        c.expect(used.insert(*v.label).second, where + ": label matched twice");
        c.expect(v.true_positive && r.label_match[*v.label] == v.detection, where + ": inconsistent match");
      }
      ++images;
    }
  }
  return std::to_string(images) + " images over 500 instances";
}

std::string planner(Check& c) {
  const Polygon area{{-3000, -4000}, {3200, -3500}, {2600, 4200}, {-500, 3100}, {-3300, 900}};
  double lo = 1.0;
  double hi = 0.0;
  double shortest = 1e300;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    PlanRequest req;
    req.study_area = area;
    req.origin = {-34.0, -58.9};
    req.swath_m = ground_swath(phantom(), 45.0);
    req.seed = seed;
    req.max_route_length_m = 20000;
    req.home = Point2(0, -4100);
    const auto plan = make_plan(req);
    double max_single = 0.0;
    for (const auto& t : plan.transects) {
      if (t.kind != TransectKind::primary) continue;
      shortest = std::min(shortest, t.length_m);
      c.expect(t.length_m >= 760.0, "seed " + std::to_string(seed) + " primary " + fmt("%.1f m", t.length_m));
      max_single = std::max(max_single, t.length_m * req.swath_m / plan.study_area_m2);
    }
    const double cov = plan.achieved_coverage;
    lo = std::min(lo, cov);
    hi = std::max(hi, cov);
    c.expect(cov >= 0.10 && cov < 0.10 + max_single, "seed " + std::to_string(seed) + " coverage " + fmt("%.6f", cov));
    const auto again = plan_to_json(make_plan(req)).dump();
    c.expect(plan_to_json(plan).dump() == again, "seed " + std::to_string(seed) + " plan.json differs");
  }
  return "100 seeds, coverage " + fmt("%.5f", lo) + ".." + fmt("%.5f", hi) + ", shortest primary " +
         fmt("%.1f m", shortest) + ", byte-identical reruns";
}

std::string splits(Check& c) {
  const auto ds = make_reference_dataset();
  const Manifest m(ds.records);
  const auto s = make_splits(m, ds.labels, SplitSpec::reference(), 42);
  const SplitCounts expected[3] = {{140, 54, 3, 575}, {46, 17, 0, 575}, {46, 17, 0, 575}};
  std::ostringstream got;
  for (Split sp : kAllSplits) {
    got << (sp == Split::train ? "" : ", ") << to_string(sp);
    for (Category cat : kAllCategories) {
      const auto n = s[sp].ids(cat).size();
      got << (cat == Category::deer ? " " : "/") << n;
      c.expect(n == expected[static_cast<int>(sp)][cat],
               std::string(to_string(sp)) + " " + std::string(to_string(cat)) + " = " + std::to_string(n));
    }
  }
  try {
    check_disjoint(s);
  } catch (const std::exception& e) {
    c.expect(false, e.what());
  }
  return got.str() + " (deer/cow/other/empty), disjoint";
}

std::string census(Check& c) {
  std::ostringstream out;
  for (int k : {0, 1, 25, 200}) {
    ScenarioSpec spec;
    spec.seed = 7 + static_cast<std::uint64_t>(k);
    spec.deer = k;
    if (k > 25) {
      spec.area_ew_m = spec.area_ns_m = 10000.0;
      spec.max_route_length_m = 100000.0;
    }
    const auto s = generate(spec);
    std::size_t duplicated = 0;
    for (const auto& a : s.animals) duplicated += a.image_ids.size() > 1;
    if (k >= 25) c.expect(duplicated > 0, "K=" + std::to_string(k) + ": no overlap duplicates");

    const Manifest manifest(s.records);
    const auto res = run_census(s.reviews, manifest, default_cameras(), s.plan);
    c.expect(res.individuals.size() == static_cast<std::size_t>(k),
             "K=" + std::to_string(k) + " counted " + std::to_string(res.individuals.size()));
    const double density = static_cast<double>(k) / (s.plan.surveyed_area_m2() / 1e6);
    c.expect(res.estimate.density_per_km2 == density, "K=" + std::to_string(k) + " density mismatch");

    const CensusOptions opt;
    const auto reference = dedup(res.counted, opt.dedup_radius_m, opt.time_window_s);
    Rng rng(spec.seed);
    for (int p = 0; p < 20; ++p) {
      auto shuffled = res.counted;
      rng.shuffle(std::span<ConfirmedSighting>(shuffled));
      const auto again = dedup(shuffled, opt.dedup_radius_m, opt.time_window_s);
      bool same = again.size() == reference.size();
      for (std::size_t i = 0; same && i < again.size(); ++i) {
        same = again[i].individual_id == reference[i].individual_id && again[i].members == reference[i].members &&
               again[i].representative == reference[i].representative;
      }
      c.expect(same, "K=" + std::to_string(k) + " permutation changed the result");
    }
    out << (k == 0 ? "" : ", ") << "K=" << k << " -> " << res.individuals.size() << " (" << res.counted.size()
        << " sightings)";
  }
  return out.str() + ", density exact, 20 permutations each";
}

std::string review(Check& c) {
  // Replay equality over randomized histories.
  std::size_t events = 0;
  std::size_t audited = 0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    FakeClock clock;
    ReviewService svc(clock.options());
    Rng rng(seed);
    drive_random(svc, clock, rng, 1000);
    const auto log = svc.events();
    events += log.size();
    c.expect(log.size() >= 1000, "short log");
    const auto replayed = ReviewService::replay(parse_event_log(event_log_to_jsonl(log)));
    c.expect(replayed->state_json().dump() == svc.state_json().dump(), "seed " + std::to_string(seed) + " replay differs");

    // Census eligibility, decided by reconciliation on each task alone.
    const auto reviews = svc.census_reviews();
    for (std::size_t i = 0; i < reviews.size(); ++i) {
      auto rec = records(static_cast<int>(reviews.size()))[i];
      rec.census_eligible = true;
      rec.pose = FlightPosed{{-34.0, -58.9}, 45.0, 0.0, 1.0e9};
      bool eligible = true;
      try {
        reconcile({reviews[i]}, Manifest({rec}), default_cameras(), {-34.0, -58.9});
      } catch (const IncompleteReview&) {
        eligible = false;
      } catch (const ValidationError&) {
        eligible = false;
      }
      if (!eligible) continue;
      ++audited;
      const auto& r = reviews[i];
      std::set<std::string> observers;
      for (const auto& v : r.reviews) observers.insert(v.observer_id);
      c.expect(r.adjudication.has_value() || observers.size() >= 2,
               reviews[i].image_id + " eligible with " + std::to_string(observers.size()) + " observer(s)");
    }
  }

  // Interleaving harness: observers race for leases on a shared service.
  std::size_t overlaps = 0;
  std::size_t leases = 0;
  for (int round = 0; round < 50; ++round) {
    FakeClock clock;
    ReviewService svc(clock.options());
    svc.create_tasks(records(40));
    constexpr int kObservers = 8;
    std::atomic<bool> go{false};
    std::vector<std::thread> threads;
    for (int o = 0; o < kObservers; ++o) {
      threads.emplace_back([&, o] {
        while (!go) std::this_thread::yield();
        const std::string id = "obs" + std::to_string(o);
        for (int k = 0; k < 10; ++k) {
          const auto t = svc.lease_next(id);
          if (!t) break;
          std::this_thread::yield();
          try {
            svc.submit_verdict(t->image_id, empty_verdict(id));
          } catch (const StateError&) {
          }
        }
      });
    }
    go = true;
    for (auto& t : threads) t.join();
    const auto log = svc.events();
    overlaps += lease_overlaps(log);
    leases += static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](const auto& e) { return e.kind == "leased"; }));
    try {
      ReviewService::replay(log);
    } catch (const std::exception& e) {
      c.expect(false, std::string("concurrent log does not replay: ") + e.what());
    }
  }
  c.expect(overlaps == 0, std::to_string(overlaps) + " double leases");
  return std::to_string(events) + " events replayed over 5 histories, " + std::to_string(audited) +
         " eligible tasks audited, " + std::to_string(leases) + " concurrent leases, 0 overlapping";
}

std::string scale(Check& c) {
  // The fixture is built up front; only the pipeline is timed.
  ScenarioSpec spec;
  spec.seed = 39798;
  spec.deer = 231;
  spec.area_ew_m = spec.area_ns_m = 28500.0;
  spec.max_route_length_m = 100000.0;
  const auto dir = fs::temp_directory_path() / "wildcensus_acceptance_scale";
  fs::remove_all(dir);
  {
    const auto s = generate(spec);
    write_survey(dir.string(), s, nlohmann::ordered_json::object());
  }
  const unsigned threads = std::clamp(std::thread::hardware_concurrency(), 1u, 4u);
  const auto t0 = Clock::now();

  // ingest
  const auto& cameras = default_cameras();
  const auto manifest = load_manifest((dir / "manifest.jsonl").string());
  const auto labels = load_labels((dir / "labels.jsonl").string(), manifest, cameras);
  const auto detections = load_detections((dir / "detections.jsonl").string(), manifest, cameras);
  const auto per_class = images_per_class(labels);
  c.expect(manifest.size() >= 39798, "only " + std::to_string(manifest.size()) + " images");

  // eval, with its report files
  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const auto& r : manifest.records()) ids.push_back(r.image_id);
  const auto images = group_by_image(ids, detections, labels);
  EvalOptions opt;
  opt.threads = threads;
  const auto report = evaluate(images, opt);
  write_eval_outputs((dir / "eval").string(), report, nlohmann::ordered_json::object());

  // sweep
  const auto sweep = sweep_confidence(images, 0.10, default_sweep_grid(), {AnimalClass::deer}, threads);
  write_file((dir / "sweep.csv").string(), sweep_csv(sweep));

  // census from the event log on disk
  const auto plan = load_plan((dir / "plan.json").string());
  const auto svc = ReviewService::replay(load_event_log((dir / "review" / "events.jsonl").string()));
  const auto res = run_census(svc->census_reviews(), manifest, cameras, plan);
  write_json_file((dir / "census.json").string(), census_json(res, CensusOptions{}));

  const double t = seconds_since(t0);
  c.expect(t < 60.0, "runtime " + fmt("%.1f s", t));
  c.expect(res.individuals.size() == 231, "census counted " + std::to_string(res.individuals.size()));
  fs::remove_all(dir);
  return std::to_string(manifest.size()) + " images, " + std::to_string(labels.size()) + " labels on " +
         std::to_string(per_class.count(AnimalClass::deer) ? per_class.at(AnimalClass::deer) : 0) + " deer images, " +
         std::to_string(detections.size()) + " detections, mAP " + fmt("%.3f", report.map) + ", " +
         std::to_string(res.individuals.size()) + " individuals, " + fmt("%.2f s", t) + " on " +
         std::to_string(threads) + " thread(s)";
}

}  // namespace

int main() {
  criterion("geometry", geometry);
  criterion("ap-oracle", ap_oracle);
  criterion("matching", matching);
  criterion("planner", planner);
  criterion("splits", splits);
  criterion("census", census);
  criterion("review-service", review);
  criterion("scale", scale);
  std::printf("%d of 8 criteria failed\n", failed);
  return failed;
}
