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

// wildcensus: plan -> ingest -> eval/sweep -> census -> serve -> report,
// plus synth (fixtures) and infer (detections contract).
//
// Exit codes: 0 success, 1 invalid input, 2 I/O failure.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wildcensus/census.hpp"
#include "wildcensus/datastore.hpp"
#include "wildcensus/error.hpp"
#include "wildcensus/evaluation.hpp"
#include "wildcensus/io.hpp"
#include "wildcensus/report.hpp"
#include "wildcensus/review_service.hpp"
#include "wildcensus/survey_planner.hpp"
#include "wildcensus/synthetic.hpp"
// httplib pulls in <resolv.h>, whose _res macro breaks Eigen; keep it last.
#include "wildcensus/review_http.hpp"

namespace wc = wildcensus;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string env_store() {
  const char* s = std::getenv("WILDCENSUS_STORE");
  return s && *s ? s : "";
}

/// Output directory: --out, else $WILDCENSUS_STORE, else the working directory.
std::string out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  const auto store = env_store();
  return store.empty() ? "." : store;
}

std::string require_store(const std::string& flag) {
  if (!flag.empty()) return flag;
  const auto store = env_store();
  if (store.empty()) throw wc::InvalidInput("--store not given and WILDCENSUS_STORE is not set");
  return store;
}

wc::CameraRegistry cameras_from(const std::string& path) {
  return path.empty() ? wc::default_cameras() : wc::load_camera_config(path);
}

ojson base_config(const std::string& subcommand) {
  ojson c;
  c["tool"] = "wildcensus";
  c["version"] = kVersion;
  c["subcommand"] = subcommand;
  return c;
}

/// "start:step:end" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw wc::InvalidInput("bad number '" + s + "' in --grid");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::stringstream ss(text);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) || c.find(':') != std::string::npos) {
      throw wc::InvalidInput("--grid range must be start:step:end");
    }
    const double lo = num(a), step = num(b), hi = num(c);
    if (!(step > 0.0) || hi < lo) throw wc::InvalidInput("--grid range needs step > 0 and end >= start");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    if (n > 100000) throw wc::InvalidInput("--grid has too many points");
    for (long i = 0; i <= n; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * step));
  } else {
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(num(item));
  }
  if (out.empty()) throw wc::InvalidInput("--grid is empty");
  for (double v : out) {
    if (!(v >= 0.0 && v <= 1.0)) throw wc::InvalidInput("--grid values must lie in [0, 1]");
  }
  return out;
}

std::vector<wc::AnimalClass> parse_classes(const std::string& text) {
  std::vector<wc::AnimalClass> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(wc::parse_animal_class(item));
  if (out.empty()) throw wc::InvalidInput("--classes is empty");
  return out;
}

std::pair<double, double> parse_pair(const std::string& text, char sep, const char* flag) {
  const auto pos = text.find(sep);
  try {
    if (pos == std::string::npos) throw std::invalid_argument(text);
    std::size_t u1 = 0, u2 = 0;
    const std::string a = text.substr(0, pos), b = text.substr(pos + 1);
    const double x = std::stod(a, &u1), y = std::stod(b, &u2);
    if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument(text);
    return {x, y};
  } catch (const std::exception&) {
    throw wc::InvalidInput(std::string(flag) + " expects A" + sep + "B, got '" + text + "'");
  }
}

// --- plan ------------------------------------------------------------------

struct PlanArgs {
  std::string area, cameras, camera = "phantom4pro", grid = "1500x100", home, out;
  double coverage = 0.10, min_transect = 760.0, altitude = 45.0, max_route = 10000.0, speed = 6.5;
  double start_utc = 0.0, turnaround = 600.0, gap = 1500.0, truncation = 100.0;
  std::uint64_t seed = 0;
};

/// Demo area used when no --area is given: 5 km x 5 km about this origin.
constexpr wc::Geodetic kDemoOrigin{-34.0, -58.9};
constexpr double kDemoSide = 5000.0;

int run_plan(const PlanArgs& a) {
  auto config = base_config("plan");
  wc::PlanRequest req;
  const auto [ns, ew] = parse_pair(a.grid, 'x', "--grid");
  req.grid.cell_ns_m = ns;
  req.grid.cell_ew_m = ew;
  if (a.area.empty()) {
    req.origin = kDemoOrigin;
    const double h = kDemoSide / 2;
    req.study_area = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  } else {
    const auto ring = wc::load_study_area_geojson(a.area);
    req.origin = wc::ring_origin(ring);
    req.study_area = wc::project_ring(req.origin, ring);
  }
  if (!a.home.empty()) {
    const auto [lat, lon] = parse_pair(a.home, ',', "--home");
    req.home = wc::enu_project(req.origin, {lat, lon});
  }
  const auto cams = cameras_from(a.cameras);
  req.swath_m = wc::ground_swath(wc::find_camera(cams, a.camera), a.altitude);
  req.min_length_m = a.min_transect;
  req.coverage_target = a.coverage;
  req.seed = a.seed;
  req.max_route_length_m = a.max_route;
  req.gap_threshold_m = a.gap;
  req.truncation_m = a.truncation;
  req.start_utc = a.start_utc;
  req.speed_mps = a.speed;
  req.turnaround_s = a.turnaround;

  config["args"] = {{"area", a.area.empty() ? "built-in 5 km demo square" : a.area},
                    {"coverage", a.coverage}, {"grid", a.grid}, {"min_transect_m", a.min_transect},
                    {"seed", a.seed}, {"camera", a.camera}, {"cameras", a.cameras}, {"altitude_m", a.altitude},
                    {"swath_m", req.swath_m}, {"max_route_m", a.max_route}, {"speed_mps", a.speed},
                    {"start_utc", a.start_utc}, {"turnaround_s", a.turnaround}, {"gap_m", a.gap},
                    {"truncation_m", a.truncation}, {"home", a.home}};
  const auto plan = wc::make_plan(req);
  const auto dir = out_dir(a.out);
  wc::write_json_file(wc::join_path(dir, "plan.json"), wc::plan_to_json(plan, config));
  const auto violations = wc::validate_schedule(plan);
  std::cout << "plan: " << plan.transects.size() << " transects, " << plan.routes.size() << " routes, coverage "
            << wc::format_number(plan.achieved_coverage) << " -> " << wc::join_path(dir, "plan.json") << "\n";
  for (const auto& v : violations) std::cerr << "warning: " << v.message << "\n";
  return 0;
}

// --- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string manifest, labels, detections, cameras, export_dir, out;
  bool splits = false, reuse_empty = false;
  std::uint64_t seed = 0;
};

int run_ingest(const IngestArgs& a) {
  auto config = base_config("ingest");
  config["args"] = {{"manifest", a.manifest}, {"labels", a.labels}, {"detections", a.detections},
                    {"cameras", a.cameras},   {"splits", a.splits}, {"seed", a.seed},
                    {"reuse_empty", a.reuse_empty}, {"export", a.export_dir}};
  const auto cams = cameras_from(a.cameras);
  const auto manifest = wc::load_manifest(a.manifest);
  ojson summary;
  summary["schema"] = "wildcensus-ingest/1";
  summary["config"] = config;
  std::size_t eligible = 0;
  std::set<std::int64_t> transects;
  for (const auto& r : manifest.records()) {
    eligible += r.census_eligible;
    transects.insert(r.transect_id);
  }
  summary["images"] = manifest.size();
  summary["census_eligible"] = eligible;
  summary["transects"] = transects.size();
  std::vector<wc::GroundTruthLabel> labels;
  if (!a.labels.empty()) {
    labels = wc::load_labels(a.labels, manifest, cams);
    summary["labels"] = labels.size();
    ojson per = ojson::object();
    for (const auto& [cls, n] : wc::images_per_class(labels)) per[std::string(wc::to_string(cls))] = n;
    summary["images_per_class"] = per;
  }
  if (!a.detections.empty()) summary["detections"] = wc::load_detections(a.detections, manifest, cams).size();
  const auto dir = out_dir(a.out);
  if (a.splits || !a.export_dir.empty()) {
    if (a.labels.empty()) throw wc::InvalidInput("--splits and --export need --labels");
    auto spec = wc::SplitSpec::reference();
    spec.reuse_empty = a.reuse_empty;
    const auto splits = wc::make_splits(manifest, labels, spec, a.seed);
    wc::check_disjoint(splits);
    auto doc = wc::splits_to_json(splits);
    doc["config"] = config;
    wc::write_json_file(wc::join_path(dir, "splits.json"), doc);
    if (!a.export_dir.empty()) {
      ojson exported = ojson::object();
      for (auto s : wc::kAllSplits) {
        const auto name = std::string(wc::to_string(s));
        const auto sum = wc::export_training_set(splits[s], labels, manifest, cams, wc::join_path(a.export_dir, name));
        exported[name] = {{"annotation_files", sum.annotation_files}, {"instances", sum.instances}};
      }
      summary["export"] = exported;
    }
  }
  wc::write_json_file(wc::join_path(dir, "ingest.json"), summary);
  std::cout << "ingest: " << manifest.size() << " images valid -> " << wc::join_path(dir, "ingest.json") << "\n";
  return 0;
}

// --- eval / sweep ----------------------------------------------------------

struct EvalArgs {
  std::string manifest, labels, detections, cameras, grid = "0:0.005:1", classes = "deer", out;
  double iou = 0.10;
  std::optional<double> conf;
  unsigned threads = 1;
};

struct Loaded {
  wc::ImageSet images;
  ojson config;
};

Loaded load_eval(const EvalArgs& a, const std::string& subcommand) {
  Loaded l;
  l.config = base_config(subcommand);
  l.config["args"] = {{"manifest", a.manifest}, {"labels", a.labels}, {"detections", a.detections},
                      {"cameras", a.cameras},   {"iou", a.iou},       {"grid", a.grid},
                      {"classes", a.classes}};
  if (a.conf) l.config["args"]["conf"] = *a.conf;
  // Thread count is recorded but cannot change any output.
  const auto cams = cameras_from(a.cameras);
  const auto manifest = wc::load_manifest(a.manifest);
  const auto labels = wc::load_labels(a.labels, manifest, cams);
  const auto dets = wc::load_detections(a.detections, manifest, cams);
  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const auto& r : manifest.records()) ids.push_back(r.image_id);
  l.images = wc::group_by_image(ids, dets, labels);
  return l;
}

void check_eval_args(const EvalArgs& a) {
  if (!(a.iou > 0.0 && a.iou <= 1.0)) throw wc::InvalidInput("--iou must lie in (0, 1]");
  if (a.conf && !(*a.conf >= 0.0 && *a.conf <= 1.0)) throw wc::InvalidInput("--conf must lie in [0, 1]");
  if (a.threads == 0) throw wc::InvalidInput("--threads must be at least 1");
  parse_grid(a.grid);
  parse_classes(a.classes);
}

int run_eval(const EvalArgs& a) {
  check_eval_args(a);
  const auto l = load_eval(a, "eval");
  wc::EvalOptions opt;
  opt.iou_threshold = a.iou;
  opt.confidence_threshold = a.conf;
  opt.grid = parse_grid(a.grid);
  opt.classes = parse_classes(a.classes);
  opt.threads = a.threads;
  const auto report = wc::evaluate(l.images, opt);
  const auto dir = out_dir(a.out);
  wc::write_eval_outputs(dir, report, l.config);
  wc::render_report(dir, dir);
  std::cout << "eval: " << report.images << " images, tau " << wc::format_number(report.confidence_threshold)
            << ", mAP " << wc::format_number(report.map) << " -> " << wc::join_path(dir, "report.json") << "\n";
  return 0;
}

int run_sweep(const EvalArgs& a) {
  check_eval_args(a);
  const auto l = load_eval(a, "sweep");
  const auto sweep = wc::sweep_confidence(l.images, a.iou, parse_grid(a.grid), parse_classes(a.classes), a.threads);
  const auto dir = out_dir(a.out);
  wc::write_file(wc::join_path(dir, "sweep.csv"), wc::sweep_csv(sweep));
  ojson doc;
  doc["schema"] = "wildcensus-sweep/1";
  doc["config"] = l.config;
  doc["optimal_confidence"] = sweep.optimal_confidence;
  doc["optimal_ap"] = sweep.optimal_ap;
  ojson prof = ojson::array();
  for (const auto& p : sweep.profile) prof.push_back({{"tau", p.tau}, {"ap", p.ap}});
  doc["profile"] = std::move(prof);
  wc::write_json_file(wc::join_path(dir, "sweep.json"), doc);
  wc::write_file(wc::join_path(dir, "sweep.svg"), wc::svg_sweep(sweep.profile));
  std::cout << "sweep: optimal tau " << wc::format_number(sweep.optimal_confidence) << ", AP "
            << wc::format_number(sweep.optimal_ap) << " -> " << wc::join_path(dir, "sweep.json") << "\n";
  return 0;
}

// --- census ----------------------------------------------------------------

struct CensusArgs {
  std::string manifest, plan, store, cameras, out;
  double radius = 20.0, window = 3.0 * 3600.0, iou = 0.10;
};

/// Read-only view of a review store: snapshot plus tail, or the full log.
std::unique_ptr<wc::ReviewService> open_store_readonly(const std::string& dir) {
  const auto events = wc::join_path(dir, "events.jsonl");
  if (!fs::exists(events)) throw wc::IoError("no events.jsonl in review store '" + dir + "'");
  const auto log = wc::load_event_log(events);
  const auto snap = wc::join_path(dir, "snapshot.json");
  if (fs::exists(snap)) return wc::ReviewService::restore(wc::read_json_file(snap), log);
  return wc::ReviewService::replay(log);
}

int run_census(const CensusArgs& a) {
  const auto store = require_store(a.store);
  auto config = base_config("census");
  config["args"] = {{"manifest", a.manifest}, {"plan", a.plan},           {"store", store},
                    {"cameras", a.cameras},   {"dedup_radius_m", a.radius}, {"time_window_s", a.window},
                    {"iou", a.iou}};
  wc::CensusOptions opt;
  opt.dedup_radius_m = a.radius;
  opt.time_window_s = a.window;
  opt.iou_threshold = a.iou;
  const auto cams = cameras_from(a.cameras);
  const auto manifest = wc::load_manifest(a.manifest);
  const auto plan = wc::load_plan(a.plan);
  const auto svc = open_store_readonly(store);
  const auto result = wc::run_census(svc->census_reviews(), manifest, cams, plan, opt);
  const auto dir = out_dir(a.out);
  wc::write_json_file(wc::join_path(dir, "census.json"), wc::census_json(result, opt, config));
  wc::write_file(wc::join_path(dir, "conflicts.jsonl"), wc::conflicts_jsonl(result.reconciliation));
  const auto& e = result.estimate;
  std::cout << "census: " << e.unique_count << " individuals, density " << wc::format_number(e.density_per_km2)
            << "/km2, abundance " << wc::format_number(e.abundance) << ", " << result.reconciliation.conflicts.size()
            << " conflict images -> " << wc::join_path(dir, "census.json") << "\n";
  return 0;
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string store, host = "127.0.0.1", images = ".", manifest, detections, cameras;
  int port = 8080;
  double lease_ttl = 900.0, candidate_tau = 0.26;
  std::uint64_t snapshot_every = 1000;
};

wc::ReviewHttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeArgs& a) {
  const auto store_dir = require_store(a.store);
  if (a.port < 0 || a.port > 65535) throw wc::InvalidInput("--port must lie in [0, 65535]");
  if (!a.detections.empty() && a.manifest.empty()) throw wc::InvalidInput("--detections needs --manifest");
  wc::ReviewOptions opt;
  opt.lease_ttl_s = a.lease_ttl;
  wc::ReviewStore store(store_dir, opt, a.snapshot_every);
  auto& svc = store.service();
  if (!a.manifest.empty()) {
    const auto manifest = wc::load_manifest(a.manifest);
    const bool fresh = svc.last_seq() == 0;
    const auto created = svc.create_tasks(manifest.records());
    // Candidates go in once, before any review can exist.
    if (fresh && !a.detections.empty()) {
      svc.seed_candidates(wc::load_detections(a.detections, manifest, cameras_from(a.cameras)), a.candidate_tau);
    }
    std::cout << "serve: " << created << " new tasks\n";
  }
  wc::ReviewHttpServer server(svc, a.images);
  const int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serve: listening on http://" << a.host << ":" << port << "\n" << std::flush;
  server.listen();
  g_server = nullptr;
  store.write_snapshot();
  return 0;
}

// --- report / synth / infer ------------------------------------------------

int run_report(const std::string& from, const std::string& out) {
  const auto in = out_dir(from);
  const auto dir = out.empty() ? in : out;
  for (const auto& f : wc::render_report(in, dir)) std::cout << "report: " << wc::join_path(dir, f) << "\n";
  return 0;
}

int run_synth(const std::string& spec_path, std::optional<std::uint64_t> seed, const std::string& out) {
  auto config = base_config("synth");
  config["args"] = {{"spec", spec_path}};
  wc::ScenarioSpec spec = spec_path.empty() ? wc::ScenarioSpec{} : wc::scenario_from_json(wc::read_json_file(spec_path));
  if (seed) {
    spec.seed = *seed;
    config["args"]["seed"] = *seed;
  }
  const auto survey = wc::generate(spec);
  const auto dir = out_dir(out);
  wc::write_survey(dir, survey, config);
  std::cout << "synth: " << survey.records.size() << " images, " << survey.planted(wc::AnimalClass::deer)
            << " deer -> " << dir << "\n";
  return 0;
}

struct InferArgs {
  std::string weights, manifest, out, cameras;
  int imgsz = 1280;
  double floor = 0.01;
};

/// The detector itself lives outside this build. A `.jsonl` weights file is
/// taken as recorded model output and replayed through the same contract:
/// validated against the manifest, floored, and written in a canonical order.
int run_infer(const InferArgs& a) {
  if (a.imgsz <= 0) throw wc::InvalidInput("--imgsz must be positive");
  if (!(a.floor >= 0.0 && a.floor < 1.0)) throw wc::InvalidInput("--conf-floor must lie in [0, 1)");
  if (!fs::exists(a.weights)) throw wc::IoError("cannot open weights '" + a.weights + "'");
  const auto manifest = wc::load_manifest(a.manifest);
  if (fs::path(a.weights).extension() != ".jsonl") {
    throw wc::IoError("no model runtime in this build for '" + a.weights +
                      "'; run the Python adapter or pass recorded detections (.jsonl)");
  }
  auto dets = wc::load_detections(a.weights, manifest, cameras_from(a.cameras));
  std::erase_if(dets, [&](const wc::Detection& d) { return d.confidence < a.floor; });
  std::stable_sort(dets.begin(), dets.end(), [&](const auto& x, const auto& y) {
    const auto ix = manifest.index_of(x.image_id), iy = manifest.index_of(y.image_id);
    if (ix != iy) return ix < iy;
    return x.confidence > y.confidence;
  });
  wc::write_file(a.out, wc::detections_to_jsonl(dets));
  std::cout << "infer: " << dets.size() << " detections -> " << a.out << "\n";
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"wildcensus: UAV wildlife census toolkit", "wildcensus"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "plan strip transects and routes; writes plan.json");
  plan->add_option("--area", pa.area, "study area GeoJSON (default: 5 km demo square)");
  plan->add_option("--coverage", pa.coverage, "coverage target")->capture_default_str();
  plan->add_option("--grid", pa.grid, "cell size NSxEW in meters")->capture_default_str();
  plan->add_option("--min-transect", pa.min_transect, "minimum transect length (m)")->capture_default_str();
  plan->add_option("--seed", pa.seed, "selection seed")->capture_default_str();
  plan->add_option("--camera", pa.camera, "camera id")->capture_default_str();
  plan->add_option("--cameras", pa.cameras, "camera config file");
  plan->add_option("--altitude", pa.altitude, "flight altitude above ground (m)")->capture_default_str();
  plan->add_option("--max-route", pa.max_route, "route length budget (m)")->capture_default_str();
  plan->add_option("--speed", pa.speed, "ground speed (m/s)")->capture_default_str();
  plan->add_option("--start-utc", pa.start_utc, "first route start (s since epoch)")->capture_default_str();
  plan->add_option("--turnaround", pa.turnaround, "pause between routes (s)")->capture_default_str();
  plan->add_option("--gap", pa.gap, "leg gap that triggers a connector (m)")->capture_default_str();
  plan->add_option("--truncation", pa.truncation, "connector end truncation (m)")->capture_default_str();
  plan->add_option("--home", pa.home, "launch point LAT,LON (default: area origin)");
  plan->add_option("--out", pa.out, "output directory");

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "validate manifest, labels and detections; optional splits/export");
  ingest->add_option("--manifest", ia.manifest, "manifest.jsonl")->required();
  ingest->add_option("--labels", ia.labels, "labels.jsonl");
  ingest->add_option("--detections", ia.detections, "detections.jsonl");
  ingest->add_option("--cameras", ia.cameras, "camera config file");
  ingest->add_flag("--splits", ia.splits, "write splits.json with the reference split counts");
  ingest->add_flag("--reuse-empty", ia.reuse_empty, "let splits share empty images");
  ingest->add_option("--seed", ia.seed, "split seed")->capture_default_str();
  ingest->add_option("--export", ia.export_dir, "training export directory");
  ingest->add_option("--out", ia.out, "output directory");

  EvalArgs ea;
  auto add_eval = [&](CLI::App* sub, bool with_conf) {
    sub->add_option("--manifest", ea.manifest, "manifest.jsonl")->required();
    sub->add_option("--labels", ea.labels, "labels.jsonl")->required();
    sub->add_option("--detections", ea.detections, "detections.jsonl")->required();
    sub->add_option("--cameras", ea.cameras, "camera config file");
    sub->add_option("--iou", ea.iou, "IoU match threshold")->capture_default_str();
    sub->add_option("--grid", ea.grid, "thresholds, start:step:end or a,b,c")->capture_default_str();
    sub->add_option("--classes", ea.classes, "classes averaged into mAP")->capture_default_str();
    sub->add_option("--threads", ea.threads, "worker threads")->capture_default_str();
    if (with_conf) sub->add_option("--conf", ea.conf, "confidence threshold (default: sweep optimum)");
    sub->add_option("--out", ea.out, "output directory");
  };
  auto* eval = app.add_subcommand("eval", "match, PR/AP, sweep and count confusion; writes report files");
  add_eval(eval, true);
  auto* sweep = app.add_subcommand("sweep", "AP at each confidence threshold; writes sweep.csv/json");
  add_eval(sweep, false);

  CensusArgs ca;
  auto* census = app.add_subcommand("census", "reconcile reviews, dedup sightings, estimate density");
  census->add_option("--manifest", ca.manifest, "manifest.jsonl")->required();
  census->add_option("--plan", ca.plan, "plan.json")->required();
  census->add_option("--store", ca.store, "review store directory (default: $WILDCENSUS_STORE)");
  census->add_option("--cameras", ca.cameras, "camera config file");
  census->add_option("--dedup-radius", ca.radius, "dedup radius (m)")->capture_default_str();
  census->add_option("--time-window", ca.window, "dedup time window (s)")->capture_default_str();
  census->add_option("--iou", ca.iou, "cross-observer IoU threshold")->capture_default_str();
  census->add_option("--out", ca.out, "output directory");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "run the review service over HTTP");
  serve->add_option("--store", sa.store, "review store directory (default: $WILDCENSUS_STORE)");
  serve->add_option("--host", sa.host, "bind address")->capture_default_str();
  serve->add_option("--port", sa.port, "port (0 picks a free one)")->capture_default_str();
  serve->add_option("--lease-ttl", sa.lease_ttl, "lease lifetime (s)")->capture_default_str();
  serve->add_option("--images", sa.images, "image root directory")->capture_default_str();
  serve->add_option("--manifest", sa.manifest, "create tasks from this manifest");
  serve->add_option("--detections", sa.detections, "seed model candidates (new stores only)");
  serve->add_option("--candidate-tau", sa.candidate_tau, "candidate confidence threshold")->capture_default_str();
  serve->add_option("--cameras", sa.cameras, "camera config file");
  serve->add_option("--snapshot-every", sa.snapshot_every, "events between snapshots (0: never)")->capture_default_str();

  std::string report_from, report_out;
  auto* report = app.add_subcommand("report", "render SVG plots from report CSVs");
  report->add_option("--from", report_from, "directory with pr_curve.csv, sweep.csv, confusion.csv");
  report->add_option("--out", report_out, "output directory (default: --from)");

  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate a synthetic survey with known ground truth");
  synth->add_option("--spec", synth_spec, "scenario JSON (default: built-in scenario)");
  synth->add_option("--seed", synth_seed, "override the scenario seed");
  synth->add_option("--out", synth_out, "output directory");

  InferArgs fa;
  auto* infer = app.add_subcommand("infer", "detections.jsonl from a model (recorded .jsonl replay only)");
  infer->add_option("--weights", fa.weights, "model weights, or recorded detections .jsonl")->required();
  infer->add_option("--manifest", fa.manifest, "manifest.jsonl")->required();
  infer->add_option("--out", fa.out, "detections.jsonl to write")->required();
  infer->add_option("--imgsz", fa.imgsz, "model input size")->capture_default_str();
  infer->add_option("--conf-floor", fa.floor, "lowest confidence emitted")->capture_default_str();
  infer->add_option("--cameras", fa.cameras, "camera config file");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 1;
  }

  if (plan->parsed()) return run_plan(pa);
  if (ingest->parsed()) return run_ingest(ia);
  if (eval->parsed()) return run_eval(ea);
  if (sweep->parsed()) return run_sweep(ea);
  if (census->parsed()) return run_census(ca);
  if (serve->parsed()) return run_serve(sa);
  if (report->parsed()) return run_report(report_from, report_out);
  if (synth->parsed()) return run_synth(synth_spec, synth_seed, synth_out);
  if (infer->parsed()) return run_infer(fa);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const wc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const wc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
