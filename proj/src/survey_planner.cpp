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

#include "wildcensus/survey_planner.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "wildcensus/io.hpp"
#include "wildcensus/random.hpp"

namespace wildcensus {

namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double v = cross(b - a, c - a);
  return (v > 0) - (v < 0);
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2)) ||
         (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double segment_distance(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

const Point2& entry_of(const Transect& t, bool reversed) { return reversed ? t.end : t.start; }
const Point2& exit_of(const Transect& t, bool reversed) { return reversed ? t.start : t.end; }

std::map<int, const Transect*> index_by_id(const std::vector<Transect>& transects) {
  std::map<int, const Transect*> by_id;
  for (const auto& t : transects) {
    if (!by_id.emplace(t.id, &t).second) {
      throw InvalidInput("duplicate transect id " + std::to_string(t.id));
    }
  }
  return by_id;
}

const Transect& lookup(const std::map<int, const Transect*>& by_id, int id) {
  const auto it = by_id.find(id);
  if (it == by_id.end()) throw InvalidInput("route references unknown transect " + std::to_string(id));
  return *it->second;
}

const char* kind_name(TransectKind k) { return k == TransectKind::primary ? "primary" : "connector"; }

TransectKind parse_kind(const std::string& s) {
  if (s == "primary") return TransectKind::primary;
  if (s == "connector") return TransectKind::connector;
  throw ValidationError("plan: unknown transect kind '" + s + "'");
}

nlohmann::ordered_json xy(const Point2& p) { return nlohmann::ordered_json::array({p.x(), p.y()}); }

Point2 parse_xy(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("plan: expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

double Transect::census_length_m() const {
  if (!census_eligible) return 0.0;
  return std::max(0.0, length_m - 2.0 * truncated_ends_m);
}

std::vector<int> Route::transect_ids() const {
  std::vector<int> ids;
  ids.reserve(legs.size());
  for (const auto& leg : legs) ids.push_back(leg.transect_id);
  return ids;
}

const Transect& SurveyPlan::transect(int id) const {
  for (const auto& t : transects) {
    if (t.id == id) return t;
  }
  throw InvalidInput("plan has no transect " + std::to_string(id));
}

double SurveyPlan::surveyed_area_m2() const {
  double total = 0.0;
  for (const auto& t : transects) total += t.census_length_m() * swath_m;
  return total;
}

double signed_area(const Polygon& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return twice / 2.0;
}

void validate_polygon(const Polygon& poly) {
  if (poly.size() < 3) throw InvalidInput("study area needs at least three vertices");
  for (const auto& p : poly) {
    if (!p.allFinite()) throw InvalidInput("study area has a non-finite vertex");
  }
  if (signed_area(poly) == 0.0) throw InvalidInput("study area has zero area");
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        throw InvalidInput("study area boundary intersects itself");
      }
    }
  }
}

std::vector<Transect> generate_transects(const Polygon& area, const GridSpec& grid,
                                         double min_length_m) {
  validate_polygon(area);
  if (!(grid.cell_ns_m > 0) || !(grid.cell_ew_m > 0)) throw InvalidInput("grid cells must be positive");
  if (!(min_length_m > 0)) throw InvalidInput("minimum transect length must be positive");

  // Grid axes: x along east-west, y along north-south.
  const Matrix2<double> frame = heading_frame(grid.orientation_deg);
  Polygon local;
  local.reserve(area.size());
  for (const auto& p : area) local.push_back(frame.transpose() * p);

  Point2 lo = local.front();
  Point2 hi = local.front();
  for (const auto& p : local) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int columns = static_cast<int>(std::ceil((hi.x() - lo.x()) / grid.cell_ew_m));
  const int rows = static_cast<int>(std::ceil((hi.y() - lo.y()) / grid.cell_ns_m));

  std::vector<Transect> out;
  std::vector<double> crossings;
  for (int c = 0; c < columns; ++c) {
    const double x = lo.x() + grid.cell_ew_m * (c + 0.5);
    crossings.clear();
    for (std::size_t i = 0; i < local.size(); ++i) {
      const Point2& a = local[i];
      const Point2& b = local[(i + 1) % local.size()];
      if ((a.x() <= x) != (b.x() <= x)) {
        crossings.push_back(a.y() + (x - a.x()) * (b.y() - a.y()) / (b.x() - a.x()));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (int r = 0; r < rows; ++r) {
      const double row_lo = lo.y() + grid.cell_ns_m * r;
      const double row_hi = row_lo + grid.cell_ns_m;
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        const double y0 = std::max(crossings[k], row_lo);
        const double y1 = std::min(crossings[k + 1], row_hi);
        if (y1 - y0 < min_length_m) continue;
        Transect t;
        t.id = static_cast<int>(out.size()) + 1;
        t.start = frame * Point2(x, y0);
        t.end = frame * Point2(x, y1);
        t.length_m = y1 - y0;
        t.column = c;
        t.row = r;
        out.push_back(t);
      }
    }
  }
  return out;
}

double coverage_fraction(const std::vector<Transect>& transects, double swath_m,
                         double study_area_m2) {
  double covered = 0.0;
  for (const auto& t : transects) covered += t.length_m * swath_m;
  return covered / study_area_m2;
}

std::vector<Transect> select_transects(const std::vector<Transect>& transects,
                                       double coverage_target, double swath_m,
                                       double study_area_m2, std::uint64_t seed) {
  if (!(coverage_target >= 0.0 && coverage_target <= 1.0)) {
    throw InvalidInput("coverage target must lie in [0, 1]");
  }
  if (!(swath_m > 0) || !(study_area_m2 > 0)) throw InvalidInput("swath and study area must be positive");

  const double needed = coverage_target * study_area_m2;
  std::vector<std::size_t> order(transects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "select_transects"));
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Transect> selected;
  double covered = 0.0;
  for (std::size_t idx : order) {
    if (covered >= needed) break;
    selected.push_back(transects[idx]);
    covered += transects[idx].length_m * swath_m;
  }
  if (covered < needed) {
    throw InvalidInput("insufficient transects: all candidates cover " +
                       std::to_string(covered / study_area_m2) + " of the study area, target " +
                       std::to_string(coverage_target));
  }
  return selected;
}

double route_length(const Route& route, const std::vector<Transect>& transects, const Point2& home) {
  if (route.legs.empty()) return 0.0;
  const auto by_id = index_by_id(transects);
  double total = 0.0;
  Point2 pos = home;
  for (const auto& leg : route.legs) {
    const Transect& t = lookup(by_id, leg.transect_id);
    total += (entry_of(t, leg.reversed) - pos).norm() + t.length_m;
    pos = exit_of(t, leg.reversed);
  }
  return total + (home - pos).norm();
}

std::vector<Route> pack_routes(const std::vector<Transect>& selected, double max_route_length_m,
                               const Point2& home) {
  if (!(max_route_length_m > 0)) throw InvalidInput("route budget must be positive");
  for (const auto& t : selected) {
    const double solo = std::min((t.start - home).norm(), (t.end - home).norm()) + t.length_m +
                        std::max((t.start - home).norm(), (t.end - home).norm());
    if (t.length_m > max_route_length_m || solo > max_route_length_m) {
      throw InvalidInput("transect " + std::to_string(t.id) +
                         " cannot be flown within the route budget of " +
                         std::to_string(max_route_length_m) + " m");
    }
  }

  std::vector<bool> routed(selected.size(), false);
  std::size_t remaining = selected.size();

  // Nearest unrouted transect to `from` and the endpoint to enter it by.
  auto nearest = [&](const Point2& from) {
    std::size_t best = selected.size();
    bool best_rev = false;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (routed[i]) continue;
      const double ds = (selected[i].start - from).norm();
      const double de = (selected[i].end - from).norm();
      const double d = std::min(ds, de);
      if (d < best_d) {
        best_d = d;
        best = i;
        best_rev = de < ds;
      }
    }
    return std::tuple{best, best_rev, best_d};
  };

  std::vector<Route> routes;
  while (remaining > 0) {
    Route route;
    auto [first, rev, d0] = nearest(home);
    const Transect& t0 = selected[first];
    double used = d0 + t0.length_m;
    Point2 pos = exit_of(t0, rev);
    route.legs.push_back({t0.id, rev});
    routed[first] = true;
    --remaining;

    while (remaining > 0) {
      auto [next, next_rev, d] = nearest(pos);
      const Transect& t = selected[next];
      const Point2& out = exit_of(t, next_rev);
      if (used + d + t.length_m + (home - out).norm() > max_route_length_m) break;
      used += d + t.length_m;
      pos = out;
      route.legs.push_back({t.id, next_rev});
      routed[next] = true;
      --remaining;
    }
    route.length_m = used + (home - pos).norm();
    routes.push_back(std::move(route));
  }
  return routes;
}

ConnectedRoutes add_connectors(const std::vector<Route>& routes,
                               const std::vector<Transect>& transects, const GridSpec& grid,
                               const Point2& home, double gap_threshold_m, double truncation_m) {
  if (!(gap_threshold_m >= 0) || !(truncation_m >= 0)) {
    throw InvalidInput("connector gap and truncation must be non-negative");
  }
  ConnectedRoutes out;
  out.transects = transects;
  int next_id = 1;
  for (const auto& t : transects) next_id = std::max(next_id, t.id + 1);

  const Point2 east_west = heading_frame(grid.orientation_deg).col(0);
  const auto by_id = index_by_id(transects);
  for (const auto& route : routes) {
    Route connected;
    for (std::size_t i = 0; i < route.legs.size(); ++i) {
      connected.legs.push_back(route.legs[i]);
      if (i + 1 == route.legs.size()) break;
      const Point2& from = exit_of(lookup(by_id, route.legs[i].transect_id), route.legs[i].reversed);
      const Point2& to = entry_of(lookup(by_id, route.legs[i + 1].transect_id), route.legs[i + 1].reversed);
      if ((to - from).norm() <= gap_threshold_m) continue;
      const double offset = east_west.dot(to - from);
      if (offset == 0.0) continue;
      Transect c;
      c.id = next_id++;
      c.kind = TransectKind::connector;
      c.start = from;
      c.end = from + offset * east_west;
      c.length_m = std::abs(offset);
      c.truncated_ends_m = truncation_m;
      c.census_eligible = c.length_m > 2.0 * truncation_m;
      c.training_included = true;
      out.transects.push_back(c);
      connected.legs.push_back({c.id, false});
    }
    out.routes.push_back(std::move(connected));
  }
  for (auto& r : out.routes) r.length_m = route_length(r, out.transects, home);
  return out;
}

std::vector<RouteSchedule> make_schedule(const std::vector<Route>& routes, double start_utc,
                                         double speed_mps, double turnaround_s) {
  if (!(speed_mps > 0)) throw InvalidInput("flight speed must be positive");
  if (!(turnaround_s >= 0)) throw InvalidInput("turnaround must be non-negative");
  std::vector<RouteSchedule> schedule;
  double t = start_utc;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    schedule.push_back({i, t, speed_mps});
    t += routes[i].length_m / speed_mps + turnaround_s;
  }
  return schedule;
}

double route_separation(const Route& a, const Route& b, const std::vector<Transect>& transects) {
  const auto by_id = index_by_id(transects);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& la : a.legs) {
    const Transect& ta = lookup(by_id, la.transect_id);
    for (const auto& lb : b.legs) {
      const Transect& tb = lookup(by_id, lb.transect_id);
      best = std::min(best, segment_distance(ta.start, ta.end, tb.start, tb.end));
    }
  }
  return best;
}

std::vector<ScheduleViolation> validate_schedule(const SurveyPlan& plan) {
  std::vector<ScheduleViolation> out;
  if (plan.schedule.empty()) return out;

  for (const auto& s : plan.schedule) {
    if (s.route >= plan.routes.size()) throw InvalidInput("schedule references a missing route");
    if (!(s.speed_mps > 0)) throw InvalidInput("scheduled speed must be positive");
  }
  for (std::size_t i = 0; i < plan.routes.size(); ++i) {
    if (plan.max_route_length_m > 0 && plan.routes[i].length_m > plan.max_route_length_m) {
      out.push_back({ScheduleViolation::Kind::route_length, i, i, plan.routes[i].length_m,
                     "route " + std::to_string(i) + " exceeds the length budget"});
    }
  }

  std::vector<RouteSchedule> by_time = plan.schedule;
  std::stable_sort(by_time.begin(), by_time.end(),
                   [](const auto& a, const auto& b) { return a.start_utc < b.start_utc; });
  for (std::size_t i = 0; i + 1 < by_time.size(); ++i) {
    const auto& a = by_time[i];
    const auto& b = by_time[i + 1];
    const double sep = route_separation(plan.routes[a.route], plan.routes[b.route], plan.transects);
    if (sep < plan.min_separation_m) {
      out.push_back({ScheduleViolation::Kind::separation, a.route, b.route, sep,
                     "routes " + std::to_string(a.route) + " and " + std::to_string(b.route) +
                         " are flown consecutively only " + std::to_string(sep) + " m apart"});
    }
  }

  double first = std::numeric_limits<double>::infinity();
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& s : plan.schedule) {
    first = std::min(first, s.start_utc);
    last = std::max(last, s.start_utc + plan.routes[s.route].length_m / s.speed_mps);
  }
  if (last - first > plan.max_window_s) {
    out.push_back({ScheduleViolation::Kind::window, by_time.front().route, by_time.back().route,
                   last - first,
                   "route set spans " + std::to_string(last - first) + " s, over the " +
                       std::to_string(plan.max_window_s) + " s window"});
  }
  return out;
}

SurveyPlan make_plan(const PlanRequest& req) {
  SurveyPlan plan;
  plan.study_area = req.study_area;
  plan.origin = req.origin;
  plan.study_area_m2 = std::abs(signed_area(req.study_area));
  plan.grid = req.grid;
  plan.swath_m = req.swath_m;
  plan.min_length_m = req.min_length_m;
  plan.coverage_target = req.coverage_target;
  plan.seed = req.seed;
  plan.max_route_length_m = req.max_route_length_m;
  plan.home = req.home;

  const auto candidates = generate_transects(req.study_area, req.grid, req.min_length_m);
  const auto selected =
      select_transects(candidates, req.coverage_target, req.swath_m, plan.study_area_m2, req.seed);
  plan.achieved_coverage = coverage_fraction(selected, req.swath_m, plan.study_area_m2);
  const auto packed = pack_routes(selected, req.max_route_length_m, req.home);
  auto connected = add_connectors(packed, selected, req.grid, req.home, req.gap_threshold_m,
                                  req.truncation_m);
  plan.transects = std::move(connected.transects);
  plan.routes = std::move(connected.routes);
  plan.schedule = make_schedule(plan.routes, req.start_utc, req.speed_mps, req.turnaround_s);
  return plan;
}

nlohmann::ordered_json plan_to_json(const SurveyPlan& plan, const nlohmann::ordered_json& config) {
  using oj = nlohmann::ordered_json;
  auto endpoint = [&](const Point2& p) {
    const Geodetic g = enu_unproject(plan.origin, p);
    return oj{{"enu", xy(p)}, {"lat", g.lat_deg}, {"lon", g.lon_deg}};
  };

  oj doc;
  doc["schema"] = "wildcensus-plan/1";
  doc["config"] = config;
  doc["origin"] = {{"lat", plan.origin.lat_deg}, {"lon", plan.origin.lon_deg}};
  oj ring = oj::array();
  for (const auto& p : plan.study_area) ring.push_back(xy(p));
  doc["study_area"] = {{"enu", ring}, {"area_m2", plan.study_area_m2}};
  doc["grid"] = {{"cell_ns_m", plan.grid.cell_ns_m},
                 {"cell_ew_m", plan.grid.cell_ew_m},
                 {"orientation_deg", plan.grid.orientation_deg}};
  doc["swath_m"] = plan.swath_m;
  doc["min_length_m"] = plan.min_length_m;
  doc["coverage_target"] = plan.coverage_target;
  doc["achieved_coverage"] = plan.achieved_coverage;
  doc["seed"] = plan.seed;
  doc["max_route_length_m"] = plan.max_route_length_m;
  doc["home"] = xy(plan.home);

  oj transects = oj::array();
  for (const auto& t : plan.transects) {
    transects.push_back({{"id", t.id},
                         {"kind", kind_name(t.kind)},
                         {"column", t.column},
                         {"row", t.row},
                         {"start", endpoint(t.start)},
                         {"end", endpoint(t.end)},
                         {"length_m", t.length_m},
                         {"census_eligible", t.census_eligible},
                         {"training_included", t.training_included},
                         {"truncated_ends_m", t.truncated_ends_m},
                         {"census_length_m", t.census_length_m()}});
  }
  doc["transects"] = std::move(transects);

  oj routes = oj::array();
  for (const auto& r : plan.routes) {
    oj legs = oj::array();
    for (const auto& l : r.legs) legs.push_back({{"transect", l.transect_id}, {"reversed", l.reversed}});
    routes.push_back({{"legs", std::move(legs)}, {"length_m", r.length_m}});
  }
  doc["routes"] = std::move(routes);

  oj sched = oj::array();
  for (const auto& s : plan.schedule) {
    sched.push_back({{"route", s.route}, {"start_utc", s.start_utc}, {"speed_mps", s.speed_mps}});
  }
  doc["schedule"] = {{"min_separation_m", plan.min_separation_m},
                     {"max_window_s", plan.max_window_s},
                     {"routes", std::move(sched)}};
  doc["surveyed_area_m2"] = plan.surveyed_area_m2();
  return doc;
}

SurveyPlan plan_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("schema", "") != "wildcensus-plan/1") {
      throw ValidationError("plan: expected schema wildcensus-plan/1");
    }
    SurveyPlan plan;
    plan.origin = {doc.at("origin").at("lat").get<double>(), doc.at("origin").at("lon").get<double>()};
    for (const auto& p : doc.at("study_area").at("enu")) plan.study_area.push_back(parse_xy(p));
    plan.study_area_m2 = doc.at("study_area").at("area_m2").get<double>();
    const auto& g = doc.at("grid");
    plan.grid = {g.at("cell_ns_m").get<double>(), g.at("cell_ew_m").get<double>(),
                 g.at("orientation_deg").get<double>()};
    plan.swath_m = doc.at("swath_m").get<double>();
    plan.min_length_m = doc.at("min_length_m").get<double>();
    plan.coverage_target = doc.at("coverage_target").get<double>();
    plan.achieved_coverage = doc.at("achieved_coverage").get<double>();
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.max_route_length_m = doc.at("max_route_length_m").get<double>();
    plan.home = parse_xy(doc.at("home"));
    for (const auto& j : doc.at("transects")) {
      Transect t;
      t.id = j.at("id").get<int>();
      t.kind = parse_kind(j.at("kind").get<std::string>());
      t.column = j.at("column").get<int>();
      t.row = j.at("row").get<int>();
      t.start = parse_xy(j.at("start").at("enu"));
      t.end = parse_xy(j.at("end").at("enu"));
      t.length_m = j.at("length_m").get<double>();
      t.census_eligible = j.at("census_eligible").get<bool>();
      t.training_included = j.at("training_included").get<bool>();
      t.truncated_ends_m = j.at("truncated_ends_m").get<double>();
      plan.transects.push_back(t);
    }
    for (const auto& j : doc.at("routes")) {
      Route r;
      for (const auto& l : j.at("legs")) {
        r.legs.push_back({l.at("transect").get<int>(), l.at("reversed").get<bool>()});
      }
      r.length_m = j.at("length_m").get<double>();
      plan.routes.push_back(std::move(r));
    }
    const auto& s = doc.at("schedule");
    plan.min_separation_m = s.at("min_separation_m").get<double>();
    plan.max_window_s = s.at("max_window_s").get<double>();
    for (const auto& j : s.at("routes")) {
      plan.schedule.push_back({j.at("route").get<std::size_t>(), j.at("start_utc").get<double>(),
                               j.at("speed_mps").get<double>()});
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
}

SurveyPlan load_plan(const std::string& path) { return plan_from_json(read_json_file(path)); }

std::vector<Geodetic> parse_study_area_geojson(const nlohmann::json& doc) {
  try {
    const nlohmann::json* geom = &doc;
    if (doc.value("type", "") == "FeatureCollection") {
      const auto& features = doc.at("features");
      if (features.empty()) throw ValidationError("study area: empty FeatureCollection");
      geom = &features.at(0).at("geometry");
    } else if (doc.value("type", "") == "Feature") {
      geom = &doc.at("geometry");
    }
    if (geom->value("type", "") != "Polygon") throw ValidationError("study area: expected a Polygon geometry");
    const auto& outer = geom->at("coordinates").at(0);
    std::vector<Geodetic> ring;
    for (const auto& c : outer) {
      if (!c.is_array() || c.size() < 2) throw ValidationError("study area: malformed position");
      ring.push_back({c[1].get<double>(), c[0].get<double>()});
    }
    if (ring.size() > 1 && ring.front().lat_deg == ring.back().lat_deg &&
        ring.front().lon_deg == ring.back().lon_deg) {
      ring.pop_back();
    }
    if (ring.size() < 3) throw ValidationError("study area: ring needs at least three vertices");
    return ring;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("study area: ") + e.what());
  }
}

std::vector<Geodetic> load_study_area_geojson(const std::string& path) {
  return parse_study_area_geojson(read_json_file(path));
}

Geodetic ring_origin(const std::vector<Geodetic>& ring) {
  if (ring.empty()) throw InvalidInput("empty ring");
  double lat_lo = ring[0].lat_deg, lat_hi = ring[0].lat_deg;
  double lon_lo = ring[0].lon_deg, lon_hi = ring[0].lon_deg;
  for (const auto& g : ring) {
    lat_lo = std::min(lat_lo, g.lat_deg);
    lat_hi = std::max(lat_hi, g.lat_deg);
    lon_lo = std::min(lon_lo, g.lon_deg);
    lon_hi = std::max(lon_hi, g.lon_deg);
  }
  return {(lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0};
}

Polygon project_ring(const Geodetic& origin, const std::vector<Geodetic>& ring) {
  Polygon poly;
  poly.reserve(ring.size());
  for (const auto& g : ring) poly.push_back(enu_project(origin, g));
  return poly;
}

}  // namespace wildcensus
