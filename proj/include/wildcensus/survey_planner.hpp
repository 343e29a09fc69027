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

/// \file survey_planner.hpp
/// Strip-transect survey planning: grid transects clipped to a study area,
/// seeded selection up to a coverage target, greedy route packing under a
/// battery budget, east-west connector transects and schedule checks.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wildcensus/geometry.hpp"

namespace wildcensus {

/// Simple polygon ring in ENU meters, without a repeated closing vertex.
using Polygon = std::vector<Point2>;

struct GridSpec {
  double cell_ns_m = 1500.0;
  double cell_ew_m = 100.0;
  /// Direction of the grid's "north-south" axis, degrees clockwise from north.
  double orientation_deg = 0.0;
};

enum class TransectKind { primary, connector };

struct Transect {
  int id = 0;
  Point2 start = Point2::Zero();
  Point2 end = Point2::Zero();
  double length_m = 0.0;
  TransectKind kind = TransectKind::primary;
  bool census_eligible = true;
  bool training_included = true;
  /// Distance trimmed from census counting at each end.
  double truncated_ends_m = 0.0;
  int column = -1;
  int row = -1;

  /// Length that counts towards the surveyed area.
  double census_length_m() const;
};

/// One flown leg: a transect and the direction it is flown in.
struct RouteLeg {
  int transect_id = 0;
  bool reversed = false;
};

struct Route {
  std::vector<RouteLeg> legs;
  /// Home -> transects and ferries -> home.
  double length_m = 0.0;

  std::vector<int> transect_ids() const;
};

struct RouteSchedule {
  std::size_t route = 0;
  double start_utc = 0.0;
  double speed_mps = 0.0;
};

struct SurveyPlan {
  Polygon study_area;
  Geodetic origin;
  double study_area_m2 = 0.0;
  GridSpec grid;
  double swath_m = 0.0;
  double min_length_m = 760.0;
  double coverage_target = 0.10;
  double achieved_coverage = 0.0;
  std::uint64_t seed = 0;
  double max_route_length_m = 0.0;
  Point2 home = Point2::Zero();
  /// Selected primaries in selection order, then connectors.
  std::vector<Transect> transects;
  std::vector<Route> routes;
  std::vector<RouteSchedule> schedule;
  double min_separation_m = 500.0;
  double max_window_s = 3.0 * 3600.0;

  const Transect& transect(int id) const;
  /// Sum over transects of census-eligible length times swath.
  double surveyed_area_m2() const;
};

struct ScheduleViolation {
  enum class Kind { separation, window, route_length };
  Kind kind;
  std::size_t route_a = 0;
  std::size_t route_b = 0;
  double value = 0.0;  ///< offending separation (m), window (s) or length (m)
  std::string message;
};

/// Signed shoelace area; positive for counter-clockwise rings.
double signed_area(const Polygon& poly);

/// Throws InvalidInput for fewer than three vertices, zero area or
/// self-intersection.
void validate_polygon(const Polygon& poly);

/// Grid columns spaced cell_ew apart (lines through column centers) split
/// into cell_ns rows and clipped to `area`, both anchored at the area's
/// bounding box in grid axes. Pieces shorter than `min_length_m` are dropped;
/// the rest are numbered from 1 in (column, row) order.
std::vector<Transect> generate_transects(const Polygon& area, const GridSpec& grid,
                                         double min_length_m);

/// Seeded shuffle, then the shortest prefix whose strip area reaches
/// `coverage_target` of `study_area_m2`.
std::vector<Transect> select_transects(const std::vector<Transect>& transects,
                                       double coverage_target, double swath_m,
                                       double study_area_m2, std::uint64_t seed);

double coverage_fraction(const std::vector<Transect>& transects, double swath_m,
                         double study_area_m2);

/// Greedy nearest-endpoint packing. A route's length includes the legs from
/// and back to `home`; a transect that cannot be flown alone within the
/// budget is an error.
std::vector<Route> pack_routes(const std::vector<Transect>& selected, double max_route_length_m,
                               const Point2& home);

/// Length of `route` flown from and back to `home`.
double route_length(const Route& route, const std::vector<Transect>& transects, const Point2& home);

struct ConnectedRoutes {
  std::vector<Transect> transects;
  std::vector<Route> routes;
};

/// Inserts an east-west connector wherever consecutive legs of a route are
/// more than `gap_threshold_m` apart. Connector ends are trimmed from census
/// eligibility by `truncation_m` and remain usable for training.
ConnectedRoutes add_connectors(const std::vector<Route>& routes,
                               const std::vector<Transect>& transects, const GridSpec& grid,
                               const Point2& home, double gap_threshold_m = 1500.0,
                               double truncation_m = 100.0);

/// Routes flown back to back from `start_utc`, `turnaround_s` apart.
std::vector<RouteSchedule> make_schedule(const std::vector<Route>& routes, double start_utc,
                                         double speed_mps, double turnaround_s);

/// Consecutive-in-time routes closer than the minimum separation, route sets
/// spanning more than the window, and routes over the length budget.
std::vector<ScheduleViolation> validate_schedule(const SurveyPlan& plan);

/// Minimum distance between the transects of two routes.
double route_separation(const Route& a, const Route& b, const std::vector<Transect>& transects);

struct PlanRequest {
  Polygon study_area;
  Geodetic origin;
  GridSpec grid;
  double swath_m = 0.0;
  double min_length_m = 760.0;
  double coverage_target = 0.10;
  std::uint64_t seed = 0;
  double max_route_length_m = 10000.0;
  Point2 home = Point2::Zero();
  double gap_threshold_m = 1500.0;
  double truncation_m = 100.0;
  double start_utc = 0.0;
  double speed_mps = 6.5;
  double turnaround_s = 600.0;
};

/// generate -> select -> pack -> connectors -> schedule.
SurveyPlan make_plan(const PlanRequest& request);

/// "wildcensus-plan/1" document. `config` is echoed verbatim.
nlohmann::ordered_json plan_to_json(const SurveyPlan& plan,
                                    const nlohmann::ordered_json& config = nlohmann::ordered_json::object());
SurveyPlan plan_from_json(const nlohmann::json& doc);
SurveyPlan load_plan(const std::string& path);

/// Outer ring of a GeoJSON Polygon (bare geometry, Feature or the first
/// feature of a FeatureCollection), as lat/lon vertices without closure.
std::vector<Geodetic> load_study_area_geojson(const std::string& path);
std::vector<Geodetic> parse_study_area_geojson(const nlohmann::json& doc);

/// Center of the ring's lat/lon bounding box.
Geodetic ring_origin(const std::vector<Geodetic>& ring);
Polygon project_ring(const Geodetic& origin, const std::vector<Geodetic>& ring);

}  // namespace wildcensus
