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

#include <set>

#include "wildcensus/random.hpp"
#include "wildcensus/survey_planner.hpp"

using namespace wildcensus;

namespace {

Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

Transect line(int id, Point2 a, Point2 b) {
  Transect t;
  t.id = id;
  t.start = a;
  t.end = b;
  t.length_m = (b - a).norm();
  return t;
}

/// Random star-shaped polygon around `center`.
Polygon star(Rng& rng, const Point2& center, int n, double r_lo, double r_hi) {
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * (i + rng.uniform(0.1, 0.9)) / n;
    const double r = rng.uniform(r_lo, r_hi);
    p.push_back(center + r * Point2(std::cos(a), std::sin(a)));
  }
  return p;
}

}  // namespace

TEST_CASE("generate_transects on a 1500 x 300 rectangle") {
  const auto ts = generate_transects(rect(0, 0, 300, 1500), GridSpec{}, 760.0);
  REQUIRE(ts.size() == 3);
  const double xs[3] = {50, 150, 250};
  for (int i = 0; i < 3; ++i) {
    CHECK(ts[i].id == i + 1);
    CHECK(ts[i].start.x() == doctest::Approx(xs[i]));
    CHECK(ts[i].end.x() == doctest::Approx(xs[i]));
    CHECK(ts[i].length_m == doctest::Approx(1500.0));
    CHECK(ts[i].kind == TransectKind::primary);
    CHECK(ts[i].census_eligible);
  }
}

TEST_CASE("generate_transects drops clipped pieces shorter than the minimum") {
  // The middle column only reaches 700 m into the area.
  const Polygon notch = {{0, 0},     {300, 0},   {300, 1500}, {200, 1500},
                         {200, 700}, {100, 700}, {100, 1500}, {0, 1500}};
  const auto ts = generate_transects(notch, GridSpec{}, 760.0);
  REQUIRE(ts.size() == 2);
  CHECK(ts[0].start.x() == doctest::Approx(50));
  CHECK(ts[1].start.x() == doctest::Approx(250));

  const auto loose = generate_transects(notch, GridSpec{}, 600.0);
  REQUIRE(loose.size() == 3);
  CHECK(loose[1].length_m == doctest::Approx(700.0));
}

TEST_CASE("generate_transects splits long columns into rows") {
  const auto ts = generate_transects(rect(0, 0, 100, 4000), GridSpec{}, 760.0);
  // Rows of 1500, 1500 and a 1000 m remainder.
  REQUIRE(ts.size() == 3);
  CHECK(ts[0].row == 0);
  CHECK(ts[2].row == 2);
  CHECK(ts[2].length_m == doctest::Approx(1000.0));
}

TEST_CASE("generate_transects rejects degenerate areas") {
  CHECK_THROWS_AS(generate_transects({}, GridSpec{}, 760), InvalidInput);
  CHECK_THROWS_AS(generate_transects({{0, 0}, {1, 1}, {2, 2}}, GridSpec{}, 760), InvalidInput);
  CHECK_THROWS_AS(generate_transects({{0, 0}, {10, 10}, {10, 0}, {0, 10}}, GridSpec{}, 760), InvalidInput);
  CHECK_THROWS_AS(generate_transects(rect(0, 0, 300, 1500), GridSpec{1500, 0, 0}, 760), InvalidInput);
}

TEST_CASE("generate_transects follows the grid orientation") {
  GridSpec grid;
  grid.orientation_deg = 30.0;
  const Matrix2<double> frame = heading_frame(30.0);
  Polygon rotated;
  for (const auto& p : rect(0, 0, 300, 1500)) rotated.push_back(frame * p);
  const auto ts = generate_transects(rotated, grid, 760.0);
  REQUIRE(ts.size() == 3);
  for (const auto& t : ts) {
    const Point2 dir = (t.end - t.start).normalized();
    CHECK((dir - frame.col(1)).norm() < 1e-9);
    CHECK(t.length_m == doctest::Approx(1500.0));
  }
}

TEST_CASE("generate_transects is translation invariant") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Polygon base = star(rng, Point2::Zero(), 9, 1500.0, 4000.0);
    const Point2 shift(rng.uniform(-5e4, 5e4), rng.uniform(-5e4, 5e4));
    Polygon moved;
    for (const auto& p : base) moved.push_back(p + shift);
    const auto a = generate_transects(base, GridSpec{}, 760.0);
    const auto b = generate_transects(moved, GridSpec{}, 760.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK((b[i].start - shift - a[i].start).norm() < 1e-9);
      CHECK((b[i].end - shift - a[i].end).norm() < 1e-9);
      CHECK(a[i].length_m >= 760.0);
    }
  }
}

TEST_CASE("select_transects") {
  const auto ts = generate_transects(rect(0, 0, 300, 1500), GridSpec{}, 760.0);
  CHECK(select_transects(ts, 0.0, 67.5, 3037500.0, 1).empty());

  // 0.1 * 3,037,500 = 303,750 m^2 and each transect covers 101,250 m^2.
  const auto all = select_transects(ts, 0.10, 67.5, 3037500.0, 42);
  CHECK(all.size() == 3);
  CHECK(coverage_fraction(all, 67.5, 3037500.0) >= 0.10);

  CHECK_THROWS_AS(select_transects(ts, 0.11, 67.5, 3037500.0, 42), InvalidInput);
  CHECK_THROWS_AS(select_transects(ts, 1.5, 67.5, 3037500.0, 42), InvalidInput);

  const auto many = generate_transects(rect(0, 0, 5000, 6000), GridSpec{}, 760.0);
  const double area = 5000.0 * 6000.0;
  const auto s1 = select_transects(many, 0.10, 67.5, area, 99);
  const auto s2 = select_transects(many, 0.10, 67.5, area, 99);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].id == s2[i].id);
  const auto s3 = select_transects(many, 0.10, 67.5, area, 100);
  bool differs = s3.size() != s1.size();
  for (std::size_t i = 0; !differs && i < s1.size(); ++i) differs = s1[i].id != s3[i].id;
  CHECK(differs);

  double max_single = 0.0;
  for (const auto& t : many) max_single = std::max(max_single, t.length_m * 67.5 / area);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double c = coverage_fraction(select_transects(many, 0.10, 67.5, area, seed), 67.5, area);
    CHECK(c >= 0.10);
    CHECK(c < 0.10 + max_single);
  }
}

TEST_CASE("pack_routes") {
  const Point2 home(0, 0);
  const std::vector<Transect> one = {line(1, {50, 0}, {50, 1500})};
  const auto single = pack_routes(one, 1e5, home);
  REQUIRE(single.size() == 1);
  CHECK(single[0].transect_ids() == std::vector<int>{1});

  // Traced by hand: route 1 = 50 + 1500 + 100 + 1500 + 150 = 3300,
  // route 2 = 250 + 1500 + 100 + 1500 + 350 = 3700.
  const std::vector<Transect> four = {line(1, {50, 0}, {50, 1500}), line(2, {150, 0}, {150, 1500}),
                                      line(3, {250, 0}, {250, 1500}), line(4, {350, 0}, {350, 1500})};
  const auto routes = pack_routes(four, 4000.0, home);
  REQUIRE(routes.size() == 2);
  CHECK(routes[0].transect_ids() == std::vector<int>{1, 2});
  CHECK(routes[1].transect_ids() == std::vector<int>{3, 4});
  CHECK(routes[0].legs[1].reversed);
  CHECK(routes[0].length_m == doctest::Approx(3300.0));
  CHECK(routes[1].length_m == doctest::Approx(3700.0));
  for (const auto& r : routes) {
    CHECK(r.length_m <= 4000.0);
    CHECK(route_length(r, four, home) == doctest::Approx(r.length_m));
  }

  CHECK_THROWS_AS(pack_routes(four, 1400.0, home), InvalidInput);
}

TEST_CASE("pack_routes routes every transect exactly once") {
  Rng rng(8);
  const auto cands = generate_transects(rect(0, 0, 4000, 6000), GridSpec{}, 760.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sel = select_transects(cands, 0.2, 67.5, 24e6, rng.below(1000));
    const auto routes = pack_routes(sel, 16000.0, Point2(2000, -200));
    std::multiset<int> seen;
    for (const auto& r : routes) {
      CHECK(r.length_m <= 16000.0);
      for (int id : r.transect_ids()) seen.insert(id);
    }
    std::multiset<int> want;
    for (const auto& t : sel) want.insert(t.id);
    CHECK(seen == want);
  }
}

TEST_CASE("add_connectors") {
  const Point2 home(0, 0);
  // Exit of transect 1 and entry of transect 2 are 2000 m apart.
  std::vector<Transect> ts = {line(1, {0, -1500}, {0, 0}), line(2, {2000, 0}, {2000, -1500})};
  std::vector<Route> routes(1);
  routes[0].legs = {{1, false}, {2, false}};
  const auto connected = add_connectors(routes, ts, GridSpec{}, home);
  REQUIRE(connected.transects.size() == 3);
  const Transect& c = connected.transects[2];
  CHECK(c.kind == TransectKind::connector);
  CHECK(c.id == 3);
  CHECK(c.length_m == doctest::Approx(2000.0));
  CHECK(c.truncated_ends_m == 100.0);
  CHECK(c.census_length_m() == doctest::Approx(1800.0));
  CHECK(c.training_included);
  CHECK(connected.routes[0].transect_ids() == std::vector<int>{1, 3, 2});

  // 800 m apart: no connector.
  ts[1] = line(2, {800, 0}, {800, -1500});
  const auto plain = add_connectors(routes, ts, GridSpec{}, home);
  CHECK(plain.transects.size() == 2);
  CHECK(plain.routes[0].transect_ids() == std::vector<int>{1, 2});
}

TEST_CASE("validate_schedule") {
  SurveyPlan plan;
  plan.transects = {line(1, {0, 0}, {0, 1500}), line(2, {500, 0}, {500, 1500}),
                    line(3, {300, 0}, {300, 1500})};
  plan.routes.resize(2);
  plan.routes[0].legs = {{1, false}};
  plan.routes[0].length_m = 3000;
  plan.routes[1].legs = {{2, false}};
  plan.routes[1].length_m = 3000;
  // Second route ends one hour after the first starts.
  plan.schedule = {{0, 0.0, 3000.0 / 1800.0}, {1, 1800.0, 3000.0 / 1800.0}};
  CHECK(validate_schedule(plan).empty());

  auto close = plan;
  close.routes[1].legs = {{3, false}};
  const auto v1 = validate_schedule(close);
  REQUIRE(v1.size() == 1);
  CHECK(v1[0].kind == ScheduleViolation::Kind::separation);
  CHECK(v1[0].value == doctest::Approx(300.0));

  auto late = plan;
  late.schedule[1].start_utc = 3.5 * 3600.0 - 1800.0;
  const auto v2 = validate_schedule(late);
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].kind == ScheduleViolation::Kind::window);
  CHECK(v2[0].value == doctest::Approx(3.5 * 3600.0));
}

TEST_CASE("make_plan is reproducible and round-trips through JSON") {
  PlanRequest req;
  req.study_area = rect(-3000, -4000, 3000, 4000);
  req.origin = {-34.0, -58.9};
  req.swath_m = 67.5;
  req.seed = 42;
  req.max_route_length_m = 20000;
  req.home = Point2(0, -4100);
  const auto a = plan_to_json(make_plan(req)).dump();
  const auto b = plan_to_json(make_plan(req)).dump();
  CHECK(a == b);

  const auto plan = make_plan(req);
  CHECK(plan.achieved_coverage >= 0.10);
  const auto again = plan_to_json(plan_from_json(nlohmann::json::parse(a))).dump();
  CHECK(again == a);
  for (const auto& t : plan.transects) {
    if (t.kind == TransectKind::primary) CHECK(t.length_m >= 760.0);
    if (t.kind == TransectKind::connector) CHECK(t.truncated_ends_m == 100.0);
  }

  CHECK_THROWS_AS(plan_from_json(nlohmann::json{{"schema", "other/1"}}), ValidationError);
}

TEST_CASE("GeoJSON study area") {
  const auto doc = nlohmann::json::parse(R"({
    "type": "Feature",
    "geometry": {"type": "Polygon",
      "coordinates": [[[-58.9, -34.0], [-58.8, -34.0], [-58.8, -33.95], [-58.9, -33.95], [-58.9, -34.0]]]}
  })");
  const auto ring = parse_study_area_geojson(doc);
  REQUIRE(ring.size() == 4);
  CHECK(ring[1].lon_deg == -58.8);
  const Geodetic o = ring_origin(ring);
  CHECK(o.lat_deg == doctest::Approx(-33.975));
  const Polygon poly = project_ring(o, ring);
  CHECK(std::abs(signed_area(poly)) > 0);
  CHECK_THROWS_AS(parse_study_area_geojson(nlohmann::json{{"type", "Point"}}), ValidationError);
}
