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

#include <atomic>
#include <filesystem>
#include <thread>

#include "support/review_fixture.hpp"
#include "wildcensus/error.hpp"
#include "wildcensus/evaluation.hpp"
#include "wildcensus/io.hpp"
#include "wildcensus/review_http.hpp"

// After the Eigen-based headers: <resolv.h> defines a `_res` macro.
#include <httplib.h>

using namespace wildcensus;
using namespace wildcensus::testing;
namespace fs = std::filesystem;

TEST_CASE("lease_next hands out the oldest free task") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(3));
  const auto a = svc.lease_next("A");
  REQUIRE(a);
  CHECK(a->image_id == "img0");
  CHECK(a->state == TaskState::leased);
  CHECK(a->lease->observer_id == "A");
  CHECK(a->lease->expiry == clock.t + 900.0);
  CHECK(svc.lease_next("A")->image_id == "img0");  // still held
  CHECK(svc.lease_next("B")->image_id == "img1");
  CHECK_THROWS_AS(svc.lease_next(""), InvalidInput);
}

TEST_CASE("the second review must come from another observer") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(1));
  svc.lease_next("A");
  svc.submit_verdict("img0", deer_verdict("A", {{100, 100, 50, 40}}));
  CHECK(svc.task("img0").state == TaskState::single_reviewed);
  CHECK(!svc.lease_next("A"));
  CHECK(svc.lease_next("B")->image_id == "img0");
  CHECK_THROWS_AS(svc.submit_verdict("img0", deer_verdict("A", {{100, 100, 50, 40}})), StateError);
}

TEST_CASE("expired leases are reclaimable and logged") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(1));
  svc.lease_next("A");
  CHECK(!svc.lease_next("B"));
  clock.t += 899.0;
  CHECK(!svc.lease_next("B"));
  clock.t += 1.0;
  const auto b = svc.lease_next("B");
  REQUIRE(b);
  CHECK(b->lease->observer_id == "B");
  const auto log = svc.events();
  CHECK(log[log.size() - 2].kind == "lease_expired");
  // A's late verdict is now stale.
  CHECK_THROWS_WITH_AS(svc.submit_verdict("img0", empty_verdict("A")), doctest::Contains("stale lease"), StateError);
}

TEST_CASE("agreement and conflict") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(3));
  // Same deer boxed by both observers with IoU 0.6.
  svc.submit_verdict("img0", deer_verdict("A", {{100, 100, 100, 100}}));
  svc.submit_verdict("img0", deer_verdict("B", {{125, 100, 100, 100}}));
  CHECK(iou({100, 100, 100, 100}, {125, 100, 100, 100}) == doctest::Approx(0.6));
  CHECK(svc.task("img0").state == TaskState::double_reviewed);
  CHECK(*svc.task("img0").agreement);

  svc.submit_verdict("img1", empty_verdict("A"));
  svc.submit_verdict("img1", deer_verdict("B", {{10, 10, 20, 20}}));
  CHECK(svc.task("img1").state == TaskState::conflict);

  // Same count, different place.
  svc.submit_verdict("img2", deer_verdict("A", {{10, 10, 20, 20}}));
  svc.submit_verdict("img2", deer_verdict("B", {{1000, 10, 20, 20}}));
  CHECK(svc.task("img2").state == TaskState::conflict);
  CHECK_THROWS_AS(svc.submit_verdict("img2", empty_verdict("C")), StateError);

  const auto stats = svc.stats();
  CHECK(stats.agreed == 1);
  CHECK(stats.disagreed == 2);
  CHECK(*stats.agreement_rate() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("verdicts_agree is symmetric") {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const Verdict a = random_verdict(rng, "A");
    const Verdict b = random_verdict(rng, "B");
    CHECK(verdicts_agree(a, b) == verdicts_agree(b, a));
    CHECK(verdicts_agree(a, a));
  }
  // Counts match but no one-to-one pairing exists: both A boxes overlap only B's first.
  const Verdict a = deer_verdict("A", {{0, 0, 10, 10}, {2, 0, 10, 10}});
  const Verdict b = deer_verdict("B", {{1, 0, 10, 10}, {500, 500, 10, 10}});
  CHECK(!verdicts_agree(a, b));
}

TEST_CASE("submission order does not change the outcome") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const Verdict a = random_verdict(rng, "A");
    const Verdict b = random_verdict(rng, "B");
    FakeClock c1;
    FakeClock c2;
    ReviewService s1(c1.options());
    ReviewService s2(c2.options());
    s1.create_tasks(records(1));
    s2.create_tasks(records(1));
    s1.submit_verdict("img0", a);
    s1.submit_verdict("img0", b);
    s2.submit_verdict("img0", b);
    s2.submit_verdict("img0", a);
    CHECK(s1.task("img0").state == s2.task("img0").state);
  }
}

TEST_CASE("adjudication") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(2));
  svc.submit_verdict("img0", empty_verdict("A"));
  svc.submit_verdict("img0", deer_verdict("B", {{10, 10, 20, 20}}));
  const auto t = svc.adjudicate("img0", deer_verdict("expert", {{10, 10, 20, 20}}));
  CHECK(t.state == TaskState::adjudicated);
  CHECK(t.adjudication->asserted().size() == 1);
  CHECK_THROWS_AS(svc.adjudicate("img0", empty_verdict("expert")), StateError);

  svc.submit_verdict("img1", empty_verdict("A"));
  svc.submit_verdict("img1", empty_verdict("B"));
  CHECK(svc.task("img1").state == TaskState::double_reviewed);
  CHECK_THROWS_AS(svc.adjudicate("img1", empty_verdict("expert")), StateError);
  CHECK_THROWS_AS(svc.adjudicate("nope", empty_verdict("expert")), NotFound);

  const auto replayed = ReviewService::replay(svc.events());
  CHECK(replayed->task("img0").state == TaskState::adjudicated);
}

TEST_CASE("seed_candidates") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(3));
  const std::vector<Detection> dets = {
      {"img0", AnimalClass::deer, {10, 10, 20, 20}, 0.3, std::nullopt},
      {"img1", AnimalClass::deer, {10, 10, 20, 20}, 0.2, std::nullopt},
      {"img1", AnimalClass::deer, {50, 10, 20, 20}, 0.9, std::nullopt},
  };
  CHECK(svc.seed_candidates(dets, 0.26) == 2);
  CHECK(svc.task("img0").candidates.size() == 1);
  REQUIRE(svc.task("img1").candidates.size() == 1);
  CHECK(svc.task("img1").candidates[0].confidence == 0.9);
  CHECK(svc.task("img2").candidates.empty());

  // Confirming a candidate records the action and copies its box.
  Verdict v;
  v.observer_id = "A";
  v.boxes = {{{}, AnimalClass::deer, BoxAction::confirm_model, 0}};
  const auto t = svc.submit_verdict("img0", v);
  CHECK(t.reviews[0].boxes[0].bbox == BBox{10, 10, 20, 20});
  CHECK(svc.stats().candidates_confirmed == 1);

  Verdict bad;
  bad.observer_id = "A";
  bad.boxes = {{{}, AnimalClass::deer, BoxAction::confirm_model, 7}};
  CHECK_THROWS_AS(svc.submit_verdict("img1", bad), InvalidInput);
  CHECK_THROWS_AS(svc.seed_candidates({{"zzz", AnimalClass::deer, {1, 1, 2, 2}, 0.9, std::nullopt}}, 0.26), NotFound);
  CHECK_THROWS_AS(svc.seed_candidates(dets, 0.26), StateError);  // img0 already reviewed
}

TEST_CASE("verdict invariants") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(1));
  Verdict both = deer_verdict("A", {{1, 1, 5, 5}});
  both.declared_empty = true;
  CHECK_THROWS_AS(svc.submit_verdict("img0", both), InvalidInput);
  Verdict neither;
  neither.observer_id = "A";
  CHECK_THROWS_AS(svc.submit_verdict("img0", neither), InvalidInput);
  CHECK_THROWS_AS(svc.submit_verdict("img0", empty_verdict("")), InvalidInput);
  CHECK(svc.task("img0").state == TaskState::pending);
}

TEST_CASE("replay of 1,000 random events equals the live state") {
  for (std::uint64_t seed : {1, 2, 3}) {
    FakeClock clock;
    ReviewService svc(clock.options());
    Rng rng(seed);
    drive_random(svc, clock, rng, 1000);
    const auto log = svc.events();
    REQUIRE(log.size() >= 1000);
    const auto replayed = ReviewService::replay(parse_event_log(event_log_to_jsonl(log)));
    CHECK(replayed->state_json().dump() == svc.state_json().dump());

    // Every prefix folds cleanly and no counted task lacks two observers.
    for (const auto& t : svc.tasks()) {
      if (t.state == TaskState::double_reviewed || t.state == TaskState::conflict) {
        REQUIRE(t.reviews.size() == 2);
        CHECK(t.reviews[0].observer_id != t.reviews[1].observer_id);
      }
    }
    std::vector<VerificationEvent> half(log.begin(), log.begin() + 500);
    CHECK(ReviewService::replay(half)->last_seq() == 500);
  }
}

TEST_CASE("replay rejects gaps and duplicates") {
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(4));
  auto log = svc.events();
  CHECK(ReviewService::replay({})->tasks().empty());
  const auto fresh = ReviewService::replay(log);
  for (const auto& t : fresh->tasks()) CHECK(t.state == TaskState::pending);

  auto gap = log;
  gap.erase(gap.begin() + 1);
  CHECK_THROWS_AS(ReviewService::replay(gap), CorruptLog);
  auto dup = log;
  dup.insert(dup.begin() + 2, dup[1]);
  CHECK_THROWS_AS(ReviewService::replay(dup), CorruptLog);
  auto bad = log;
  bad[3].kind = "teleported";
  CHECK_THROWS_AS(ReviewService::replay(bad), CorruptLog);
  CHECK_THROWS_AS(parse_event_log("{\"seq\":1}\n"), CorruptLog);
}

TEST_CASE("concurrent lease requests never double-lease") {
  for (int round = 0; round < 20; ++round) {
    FakeClock clock;
    ReviewService svc(clock.options());
    svc.create_tasks(records(40));
    constexpr int kObservers = 8;
    std::atomic<bool> go{false};
    std::vector<std::thread> threads;
    std::vector<std::vector<std::string>> got(kObservers);
    for (int o = 0; o < kObservers; ++o) {
      threads.emplace_back([&, o] {
        while (!go) std::this_thread::yield();
        const std::string id = "obs" + std::to_string(o);
        for (int k = 0; k < 10; ++k) {
          const auto t = svc.lease_next(id);
          if (!t) break;
          got[o].push_back(t->image_id);
          Verdict v = empty_verdict(id);
          try {
            svc.submit_verdict(t->image_id, v);
          } catch (const StateError&) {
          }
        }
      });
    }
    go = true;
    for (auto& t : threads) t.join();
    // The serialized log is a valid history: replay re-checks every lease.
    const auto log = svc.events();
    REQUIRE_NOTHROW(ReviewService::replay(log));
    CHECK(lease_overlaps(log) == 0);
    for (const auto& t : svc.tasks()) {
      if (t.reviews.size() == 2) CHECK(t.reviews[0].observer_id != t.reviews[1].observer_id);
    }
  }
}

TEST_CASE("ReviewStore persists and restores") {
  const fs::path dir = fs::temp_directory_path() / "wildcensus_store";
  fs::remove_all(dir);
  std::string live;
  {
    FakeClock clock;
    ReviewStore store(dir.string(), clock.options(), 7);
    store.service().create_tasks(records(5));
    store.service().submit_verdict("img0", empty_verdict("A"));
    store.service().submit_verdict("img0", empty_verdict("B"));
    store.service().lease_next("C");
    live = store.service().state_json().dump();
  }
  CHECK(fs::exists(dir / "snapshot.json"));
  {
    FakeClock clock;
    ReviewStore again(dir.string(), clock.options());
    CHECK(again.service().state_json().dump() == live);
    again.service().submit_verdict("img2", empty_verdict("A"));
  }
  const auto log = load_event_log((dir / "events.jsonl").string());
  CHECK(log.size() == 9);
  CHECK(ReviewService::replay(log)->task("img2").state == TaskState::single_reviewed);
  CHECK(ReviewService::replay(log)->task("img1").state == TaskState::leased);
  fs::remove_all(dir);
}

TEST_CASE("HTTP round trip") {
  const fs::path root = fs::temp_directory_path() / "wildcensus_http";
  fs::remove_all(root);
  write_file((root / "img0.jpg").string(), "JPEGDATA");
  FakeClock clock;
  ReviewService svc(clock.options());
  svc.create_tasks(records(2));
  ReviewHttpServer server(svc, root.string());
  const int port = server.bind("127.0.0.1", 0);
  std::thread th([&] { server.listen(); });

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/api/tasks/next?observer=A");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = nlohmann::json::parse(res->body);
  CHECK(body["image_id"] == "img0");
  CHECK(body["state"] == "leased");
  CHECK(body["image_url"] == "/api/images/img0/file");

  res = cli.Post("/api/tasks/img0/verdict", R"({"observer_id":"A","boxes":[{"action":"add_manual","class":"deer","bbox":[10,10,30,30]}],"duration_s":42})",
                 "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["state"] == "single_reviewed");

  httplib::Headers hdr = {{"X-Observer-Id", "B"}};
  res = cli.Post("/api/tasks/img0/verdict", hdr, R"({"declared_empty":true})", "application/json");
  REQUIRE(res);
  CHECK(nlohmann::json::parse(res->body)["state"] == "conflict");

  res = cli.Post("/api/tasks/img0/verdict", R"({"observer_id":"C","declared_empty":true})", "application/json");
  CHECK(res->status == 409);
  res = cli.Post("/api/tasks/img0/adjudicate", R"({"observer_id":"expert","declared_empty":true})", "application/json");
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["state"] == "adjudicated");
  res = cli.Post("/api/tasks/img1/verdict", R"({"observer_id":"A","declared_empty":true,"boxes":[{"action":"add_manual","bbox":[1,1,2,2]}]})",
                 "application/json");
  CHECK(res->status == 400);
  res = cli.Post("/api/tasks/img1/verdict", "not json", "application/json");
  CHECK(res->status == 400);

  res = cli.Get("/api/tasks/missing");
  CHECK(res->status == 404);
  res = cli.Get("/api/images/img0/file");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "JPEGDATA");
  CHECK(res->get_header_value("Content-Type") == "image/jpeg");
  res = cli.Get("/api/images/img1/file");
  CHECK(res->status == 404);

  res = cli.Get("/api/stats");
  REQUIRE(res);
  body = nlohmann::json::parse(res->body);
  CHECK(body["tasks"] == 2);
  CHECK(body["by_state"]["adjudicated"] == 1);
  CHECK(body["observers"][0]["observer_id"] == "A");
  CHECK(body["observers"][0]["images_per_hour"].get<double>() == doctest::Approx(3600.0 / 42.0));

  CHECK(cli.Get("/api/tasks/next?observer=A")->status == 200);   // img1
  CHECK(cli.Get("/api/tasks/next?observer=Z")->status == 204);   // img1 leased to A

  server.stop();
  th.join();
  fs::remove_all(root);
}
