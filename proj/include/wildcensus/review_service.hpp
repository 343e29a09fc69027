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

/// \file review_service.hpp
/// Event-sourced dual-observer review queue.
///
/// Every mutation is a VerificationEvent with the next sequence number. The
/// live service and replay() fold events through the same transition code,
/// so replaying a log reproduces the live state exactly. Time comes from an
/// injected clock; lease expiry happens lazily at the start of each mutating
/// call and is itself logged.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wildcensus/datastore.hpp"

namespace wildcensus {

enum class TaskState { pending, leased, single_reviewed, double_reviewed, conflict, adjudicated };
enum class BoxAction { confirm_model, reject_model, add_manual };

std::string_view to_string(TaskState s);
std::string_view to_string(BoxAction a);
TaskState parse_task_state(std::string_view s);
BoxAction parse_box_action(std::string_view s);

/// Model box offered to observers as a suggestion.
struct Candidate {
  int candidate_id = 0;
  AnimalClass cls = AnimalClass::deer;
  BBox bbox;
  double confidence = 0.0;
};

struct VerdictBox {
  BBox bbox;
  AnimalClass cls = AnimalClass::deer;
  BoxAction action = BoxAction::add_manual;
  std::optional<int> candidate_id;  ///< required for confirm/reject
};

struct Verdict {
  std::string verdict_id;  ///< assigned by the service
  std::string image_id;
  std::string observer_id;
  std::vector<VerdictBox> boxes;
  bool declared_empty = false;
  double duration_s = 0.0;
  double submitted_at = 0.0;  ///< assigned by the service

  /// Boxes asserting an animal (confirmed candidates and manual boxes).
  std::vector<const VerdictBox*> asserted() const;
};

struct Lease {
  std::string observer_id;
  double expiry = 0.0;
};

struct ReviewTask {
  std::string image_id;
  std::string file;
  bool census_eligible = true;
  TaskState state = TaskState::pending;
  std::uint64_t created_seq = 0;
  std::vector<Candidate> candidates;
  std::vector<Verdict> reviews;  ///< at most two, from distinct observers
  std::optional<Lease> lease;
  std::optional<bool> agreement;  ///< set once two reviews exist
  std::optional<Verdict> adjudication;

  bool reviewed_by(const std::string& observer_id) const;
};

struct VerificationEvent {
  std::uint64_t seq = 0;
  std::string kind;  ///< task_created, candidates_seeded, leased, lease_expired, verdict_submitted, adjudicated
  double at = 0.0;
  nlohmann::ordered_json payload;
};

nlohmann::ordered_json to_json(const VerificationEvent& e);
VerificationEvent event_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ReviewTask& t);

/// Reads events.jsonl. Malformed lines throw CorruptLog.
std::vector<VerificationEvent> parse_event_log(std::string_view jsonl);
std::vector<VerificationEvent> load_event_log(const std::string& path);
std::string event_log_to_jsonl(const std::vector<VerificationEvent>& events);

/// Maximum-cardinality one-to-one pairing of the asserted boxes of `a` and
/// `b` (indices into asserted()), linking same-class boxes with IoU at or
/// above the threshold. Pairs are sorted by the index into `a`.
std::vector<std::pair<std::size_t, std::size_t>> correspond(const Verdict& a, const Verdict& b,
                                                            double iou_threshold = 0.10);

/// True when both verdicts assert the same number of boxes per class and the
/// asserted boxes admit a one-to-one same-class correspondence at IoU >= 0.10.
bool verdicts_agree(const Verdict& a, const Verdict& b, double iou_threshold = 0.10);

struct ObserverStats {
  std::string observer_id;
  std::size_t reviews = 0;
  double total_duration_s = 0.0;
  double images_per_hour = 0.0;  ///< 0 when no duration has been recorded
};

struct ReviewStats {
  std::size_t tasks = 0;
  std::map<TaskState, std::size_t> by_state;
  std::size_t agreed = 0;
  std::size_t disagreed = 0;
  std::vector<ObserverStats> observers;  ///< sorted by id
  std::size_t candidates_confirmed = 0;
  std::size_t candidates_rejected = 0;
  std::size_t manual_boxes = 0;
  std::uint64_t last_seq = 0;

  std::optional<double> agreement_rate() const;
};

nlohmann::ordered_json to_json(const ReviewStats& s);

/// Everything census reconciliation needs from one task.
struct ImageReview {
  std::string image_id;
  std::vector<Verdict> reviews;
  std::optional<Verdict> adjudication;
};

struct ReviewOptions {
  double lease_ttl_s = 900.0;
  double agreement_iou = 0.10;
  /// Seconds since the epoch; defaults to the system clock.
  std::function<double()> clock;
  /// Keep every event in memory (for events()).
  bool keep_log = true;
};

class ReviewService {
 public:
  using EventSink = std::function<void(const VerificationEvent&)>;

  explicit ReviewService(ReviewOptions options = {});
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Called with each event after it is applied, under the writer lock.
  void set_event_sink(EventSink sink);

  /// One task per record not already known; returns the number created.
  std::size_t create_tasks(const std::vector<ImageRecord>& records);

  /// Attaches detections at or above `tau` as candidates, one event per
  /// image with at least one. Unknown image ids throw NotFound; images that
  /// already have reviews throw StateError.
  std::size_t seed_candidates(const std::vector<Detection>& detections, double tau);

  /// Oldest pending or single-reviewed task without an active lease that the
  /// observer has not reviewed. An observer already holding a live lease gets
  /// that task back.
  std::optional<ReviewTask> lease_next(const std::string& observer_id);

  ReviewTask submit_verdict(const std::string& image_id, Verdict verdict);
  ReviewTask adjudicate(const std::string& image_id, Verdict verdict);

  /// Logs lease_expired for every lease past its expiry.
  std::size_t expire_leases();

  ReviewTask task(const std::string& image_id) const;
  std::vector<ReviewTask> tasks() const;
  ReviewStats stats() const;
  std::vector<ImageReview> census_reviews() const;
  std::vector<VerificationEvent> events() const;
  std::uint64_t last_seq() const;
  double now() const;

  /// Full state; identical for a live service and a replay of its log.
  nlohmann::ordered_json state_json() const;

  /// Rebuilds state from a log whose sequence numbers run 1, 2, ... with no
  /// gap or repeat; anything else throws CorruptLog.
  static std::unique_ptr<ReviewService> replay(const std::vector<VerificationEvent>& log,
                                               ReviewOptions options = {});
  /// Rebuilds state from a snapshot and the events that follow it.
  static std::unique_ptr<ReviewService> restore(const nlohmann::json& snapshot,
                                                const std::vector<VerificationEvent>& log,
                                                ReviewOptions options = {});

 private:
  friend class ReviewStore;

  double clock_now() const;
  void emit(std::string kind, nlohmann::ordered_json payload);
  void apply(const VerificationEvent& e);
  void expire_due();
  std::size_t index_of(const std::string& image_id) const;
  void set_state(std::size_t idx, TaskState s);
  Verdict prepare(const ReviewTask& task, Verdict v, bool expert) const;
  void load_state(const nlohmann::json& state);
  void append_from(const std::vector<VerificationEvent>& log, std::uint64_t after);
  nlohmann::ordered_json state_json_unlocked() const;

  ReviewOptions options_;
  mutable std::mutex mutex_;
  EventSink sink_;
  std::vector<ReviewTask> tasks_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::set<std::size_t> available_;                   ///< pending / single_reviewed, by age
  std::set<std::pair<double, std::size_t>> expiries_;  ///< live leases
  std::unordered_map<std::string, std::size_t> held_;  ///< observer -> leased task
  std::vector<VerificationEvent> log_;
  std::uint64_t seq_ = 0;
  double last_at_ = 0.0;
};

/// Directory-backed service: `dir/events.jsonl` (append-only) plus an
/// optional `dir/snapshot.json` written every `snapshot_every` events.
class ReviewStore {
 public:
  ReviewStore(const std::string& dir, ReviewOptions options = {}, std::uint64_t snapshot_every = 0);
  ~ReviewStore();

  ReviewService& service() { return *service_; }
  void write_snapshot();

 private:
  std::string dir_;
  std::uint64_t snapshot_every_;
  std::unique_ptr<ReviewService> service_;
  struct Appender;
  std::unique_ptr<Appender> appender_;
};

}  // namespace wildcensus
