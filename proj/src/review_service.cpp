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

#include "wildcensus/review_service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "wildcensus/error.hpp"
#include "wildcensus/evaluation.hpp"
#include "wildcensus/io.hpp"

namespace wildcensus {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::string_view kStateNames[] = {"pending", "leased", "single_reviewed",
                                            "double_reviewed", "conflict", "adjudicated"};
constexpr std::string_view kActionNames[] = {"confirm_model", "reject_model", "add_manual"};

ojson bbox_json(const BBox& b) { return ojson::array({b.x, b.y, b.w, b.h}); }

BBox bbox_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw InvalidInput("bbox must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

ojson candidate_json(const Candidate& c) {
  ojson j;
  j["candidate_id"] = c.candidate_id;
  j["class"] = std::string(to_string(c.cls));
  j["bbox"] = bbox_json(c.bbox);
  j["confidence"] = c.confidence;
  return j;
}

Candidate candidate_from(const nlohmann::json& j) {
  return {j.at("candidate_id").get<int>(), parse_animal_class(j.at("class").get<std::string>()),
          bbox_from(j.at("bbox")), j.at("confidence").get<double>()};
}

bool is_available(TaskState s) { return s == TaskState::pending || s == TaskState::single_reviewed; }

TaskState base_state(const ReviewTask& t) {
  return t.reviews.empty() ? TaskState::pending : TaskState::single_reviewed;
}

/// Kuhn's augmenting-path search for a perfect matching.
bool try_augment(std::size_t u, const std::vector<std::vector<std::size_t>>& adj, std::vector<bool>& seen,
                 std::vector<std::optional<std::size_t>>& owner) {
  for (std::size_t v : adj[u]) {
    if (seen[v]) continue;
    seen[v] = true;
    if (!owner[v] || try_augment(*owner[v], adj, seen, owner)) {
      owner[v] = u;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(TaskState s) { return kStateNames[static_cast<int>(s)]; }
std::string_view to_string(BoxAction a) { return kActionNames[static_cast<int>(a)]; }

TaskState parse_task_state(std::string_view s) {
  for (int i = 0; i < 6; ++i) {
    if (kStateNames[i] == s) return static_cast<TaskState>(i);
  }
  throw InvalidInput("unknown task state '" + std::string(s) + "'");
}

BoxAction parse_box_action(std::string_view s) {
  for (int i = 0; i < 3; ++i) {
    if (kActionNames[i] == s) return static_cast<BoxAction>(i);
  }
  throw InvalidInput("unknown box action '" + std::string(s) + "'");
}

std::vector<const VerdictBox*> Verdict::asserted() const {
  std::vector<const VerdictBox*> out;
  for (const auto& b : boxes) {
    if (b.action != BoxAction::reject_model) out.push_back(&b);
  }
  return out;
}

bool ReviewTask::reviewed_by(const std::string& observer_id) const {
  return std::any_of(reviews.begin(), reviews.end(), [&](const Verdict& v) { return v.observer_id == observer_id; });
}

ojson to_json(const Verdict& v) {
  ojson j;
  j["verdict_id"] = v.verdict_id;
  j["image_id"] = v.image_id;
  j["observer_id"] = v.observer_id;
  j["declared_empty"] = v.declared_empty;
  j["duration_s"] = v.duration_s;
  j["submitted_at"] = v.submitted_at;
  ojson boxes = ojson::array();
  for (const auto& b : v.boxes) {
    ojson jb;
    jb["action"] = std::string(to_string(b.action));
    if (b.candidate_id) jb["candidate_id"] = *b.candidate_id;
    jb["class"] = std::string(to_string(b.cls));
    jb["bbox"] = bbox_json(b.bbox);
    boxes.push_back(std::move(jb));
  }
  j["boxes"] = std::move(boxes);
  return j;
}

Verdict verdict_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw InvalidInput("verdict must be a JSON object");
    Verdict v;
    v.verdict_id = j.value("verdict_id", std::string());
    v.image_id = j.value("image_id", std::string());
    v.observer_id = j.at("observer_id").get<std::string>();
    v.declared_empty = j.value("declared_empty", false);
    v.duration_s = j.value("duration_s", 0.0);
    v.submitted_at = j.value("submitted_at", 0.0);
    for (const auto& jb : j.value("boxes", nlohmann::json::array())) {
      VerdictBox b;
      b.action = parse_box_action(jb.at("action").get<std::string>());
      if (jb.contains("candidate_id")) b.candidate_id = jb.at("candidate_id").get<int>();
      if (jb.contains("class")) b.cls = parse_animal_class(jb.at("class").get<std::string>());
      if (jb.contains("bbox")) b.bbox = bbox_from(jb.at("bbox"));
      v.boxes.push_back(b);
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed verdict: ") + e.what());
  }
}

ojson to_json(const ReviewTask& t) {
  ojson j;
  j["image_id"] = t.image_id;
  j["file"] = t.file;
  j["census_eligible"] = t.census_eligible;
  j["state"] = std::string(to_string(t.state));
  j["created_seq"] = t.created_seq;
  ojson cands = ojson::array();
  for (const auto& c : t.candidates) cands.push_back(candidate_json(c));
  j["candidates"] = std::move(cands);
  ojson reviews = ojson::array();
  for (const auto& v : t.reviews) reviews.push_back(to_json(v));
  j["reviews"] = std::move(reviews);
  j["lease"] = t.lease ? ojson{{"observer_id", t.lease->observer_id}, {"expiry", t.lease->expiry}} : ojson(nullptr);
  j["agreement"] = t.agreement ? ojson(*t.agreement) : ojson(nullptr);
  j["adjudication"] = t.adjudication ? to_json(*t.adjudication) : ojson(nullptr);
  return j;
}

namespace {

ReviewTask task_from_json(const nlohmann::json& j) {
  ReviewTask t;
  t.image_id = j.at("image_id").get<std::string>();
  t.file = j.at("file").get<std::string>();
  t.census_eligible = j.at("census_eligible").get<bool>();
  t.state = parse_task_state(j.at("state").get<std::string>());
  t.created_seq = j.at("created_seq").get<std::uint64_t>();
  for (const auto& c : j.at("candidates")) t.candidates.push_back(candidate_from(c));
  for (const auto& v : j.at("reviews")) t.reviews.push_back(verdict_from_json(v));
  if (!j.at("lease").is_null()) {
    t.lease = Lease{j["lease"].at("observer_id").get<std::string>(), j["lease"].at("expiry").get<double>()};
  }
  if (!j.at("agreement").is_null()) t.agreement = j["agreement"].get<bool>();
  if (!j.at("adjudication").is_null()) t.adjudication = verdict_from_json(j["adjudication"]);
  return t;
}

}  // namespace

ojson to_json(const VerificationEvent& e) {
  ojson j;
  j["seq"] = e.seq;
  j["kind"] = e.kind;
  j["at"] = e.at;
  j["payload"] = e.payload;
  return j;
}

VerificationEvent event_from_json(const nlohmann::json& j) {
  try {
    VerificationEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = j.at("kind").get<std::string>();
    e.at = j.at("at").get<double>();
    e.payload = ojson::parse(j.at("payload").dump());
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw CorruptLog(std::string("malformed event: ") + ex.what());
  }
}

std::vector<VerificationEvent> parse_event_log(std::string_view jsonl) {
  std::vector<VerificationEvent> out;
  try {
    for_each_jsonl_text(jsonl, [&](const nlohmann::json& j, std::size_t line) {
      try {
        out.push_back(event_from_json(j));
      } catch (const CorruptLog& e) {
        throw CorruptLog(std::string(e.what()) + " (line " + std::to_string(line) + ")");
      }
    });
  } catch (const ValidationError& e) {
    throw CorruptLog(e.what());
  }
  return out;
}

std::vector<VerificationEvent> load_event_log(const std::string& path) { return parse_event_log(read_file(path)); }

std::string event_log_to_jsonl(const std::vector<VerificationEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> correspond(const Verdict& a, const Verdict& b,
                                                            double iou_threshold) {
  const auto xa = a.asserted();
  const auto xb = b.asserted();
  // Candidate partners in descending IoU so augmenting paths prefer tight fits.
  std::vector<std::vector<std::size_t>> adj(xa.size());
  for (std::size_t i = 0; i < xa.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> edges;
    for (std::size_t k = 0; k < xb.size(); ++k) {
      if (xa[i]->cls != xb[k]->cls) continue;
      const double o = iou(xa[i]->bbox, xb[k]->bbox);
      if (o >= iou_threshold) edges.emplace_back(-o, k);
    }
    std::sort(edges.begin(), edges.end());
    for (const auto& [neg, k] : edges) adj[i].push_back(k);
  }
  std::vector<std::optional<std::size_t>> owner(xb.size());
  for (std::size_t i = 0; i < xa.size(); ++i) {
    std::vector<bool> seen(xb.size(), false);
    try_augment(i, adj, seen, owner);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < owner.size(); ++k) {
    if (owner[k]) pairs.emplace_back(*owner[k], k);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

bool verdicts_agree(const Verdict& a, const Verdict& b, double iou_threshold) {
  const auto na = a.asserted().size();
  if (na != b.asserted().size()) return false;
  std::map<AnimalClass, int> per_class;
  for (const auto* p : a.asserted()) ++per_class[p->cls];
  for (const auto* p : b.asserted()) --per_class[p->cls];
  for (const auto& [c, n] : per_class) {
    if (n != 0) return false;
  }
  return correspond(a, b, iou_threshold).size() == na;
}

std::optional<double> ReviewStats::agreement_rate() const {
  const std::size_t n = agreed + disagreed;
  if (n == 0) return std::nullopt;
  return static_cast<double>(agreed) / static_cast<double>(n);
}

ojson to_json(const ReviewStats& s) {
  ojson j;
  j["tasks"] = s.tasks;
  ojson states = ojson::object();
  for (int i = 0; i < 6; ++i) {
    const auto st = static_cast<TaskState>(i);
    const auto it = s.by_state.find(st);
    states[std::string(to_string(st))] = it == s.by_state.end() ? 0 : it->second;
  }
  j["by_state"] = std::move(states);
  j["agreed"] = s.agreed;
  j["disagreed"] = s.disagreed;
  const auto rate = s.agreement_rate();
  j["agreement_rate"] = rate ? ojson(*rate) : ojson(nullptr);
  ojson obs = ojson::array();
  for (const auto& o : s.observers) {
    obs.push_back({{"observer_id", o.observer_id},
                   {"reviews", o.reviews},
                   {"total_duration_s", o.total_duration_s},
                   {"images_per_hour", o.images_per_hour}});
  }
  j["observers"] = std::move(obs);
  j["candidates_confirmed"] = s.candidates_confirmed;
  j["candidates_rejected"] = s.candidates_rejected;
  j["manual_boxes"] = s.manual_boxes;
  j["last_seq"] = s.last_seq;
  return j;
}

ReviewService::ReviewService(ReviewOptions options) : options_(std::move(options)) {
  if (!(options_.lease_ttl_s > 0.0)) throw InvalidInput("lease TTL must be positive");
  if (!(options_.agreement_iou > 0.0 && options_.agreement_iou <= 1.0)) {
    throw InvalidInput("agreement IoU must lie in (0, 1]");
  }
}

void ReviewService::set_event_sink(EventSink sink) {
  std::lock_guard lock(mutex_);
  sink_ = std::move(sink);
}

double ReviewService::clock_now() const {
  if (options_.clock) return options_.clock();
  const auto d = std::chrono::system_clock::now().time_since_epoch();
  return std::chrono::duration<double>(d).count();
}

double ReviewService::now() const { return clock_now(); }

void ReviewService::emit(std::string kind, ojson payload) {
  VerificationEvent e{seq_ + 1, std::move(kind), clock_now(), std::move(payload)};
  apply(e);
  if (options_.keep_log) log_.push_back(e);
  if (sink_) sink_(e);
}

std::size_t ReviewService::index_of(const std::string& image_id) const {
  const auto it = by_id_.find(image_id);
  if (it == by_id_.end()) throw NotFound("no review task for image '" + image_id + "'");
  return it->second;
}

void ReviewService::set_state(std::size_t idx, TaskState s) {
  tasks_[idx].state = s;
  if (is_available(s)) available_.insert(idx);
  else available_.erase(idx);
}

void ReviewService::apply(const VerificationEvent& e) {
  const auto& p = e.payload;
  auto release = [&](std::size_t idx) {
    auto& t = tasks_[idx];
    if (!t.lease) return;
    expiries_.erase({t.lease->expiry, idx});
    held_.erase(t.lease->observer_id);
    t.lease.reset();
  };

  if (e.kind == "task_created") {
    ReviewTask t;
    t.image_id = p.at("image_id").get<std::string>();
    t.file = p.at("file").get<std::string>();
    t.census_eligible = p.at("census_eligible").get<bool>();
    t.created_seq = e.seq;
    if (by_id_.count(t.image_id)) throw StateError("task '" + t.image_id + "' created twice");
    by_id_.emplace(t.image_id, tasks_.size());
    tasks_.push_back(std::move(t));
    set_state(tasks_.size() - 1, TaskState::pending);
  } else if (e.kind == "candidates_seeded") {
    const std::size_t idx = index_of(p.at("image_id").get<std::string>());
    auto& t = tasks_[idx];
    if (!t.reviews.empty()) throw StateError("candidates seeded after a review of '" + t.image_id + "'");
    t.candidates.clear();
    for (const auto& c : p.at("candidates")) t.candidates.push_back(candidate_from(c));
  } else if (e.kind == "leased") {
    const std::size_t idx = index_of(p.at("image_id").get<std::string>());
    auto& t = tasks_[idx];
    const std::string observer = p.at("observer_id").get<std::string>();
    if (!is_available(t.state)) throw StateError("task '" + t.image_id + "' is not available for lease");
    if (t.reviewed_by(observer)) throw StateError("observer '" + observer + "' already reviewed '" + t.image_id + "'");
    if (held_.count(observer)) throw StateError("observer '" + observer + "' already holds a lease");
    t.lease = Lease{observer, p.at("expiry").get<double>()};
    expiries_.insert({t.lease->expiry, idx});
    held_[observer] = idx;
    set_state(idx, TaskState::leased);
  } else if (e.kind == "lease_expired") {
    const std::size_t idx = index_of(p.at("image_id").get<std::string>());
    auto& t = tasks_[idx];
    if (!t.lease || t.lease->observer_id != p.at("observer_id").get<std::string>()) {
      throw StateError("lease_expired for a lease that is not held");
    }
    release(idx);
    set_state(idx, base_state(t));
  } else if (e.kind == "verdict_submitted") {
    Verdict v = verdict_from_json(p.at("verdict"));
    const std::size_t idx = index_of(v.image_id);
    auto& t = tasks_[idx];
    if (!is_available(t.state) && t.state != TaskState::leased) {
      throw StateError("task '" + t.image_id + "' already has two reviews");
    }
    if (t.reviewed_by(v.observer_id)) throw StateError("duplicate verdict by '" + v.observer_id + "'");
    if (t.lease && t.lease->observer_id != v.observer_id) {
      throw StateError("task '" + t.image_id + "' is leased to '" + t.lease->observer_id + "'");
    }
    release(idx);
    t.reviews.push_back(std::move(v));
    if (t.reviews.size() == 1) {
      set_state(idx, TaskState::single_reviewed);
    } else {
      t.agreement = verdicts_agree(t.reviews[0], t.reviews[1], options_.agreement_iou);
      set_state(idx, *t.agreement ? TaskState::double_reviewed : TaskState::conflict);
    }
  } else if (e.kind == "adjudicated") {
    Verdict v = verdict_from_json(p.at("verdict"));
    const std::size_t idx = index_of(v.image_id);
    auto& t = tasks_[idx];
    if (t.state != TaskState::conflict) throw StateError("task '" + t.image_id + "' is not in conflict");
    t.adjudication = std::move(v);
    set_state(idx, TaskState::adjudicated);
  } else {
    throw StateError("unknown event kind '" + e.kind + "'");
  }
  seq_ = e.seq;
  last_at_ = e.at;
}

void ReviewService::expire_due() {
  const double t = clock_now();
  while (!expiries_.empty() && expiries_.begin()->first <= t) {
    const std::size_t idx = expiries_.begin()->second;
    emit("lease_expired", {{"image_id", tasks_[idx].image_id}, {"observer_id", tasks_[idx].lease->observer_id}});
  }
}

std::size_t ReviewService::create_tasks(const std::vector<ImageRecord>& records) {
  std::lock_guard lock(mutex_);
  std::size_t created = 0;
  for (const auto& r : records) {
    if (by_id_.count(r.image_id)) continue;
    emit("task_created", {{"image_id", r.image_id}, {"file", r.file}, {"census_eligible", r.census_eligible}});
    ++created;
  }
  return created;
}

std::size_t ReviewService::seed_candidates(const std::vector<Detection>& detections, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("candidate threshold must lie in [0, 1]");
  std::lock_guard lock(mutex_);
  std::map<std::size_t, std::vector<const Detection*>> per_task;
  for (const auto& d : detections) {
    const std::size_t idx = index_of(d.image_id);
    if (d.confidence >= tau) per_task[idx].push_back(&d);
  }
  for (const auto& [idx, dets] : per_task) {
    if (!tasks_[idx].reviews.empty()) {
      throw StateError("cannot seed candidates for '" + tasks_[idx].image_id + "': already reviewed");
    }
  }
  std::size_t seeded = 0;
  for (auto& [idx, dets] : per_task) {
    std::stable_sort(dets.begin(), dets.end(), [](const Detection* a, const Detection* b) {
      if (a->confidence != b->confidence) return a->confidence > b->confidence;
      if (a->bbox.x != b->bbox.x) return a->bbox.x < b->bbox.x;
      return a->bbox.y < b->bbox.y;
    });
    ojson cands = ojson::array();
    for (std::size_t k = 0; k < dets.size(); ++k) {
      cands.push_back(candidate_json({static_cast<int>(k), dets[k]->cls, dets[k]->bbox, dets[k]->confidence}));
    }
    seeded += dets.size();
    emit("candidates_seeded", {{"image_id", tasks_[idx].image_id}, {"tau", tau}, {"candidates", std::move(cands)}});
  }
  return seeded;
}

std::optional<ReviewTask> ReviewService::lease_next(const std::string& observer_id) {
  if (observer_id.empty()) throw InvalidInput("observer id must not be empty");
  std::lock_guard lock(mutex_);
  expire_due();
  if (const auto it = held_.find(observer_id); it != held_.end()) return tasks_[it->second];
  for (std::size_t idx : available_) {
    if (tasks_[idx].reviewed_by(observer_id)) continue;
    emit("leased", {{"image_id", tasks_[idx].image_id},
                    {"observer_id", observer_id},
                    {"expiry", clock_now() + options_.lease_ttl_s}});
    return tasks_[idx];
  }
  return std::nullopt;
}

Verdict ReviewService::prepare(const ReviewTask& task, Verdict v, bool expert) const {
  if (v.observer_id.empty()) throw InvalidInput("verdict lacks an observer id");
  if (!v.image_id.empty() && v.image_id != task.image_id) {
    throw InvalidInput("verdict for '" + v.image_id + "' submitted to task '" + task.image_id + "'");
  }
  v.image_id = task.image_id;
  if (!(v.duration_s >= 0.0) || !std::isfinite(v.duration_s)) throw InvalidInput("duration must be non-negative");
  std::set<int> referenced;
  for (auto& b : v.boxes) {
    if (b.action == BoxAction::add_manual) {
      if (b.candidate_id) throw InvalidInput("add_manual boxes must not reference a candidate");
      if (!(b.bbox.w > 0.0 && b.bbox.h > 0.0)) throw InvalidInput("manual box needs positive width and height");
      continue;
    }
    if (!b.candidate_id) throw InvalidInput(std::string(to_string(b.action)) + " requires a candidate_id");
    const auto it = std::find_if(task.candidates.begin(), task.candidates.end(),
                                 [&](const Candidate& c) { return c.candidate_id == *b.candidate_id; });
    if (it == task.candidates.end()) {
      throw InvalidInput("unknown candidate " + std::to_string(*b.candidate_id) + " for '" + task.image_id + "'");
    }
    if (!referenced.insert(*b.candidate_id).second) {
      throw InvalidInput("candidate " + std::to_string(*b.candidate_id) + " referenced twice");
    }
    b.bbox = it->bbox;
    b.cls = it->cls;
  }
  if (v.declared_empty == !v.asserted().empty()) {
    throw InvalidInput("a verdict must either declare the image empty or assert at least one box");
  }
  v.verdict_id = (expert ? "a" : "v") + std::to_string(seq_ + 1);
  v.submitted_at = clock_now();
  return v;
}

ReviewTask ReviewService::submit_verdict(const std::string& image_id, Verdict verdict) {
  std::lock_guard lock(mutex_);
  const std::size_t idx = index_of(image_id);
  expire_due();
  const ReviewTask& t = tasks_[idx];
  if (t.state == TaskState::double_reviewed || t.state == TaskState::conflict || t.state == TaskState::adjudicated) {
    throw StateError("task '" + image_id + "' already has two reviews");
  }
  if (t.reviewed_by(verdict.observer_id)) {
    throw StateError("duplicate verdict: '" + verdict.observer_id + "' already reviewed '" + image_id + "'");
  }
  if (t.lease && t.lease->observer_id != verdict.observer_id) {
    throw StateError("stale lease: task '" + image_id + "' is leased to '" + t.lease->observer_id + "'");
  }
  Verdict v = prepare(t, std::move(verdict), false);
  emit("verdict_submitted", {{"image_id", image_id}, {"verdict", to_json(v)}});
  return tasks_[idx];
}

ReviewTask ReviewService::adjudicate(const std::string& image_id, Verdict verdict) {
  std::lock_guard lock(mutex_);
  const std::size_t idx = index_of(image_id);
  expire_due();
  if (tasks_[idx].state != TaskState::conflict) {
    throw StateError("task '" + image_id + "' is " + std::string(to_string(tasks_[idx].state)) + ", not in conflict");
  }
  Verdict v = prepare(tasks_[idx], std::move(verdict), true);
  emit("adjudicated", {{"image_id", image_id}, {"verdict", to_json(v)}});
  return tasks_[idx];
}

std::size_t ReviewService::expire_leases() {
  std::lock_guard lock(mutex_);
  const auto before = seq_;
  expire_due();
  return static_cast<std::size_t>(seq_ - before);
}

ReviewTask ReviewService::task(const std::string& image_id) const {
  std::lock_guard lock(mutex_);
  return tasks_[index_of(image_id)];
}

std::vector<ReviewTask> ReviewService::tasks() const {
  std::lock_guard lock(mutex_);
  return tasks_;
}

ReviewStats ReviewService::stats() const {
  std::lock_guard lock(mutex_);
  ReviewStats s;
  s.tasks = tasks_.size();
  s.last_seq = seq_;
  std::map<std::string, ObserverStats> obs;
  for (const auto& t : tasks_) {
    ++s.by_state[t.state];
    if (t.agreement) ++(*t.agreement ? s.agreed : s.disagreed);
    for (const auto& v : t.reviews) {
      auto& o = obs[v.observer_id];
      o.observer_id = v.observer_id;
      ++o.reviews;
      o.total_duration_s += v.duration_s;
      for (const auto& b : v.boxes) {
        if (b.action == BoxAction::confirm_model) ++s.candidates_confirmed;
        else if (b.action == BoxAction::reject_model) ++s.candidates_rejected;
        else ++s.manual_boxes;
      }
    }
  }
  for (auto& [id, o] : obs) {
    if (o.total_duration_s > 0.0) o.images_per_hour = static_cast<double>(o.reviews) * 3600.0 / o.total_duration_s;
    s.observers.push_back(o);
  }
  return s;
}

std::vector<ImageReview> ReviewService::census_reviews() const {
  std::lock_guard lock(mutex_);
  std::vector<ImageReview> out;
  out.reserve(tasks_.size());
  for (const auto& t : tasks_) out.push_back({t.image_id, t.reviews, t.adjudication});
  return out;
}

std::vector<VerificationEvent> ReviewService::events() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::uint64_t ReviewService::last_seq() const {
  std::lock_guard lock(mutex_);
  return seq_;
}

ojson ReviewService::state_json_unlocked() const {
  ojson j;
  j["schema"] = "wildcensus-review-state/1";
  j["last_seq"] = seq_;
  ojson tasks = ojson::array();
  for (const auto& t : tasks_) tasks.push_back(to_json(t));
  j["tasks"] = std::move(tasks);
  return j;
}

ojson ReviewService::state_json() const {
  std::lock_guard lock(mutex_);
  return state_json_unlocked();
}

void ReviewService::load_state(const nlohmann::json& state) {
  try {
    if (state.value("schema", std::string()) != "wildcensus-review-state/1") {
      throw CorruptLog("snapshot has an unexpected schema");
    }
    seq_ = state.at("last_seq").get<std::uint64_t>();
    for (const auto& jt : state.at("tasks")) {
      ReviewTask t = task_from_json(jt);
      const std::size_t idx = tasks_.size();
      if (!by_id_.emplace(t.image_id, idx).second) throw CorruptLog("snapshot repeats task '" + t.image_id + "'");
      if (t.lease) {
        expiries_.insert({t.lease->expiry, idx});
        held_[t.lease->observer_id] = idx;
      }
      const TaskState s = t.state;
      tasks_.push_back(std::move(t));
      set_state(idx, s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptLog(std::string("malformed snapshot: ") + e.what());
  } catch (const InvalidInput& e) {
    throw CorruptLog(std::string("malformed snapshot: ") + e.what());
  }
}

void ReviewService::append_from(const std::vector<VerificationEvent>& log, std::uint64_t after) {
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].seq != i + 1) {
      const bool dup = log[i].seq <= i;
      throw CorruptLog(std::string(dup ? "duplicate" : "gap before") + " sequence number " +
                       std::to_string(log[i].seq) + " at position " + std::to_string(i + 1));
    }
  }
  if (log.size() < after) throw CorruptLog("event log ends before the snapshot sequence number");
  for (std::size_t i = after; i < log.size(); ++i) {
    try {
      apply(log[i]);
    } catch (const CorruptLog&) {
      throw;
    } catch (const std::exception& e) {
      throw CorruptLog("event " + std::to_string(log[i].seq) + " (" + log[i].kind + "): " + e.what());
    }
    if (options_.keep_log) log_.push_back(log[i]);
  }
}

std::unique_ptr<ReviewService> ReviewService::replay(const std::vector<VerificationEvent>& log,
                                                     ReviewOptions options) {
  auto svc = std::make_unique<ReviewService>(std::move(options));
  svc->append_from(log, 0);
  return svc;
}

std::unique_ptr<ReviewService> ReviewService::restore(const nlohmann::json& snapshot,
                                                      const std::vector<VerificationEvent>& log,
                                                      ReviewOptions options) {
  auto svc = std::make_unique<ReviewService>(std::move(options));
  svc->load_state(snapshot);
  const std::uint64_t after = svc->seq_;
  if (svc->options_.keep_log) svc->log_.assign(log.begin(), log.begin() + static_cast<std::ptrdiff_t>(std::min<std::uint64_t>(after, log.size())));
  svc->append_from(log, after);
  return svc;
}

struct ReviewStore::Appender {
  std::ofstream out;
};

ReviewStore::ReviewStore(const std::string& dir, ReviewOptions options, std::uint64_t snapshot_every)
    : dir_(dir), snapshot_every_(snapshot_every) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create store directory '" + dir_ + "': " + ec.message());
  const std::string events_path = join_path(dir_, "events.jsonl");
  const std::string snapshot_path = join_path(dir_, "snapshot.json");
  std::vector<VerificationEvent> log;
  if (fs::exists(events_path)) log = load_event_log(events_path);
  if (fs::exists(snapshot_path)) {
    service_ = ReviewService::restore(read_json_file(snapshot_path), log, std::move(options));
  } else {
    service_ = ReviewService::replay(log, std::move(options));
  }
  appender_ = std::make_unique<Appender>();
  appender_->out.open(events_path, std::ios::binary | std::ios::app);
  if (!appender_->out) throw IoError("cannot open '" + events_path + "' for appending");
  service_->set_event_sink([this, snapshot_path](const VerificationEvent& e) {
    appender_->out << to_json(e).dump() << '\n';
    appender_->out.flush();
    if (!appender_->out) throw IoError("append to the event log failed");
    if (snapshot_every_ && e.seq % snapshot_every_ == 0) {
      write_file(snapshot_path + ".tmp", service_->state_json_unlocked().dump() + "\n");
      std::filesystem::rename(snapshot_path + ".tmp", snapshot_path);
    }
  });
}

ReviewStore::~ReviewStore() = default;

void ReviewStore::write_snapshot() {
  const std::string snapshot_path = join_path(dir_, "snapshot.json");
  write_file(snapshot_path + ".tmp", service_->state_json().dump() + "\n");
  std::filesystem::rename(snapshot_path + ".tmp", snapshot_path);
}

}  // namespace wildcensus
