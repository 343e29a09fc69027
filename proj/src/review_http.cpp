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

#include "wildcensus/review_http.hpp"

#include <filesystem>

#include <httplib.h>

#include "wildcensus/error.hpp"
#include "wildcensus/io.hpp"

namespace wildcensus {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void reply(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

/// Runs `fn`, translating toolkit errors into HTTP status codes.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    reply(res, 404, {{"error", e.what()}});
  } catch (const StateError& e) {
    reply(res, 409, {{"error", e.what()}});
  } catch (const InvalidInput& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

ojson task_body(const ReviewTask& t) {
  ojson j = to_json(t);
  j["image_url"] = "/api/images/" + t.image_id + "/file";
  return j;
}

std::string observer_of(const httplib::Request& req) {
  if (req.has_param("observer")) return req.get_param_value("observer");
  return req.get_header_value("X-Observer-Id");
}

Verdict parse_body(const httplib::Request& req) {
  const auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw InvalidInput("request body is not valid JSON");
  Verdict v = verdict_from_json([&] {
    auto copy = j;
    if (!copy.contains("observer_id") && copy.is_object()) copy["observer_id"] = observer_of(req);
    return copy;
  }());
  return v;
}

std::string content_type(const fs::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  return "application/octet-stream";
}

}  // namespace

struct ReviewHttpServer::Impl {
  ReviewService& service;
  fs::path root;
  httplib::Server server;

  Impl(ReviewService& s, std::string image_root) : service(s), root(fs::weakly_canonical(fs::absolute(image_root))) {
    server.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto t = service.lease_next(observer_of(req));
        if (!t) {
          res.status = 204;
          return;
        }
        reply(res, 200, task_body(*t));
      });
    });
    server.Post(R"(/api/tasks/([^/]+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, task_body(service.submit_verdict(req.matches[1], parse_body(req)))); });
    });
    server.Post(R"(/api/tasks/([^/]+)/adjudicate)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, task_body(service.adjudicate(req.matches[1], parse_body(req)))); });
    });
    server.Get(R"(/api/tasks/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, task_body(service.task(req.matches[1]))); });
    });
    server.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, to_json(service.stats())); });
    });
    server.Get(R"(/api/images/([^/]+)/file)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const ReviewTask t = service.task(req.matches[1]);
        const fs::path p = fs::weakly_canonical(root / t.file);
        const auto rel = p.lexically_relative(root);
        if (rel.empty() || *rel.begin() == "..") throw NotFound("image path escapes the image root");
        if (!fs::is_regular_file(p)) throw NotFound("image file '" + t.file + "' not found");
        res.status = 200;
        res.set_content(read_file(p.string()), content_type(p));
      });
    });
  }
};

ReviewHttpServer::ReviewHttpServer(ReviewService& service, std::string image_root)
    : impl_(std::make_unique<Impl>(service, std::move(image_root))) {}

ReviewHttpServer::~ReviewHttpServer() { stop(); }

int ReviewHttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ReviewHttpServer::listen() {
  if (!impl_->server.listen_after_bind()) throw IoError("HTTP server stopped with an error");
}

void ReviewHttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace wildcensus
