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

/// \file review_http.hpp
/// JSON-over-HTTP front end of the review service.
///
///     GET  /api/tasks/next?observer=ID     200 task | 204 queue empty
///     POST /api/tasks/{image_id}/verdict    200 task
///     POST /api/tasks/{image_id}/adjudicate 200 task
///     GET  /api/tasks/{image_id}            200 task (with image_url)
///     GET  /api/stats                       200 stats
///     GET  /api/images/{image_id}/file      200 image bytes
///
/// The observer may also be given in an X-Observer-Id header. Errors are
/// {"error": message} with 400 (invalid input), 404 (unknown task or file)
/// or 409 (state conflict).

#pragma once

#include <memory>
#include <string>

#include "wildcensus/review_service.hpp"

namespace wildcensus {

class ReviewHttpServer {
 public:
  /// Image files resolve against `image_root`; paths escaping it are refused.
  ReviewHttpServer(ReviewService& service, std::string image_root);
  ~ReviewHttpServer();
  ReviewHttpServer(const ReviewHttpServer&) = delete;
  ReviewHttpServer& operator=(const ReviewHttpServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wildcensus
