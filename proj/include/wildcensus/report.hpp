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

/// \file report.hpp
/// Self-contained SVG plots of evaluation output, and readers for the CSV
/// files the plots are rendered from.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "wildcensus/evaluation.hpp"

namespace wildcensus {

/// Readers for pr_curve.csv, sweep.csv and confusion.csv. Malformed rows
/// throw ValidationError with the line number.
std::vector<PRPoint> parse_pr_csv(std::string_view text);
std::vector<SweepPoint> parse_sweep_csv(std::string_view text);
Eigen::MatrixXi parse_confusion_csv(std::string_view text);

/// Precision against recall as a step plot, axes fixed to [0, 1].
std::string svg_pr_curve(std::span<const PRPoint> points, std::string_view title = "Precision-recall");
/// AP against threshold; the optimum is marked when the profile is non-empty.
std::string svg_sweep(std::span<const SweepPoint> profile, std::string_view title = "AP by confidence threshold");
/// Heat map of image counts, labels down, detections across.
std::string svg_confusion(const Eigen::MatrixXi& cells, std::string_view title = "Count confusion");

/// Renders <name>.svg next to each of pr_curve.csv, sweep.csv and
/// confusion.csv found in `in_dir`, writing into `out_dir`. Returns the
/// written file names; none found is an InvalidInput.
std::vector<std::string> render_report(const std::string& in_dir, const std::string& out_dir);

}  // namespace wildcensus
