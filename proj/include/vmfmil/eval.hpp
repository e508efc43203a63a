// Copyright 2026 The vmfmil Authors. All Rights Reserved.
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

/// \file eval.hpp
///
/// Box geometry and detection metrics (CorLoc, AP, mAP). IoU thresholds are
/// inclusive: a match needs IoU ≥ threshold.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmfmil/dataio.hpp"
#include "vmfmil/types.hpp"

namespace vmfmil {

/// Intersection over union. Throws DomainError on a degenerate box.
double iou(const Box& a, const Box& b);

/// Greedy non-maximum suppression. Visits boxes by descending score (ties by
/// lower index) and drops any box with IoU ≥ `iou_thresh` to a kept one.
/// Returns kept indices in visiting order.
std::vector<int> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_thresh);

struct Detection {
  std::string image_id;
  std::string class_id;
  Box box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class ApInterpolation { all_point, eleven_point };

/// CorLoc (percent) of `class_id` over the images in `images` whose labels
/// contain it: an image is a hit when its single highest-scoring detection of
/// the class overlaps a gt box of the class at IoU ≥ `iou_thresh`. Images
/// without any detection count as misses. Returns nullopt when no image
/// carries the label.
std::optional<double> corloc(std::span<const Detection> detections,
                             std::span<const ImageRecord> images, std::string_view class_id,
                             double iou_thresh = 0.5);

/// One selected box per image, with no class attached.
struct Selection {
  std::string image_id;
  Box box;
};

/// CorLoc (percent) of class-free selections against the gt boxes of
/// `target_class`.
double class_agnostic_corloc(std::span<const Selection> selections,
                             std::span<const ImageRecord> images, std::string_view target_class,
                             double iou_thresh = 0.5);

/// Average precision of `class_id` detections over `images`. Detections are
/// ranked by descending score; each gt box matches at most once (a detection
/// takes the unmatched gt of highest IoU). Returns nullopt when the images
/// hold no gt instance of the class.
std::optional<double> average_precision(std::span<const Detection> detections,
                                        std::span<const ImageRecord> images,
                                        std::string_view class_id, double iou_thresh = 0.5,
                                        ApInterpolation interp = ApInterpolation::all_point);

/// Mean over defined APs; throws DomainError if none is defined.
double mean_ap(std::span<const std::optional<double>> aps);

/// Mean with a normal-approximation 95% half-width.
struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
  int n = 0;

  std::string format(int precision = 1) const;  // "34.8 ± 1.2"
};

/// Binomial proportion (percent) with a normal-approximation interval.
Interval binomial_ci95(int hits, int trials);
/// Sample mean with 1.96·s/√n half-width.
Interval mean_ci95(std::span<const double> values);

/// Per-class metrics of one episode.
struct EpisodeEvaluation {
  std::map<std::string, double> corloc;
  std::map<std::string, double> ap;
};

/// Evaluates `detections` on the query images for every class in `classes`.
/// Detections on images outside `images` raise ProtocolError.
EpisodeEvaluation evaluate_episode(std::span<const Detection> detections,
                                   std::span<const ImageRecord> images,
                                   std::span<const std::string> classes, double iou_thresh = 0.5,
                                   ApInterpolation interp = ApInterpolation::all_point);

struct ClassMetrics {
  std::optional<double> corloc;
  std::optional<double> ap;
};

struct MetricsReport {
  std::map<std::string, ClassMetrics> per_class;
  double corloc_mean = 0.0;
  double map = 0.0;
  int n_episodes = 0;
  Interval corloc_ci95;
  Interval map_ci95;
};

/// Per-episode metrics averaged over episodes. CorLoc is in percent, AP and
/// mAP are fractions in [0, 1].
MetricsReport aggregate(std::span<const EpisodeEvaluation> episodes);

/// {per_class: {c: {corloc, ap}}, corloc_mean, map, n_episodes, ci95}
nlohmann::json to_json(const MetricsReport& report);

/// Table-style text: one column per class plus the mean.
std::string format_class_table(const std::map<std::string, double>& per_class,
                               std::string_view mean_label, double mean, int precision = 1);

nlohmann::json detection_to_json(const Detection& detection);
Detection detection_from_json(const nlohmann::json& j);

}  // namespace vmfmil
