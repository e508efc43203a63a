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

#include "vmfmil/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace vmfmil {

using nlohmann::json;

double iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) throw DomainError("iou of a degenerate box");
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

namespace {

// Indices ordered by descending score, ties by ascending index.
std::vector<int> rank_by_score(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

std::unordered_map<std::string_view, const ImageRecord*> by_id(std::span<const ImageRecord> images) {
  std::unordered_map<std::string_view, const ImageRecord*> map;
  for (const auto& record : images) map.emplace(record.image_id, &record);
  return map;
}

}  // namespace

std::vector<int> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_thresh) {
  if (boxes.size() != scores.size()) {
    throw DimensionMismatch(
        fmt::format("nms got {} boxes and {} scores", boxes.size(), scores.size()));
  }
  std::vector<int> kept;
  for (int i : rank_by_score(scores)) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](int k) {
      return iou(boxes[i], boxes[k]) >= iou_thresh;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::optional<double> corloc(std::span<const Detection> detections,
                             std::span<const ImageRecord> images, std::string_view class_id,
                             double iou_thresh) {
  std::unordered_map<std::string_view, const Detection*> top;
  for (const auto& det : detections) {
    if (det.class_id != class_id) continue;
    auto [it, inserted] = top.try_emplace(det.image_id, &det);
    if (!inserted && det.score > it->second->score) it->second = &det;
  }
  int evaluated = 0;
  int hits = 0;
  for (const auto& record : images) {
    if (!record.has_label(class_id)) continue;
    bool has_gt = false;
    bool hit = false;
    const auto it = top.find(record.image_id);
    for (const auto& g : record.gt) {
      if (g.label != class_id) continue;
      has_gt = true;
      if (it != top.end() && iou(it->second->box, g.box) >= iou_thresh) hit = true;
    }
    if (!has_gt) {
      throw ProtocolError(fmt::format("image '{}' is labeled '{}' but has no gt box of it",
                                      record.image_id, class_id));
    }
    ++evaluated;
    hits += hit ? 1 : 0;
  }
  if (evaluated == 0) return std::nullopt;
  return 100.0 * hits / evaluated;
}

double class_agnostic_corloc(std::span<const Selection> selections,
                             std::span<const ImageRecord> images, std::string_view target_class,
                             double iou_thresh) {
  const auto records = by_id(images);
  if (selections.empty()) throw ProtocolError("class-agnostic CorLoc over zero selections");
  int hits = 0;
  for (const auto& sel : selections) {
    const auto it = records.find(sel.image_id);
    if (it == records.end()) {
      throw ProtocolError(fmt::format("selection on unknown image '{}'", sel.image_id));
    }
    bool has_gt = false;
    bool hit = false;
    for (const auto& g : it->second->gt) {
      if (g.label != target_class) continue;
      has_gt = true;
      if (iou(sel.box, g.box) >= iou_thresh) hit = true;
    }
    if (!has_gt) {
      throw ProtocolError(fmt::format("image '{}' has no gt box of '{}'", sel.image_id,
                                      target_class));
    }
    hits += hit ? 1 : 0;
  }
  return 100.0 * hits / static_cast<double>(selections.size());
}

std::optional<double> average_precision(std::span<const Detection> detections,
                                        std::span<const ImageRecord> images,
                                        std::string_view class_id, double iou_thresh,
                                        ApInterpolation interp) {
  const auto records = by_id(images);
  int num_gt = 0;
  for (const auto& record : images) {
    for (const auto& g : record.gt) num_gt += g.label == class_id ? 1 : 0;
  }
  if (num_gt == 0) return std::nullopt;

  std::vector<const Detection*> ranked;
  std::vector<double> scores;
  for (const auto& det : detections) {
    if (det.class_id != class_id) continue;
    if (!records.contains(det.image_id)) {
      throw ProtocolError(fmt::format("detection on image '{}' outside the evaluation set",
                                      det.image_id));
    }
    ranked.push_back(&det);
    scores.push_back(det.score);
  }
  const std::vector<int> order = rank_by_score(scores);

  std::map<std::pair<std::string_view, std::size_t>, bool> matched;
  std::vector<double> precision;
  std::vector<double> recall;
  int tp = 0;
  int fp = 0;
  for (int idx : order) {
    const Detection& det = *ranked[idx];
    const ImageRecord& record = *records.at(det.image_id);
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < record.gt.size(); ++g) {
      if (record.gt[g].label != class_id || matched[{det.image_id, g}]) continue;
      const double overlap = iou(det.box, record.gt[g].box);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best >= iou_thresh) {
      matched[{det.image_id, best_gt}] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / num_gt);
  }

  if (interp == ApInterpolation::eleven_point) {
    double ap = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double r = k / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= r - 1e-12) best = std::max(best, precision[i]);
      }
      ap += best / 11.0;
    }
    return ap;
  }

  // Monotone precision envelope, integrated over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double mean_ap(std::span<const std::optional<double>> aps) {
  double sum = 0.0;
  int n = 0;
  for (const auto& ap : aps) {
    if (!ap) continue;
    sum += *ap;
    ++n;
  }
  if (n == 0) throw DomainError("mean AP over zero defined classes");
  return sum / n;
}

std::string Interval::format(int precision) const {
  return fmt::format("{:.{}f} ± {:.{}f}", mean, precision, half_width, precision);
}

Interval binomial_ci95(int hits, int trials) {
  if (trials <= 0) return {};
  const double p = static_cast<double>(hits) / trials;
  return {100.0 * p, 100.0 * 1.96 * std::sqrt(p * (1.0 - p) / trials), trials};
}

Interval mean_ci95(std::span<const double> values) {
  Interval out;
  out.n = static_cast<int>(values.size());
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.half_width = 1.96 * std::sqrt(ss / (out.n - 1)) / std::sqrt(static_cast<double>(out.n));
  }
  return out;
}

EpisodeEvaluation evaluate_episode(std::span<const Detection> detections,
                                   std::span<const ImageRecord> images,
                                   std::span<const std::string> classes, double iou_thresh,
                                   ApInterpolation interp) {
  const auto records = by_id(images);
  for (const auto& det : detections) {
    if (!records.contains(det.image_id)) {
      throw ProtocolError(
          fmt::format("detection on image '{}' outside the evaluation set", det.image_id));
    }
  }
  EpisodeEvaluation out;
  for (const auto& c : classes) {
    if (const auto value = corloc(detections, images, c, iou_thresh)) out.corloc[c] = *value;
    if (const auto value = average_precision(detections, images, c, iou_thresh, interp)) {
      out.ap[c] = *value;
    } else {
      spdlog::debug("class '{}' has no gt instance in the evaluation set; AP excluded", c);
    }
  }
  return out;
}

MetricsReport aggregate(std::span<const EpisodeEvaluation> episodes) {
  MetricsReport report;
  report.n_episodes = static_cast<int>(episodes.size());
  std::map<std::string, std::vector<double>> corlocs;
  std::map<std::string, std::vector<double>> aps;
  std::vector<double> episode_corloc;
  std::vector<double> episode_map;
  for (const auto& ep : episodes) {
    for (const auto& [c, v] : ep.corloc) corlocs[c].push_back(v);
    for (const auto& [c, v] : ep.ap) aps[c].push_back(v);
    if (!ep.corloc.empty()) {
      double sum = 0.0;
      for (const auto& [c, v] : ep.corloc) sum += v;
      episode_corloc.push_back(sum / ep.corloc.size());
    }
    if (!ep.ap.empty()) {
      double sum = 0.0;
      for (const auto& [c, v] : ep.ap) sum += v;
      episode_map.push_back(sum / ep.ap.size());
    }
  }
  for (const auto& [c, v] : corlocs) report.per_class[c].corloc = mean_ci95(v).mean;
  for (const auto& [c, v] : aps) report.per_class[c].ap = mean_ci95(v).mean;
  report.corloc_ci95 = mean_ci95(episode_corloc);
  report.map_ci95 = mean_ci95(episode_map);
  report.corloc_mean = report.corloc_ci95.mean;
  report.map = report.map_ci95.mean;
  return report;
}

json to_json(const MetricsReport& report) {
  json per_class = json::object();
  for (const auto& [c, m] : report.per_class) {
    json entry = json::object();
    entry["corloc"] = m.corloc ? json(*m.corloc) : json(nullptr);
    entry["ap"] = m.ap ? json(*m.ap) : json(nullptr);
    per_class[c] = entry;
  }
  return {{"per_class", per_class},
          {"corloc_mean", report.corloc_mean},
          {"map", report.map},
          {"n_episodes", report.n_episodes},
          {"ci95",
           {{"corloc", report.corloc_ci95.half_width}, {"map", report.map_ci95.half_width}}}};
}

std::string format_class_table(const std::map<std::string, double>& per_class,
                               std::string_view mean_label, double mean, int precision) {
  std::string header = "method";
  std::string row = "value";
  std::size_t width = 6;
  for (const auto& [c, v] : per_class) width = std::max(width, c.size());
  width = std::max(width, mean_label.size());
  header = fmt::format("{:<8}", "");
  row = fmt::format("{:<8}", "");
  for (const auto& [c, v] : per_class) {
    header += fmt::format(" {:>{}}", c, width);
    row += fmt::format(" {:>{}.{}f}", v, width, precision);
  }
  header += fmt::format(" | {:>{}}", mean_label, width);
  row += fmt::format(" | {:>{}.{}f}", mean, width, precision);
  return header + "\n" + row + "\n";
}

json detection_to_json(const Detection& d) {
  return {{"image_id", d.image_id},
          {"class", d.class_id},
          {"box", json::array({d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max})},
          {"score", d.score}};
}

Detection detection_from_json(const json& j) {
  try {
    Detection d;
    d.image_id = j.at("image_id").get<std::string>();
    d.class_id = j.at("class").get<std::string>();
    const auto& b = j.at("box");
    if (!b.is_array() || b.size() != 4) throw DataError("detection box must have 4 numbers");
    d.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    d.score = j.at("score").get<double>();
    return d;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("detection record: {}", e.what()));
  }
}

}  // namespace vmfmil
