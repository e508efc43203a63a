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

/// \file wsod.hpp
///
/// Few-shot weakly supervised detection: COL per class produces one pseudo
/// positive per support image, a cosine classifier s(x) = τ vᵀx / ‖v‖ is fit
/// with sigmoid cross-entropy, and query proposals are scored class-wise.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmfmil/background.hpp"
#include "vmfmil/col.hpp"
#include "vmfmil/dataio.hpp"
#include "vmfmil/episodes.hpp"
#include "vmfmil/eval.hpp"
#include "vmfmil/optim.hpp"

namespace vmfmil {

struct CosineClassifier {
  std::string class_id;
  Vector v;
  double tau = 20.0;

  /// τ vᵀx / ‖v‖ for every row.
  Vector scores(const Matrix& features) const;
};

struct PseudoLabel {
  std::string image_id;
  int proposal = 0;
};

struct PseudoLabelSet {
  std::string class_id;
  std::vector<PseudoLabel> positives;
  Matrix positive_features;
  Matrix negative_features;
};

/// Positives are the COL top proposals of `positive_images` (in order);
/// negatives are every proposal of `negative_images`. Throws DomainError
/// when there are no positive images.
PseudoLabelSet build_pseudo_labels(const std::string& class_id,
                                   std::span<const ProposalSet> positive_images,
                                   const ColResult& col,
                                   std::span<const ProposalSet> negative_images);

struct TrainConfig {
  double tau = 20.0;
  /// Weight of the norm anchor (l2_reg / 2)·(‖v‖ − 1)².
  double l2_reg = 1e-3;
  optim::LbfgsOptions optim;
};

/// Mean sigmoid cross-entropy of the cosine scores (label 1 for rows of
/// `positives`, 0 for `negatives`) plus the norm anchor. Writes the gradient.
double classifier_objective(const Vector& v, const Matrix& positives, const Matrix& negatives,
                            double tau, double l2_reg, Vector& grad);

struct TrainedClassifier {
  CosineClassifier classifier;
  optim::LbfgsResult optimization;
};

/// Starts from the normalized positive mean. Throws NumericalError on a
/// non-finite loss.
TrainedClassifier train_classifier(const PseudoLabelSet& labels, const TrainConfig& config = {});

struct DetectConfig {
  /// Class-wise greedy suppression; nullopt disables it.
  std::optional<double> nms_iou = 0.5;
  /// Drop detections with sigmoid score below this.
  double score_threshold = 0.0;
};

/// Detections of one class on one image from per-proposal logits. Ranking
/// and suppression use the logits, so probabilities that round to 1 keep
/// their order; detections come out best first with score σ(logit − shift).
std::vector<Detection> detections_from_logits(const ProposalSet& query,
                                              const std::string& class_id, const Vector& logits,
                                              const DetectConfig& config, double shift = 0.0);

/// Sigmoid of the cosine score for every class and proposal, filtered per
/// class by the configuration.
std::vector<Detection> detect(std::span<const CosineClassifier> classifiers,
                              const ProposalSet& query, const DetectConfig& config = {});

struct WsodConfig {
  ColConfig col;
  TrainConfig train;
  DetectConfig detect;
};

struct WsodClassRun {
  ColResult col;
  PseudoLabelSet labels;
  TrainedClassifier trained;
};

struct WsodResult {
  std::vector<WsodClassRun> classes;  // aligned with episode.classes
  std::vector<Detection> detections;
};

/// Per class: COL on its support images, pseudo-labels with the support images
/// lacking the class as negatives, classifier training; then detection on
/// every query image.
WsodResult run_wsod(const Episode& episode, const DatasetIndex& index,
                    const ProposalStore& proposals, const BackgroundModel& bg,
                    const WsodConfig& config = {});

/// {class, v, tau}
nlohmann::json to_json(const CosineClassifier& classifier);
CosineClassifier classifier_from_json(const nlohmann::json& j);

}  // namespace vmfmil
