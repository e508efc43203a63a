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

/// \file baseline.hpp
///
/// MI-SVM with objectness-guided relocalization and hard negative mining.
/// Both the objectness regressor and the SVM are trained with the shared
/// L-BFGS routine; the SVM uses the squared hinge so the objective is smooth.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "vmfmil/dataio.hpp"
#include "vmfmil/episodes.hpp"
#include "vmfmil/eval.hpp"
#include "vmfmil/optim.hpp"
#include "vmfmil/wsod.hpp"

namespace vmfmil {

/// Class-agnostic logistic objectness over features.
struct ObjectnessScorer {
  Vector w;
  double b = 0.0;

  /// σ(wᵀx + b) per row.
  Vector scores(const Matrix& features) const;
};

struct ObjectnessData {
  Matrix features;
  Vector labels;  // 1 object, 0 background
};

/// Base-image proposals labeled 1 at max IoU ≥ iou_pos, 0 below iou_neg;
/// proposals in between are dropped.
ObjectnessData collect_objectness_data(const DatasetIndex& index, const ProposalStore& proposals,
                                       double iou_pos = 0.5, double iou_neg = 0.3);

/// Mean logistic loss plus (l2_reg/2)‖w‖² over params = (w, b).
double logistic_objective(const Vector& params, const Matrix& features, const Vector& labels,
                          double l2_reg, Vector& grad);

/// Throws DataError when the labels are all one class.
ObjectnessScorer train_objectness(const ObjectnessData& data, double l2_reg = 1e-4,
                                  const optim::LbfgsOptions& options = {});

struct LinearSvm {
  Vector w;
  double b = 0.0;
  double c_reg = 1.0;

  Vector scores(const Matrix& features) const;
};

/// (c_reg/2)‖w‖² + weighted mean of max(0, 1 − y(wᵀx + b))² over
/// params = (w, b), labels y ∈ {−1, +1}.
double svm_objective(const Vector& params, const Matrix& features, const Vector& labels,
                     const Vector& weights, double c_reg, Vector& grad);

struct SvmTraining {
  LinearSvm svm;
  double objective = 0.0;
};

/// Trains on positives (y = +1) and negatives (y = −1) with optional
/// per-row weights; a duplicated row is equivalent to weight 2. Warm-starts
/// from `init` when given.
SvmTraining misvm_retrain(const Matrix& positives, const Matrix& negatives, double c_reg = 1.0,
                          std::span<const double> positive_weights = {},
                          std::span<const double> negative_weights = {},
                          const LinearSvm* init = nullptr,
                          const optim::LbfgsOptions& options = {});

/// argmax_j svm_j + γ·obj_j, ties to the lowest index.
int relocalize(const Vector& svm_scores, const Vector& objectness, double gamma);
int misvm_relocalize(const LinearSvm& svm, const ObjectnessScorer& objectness, double gamma,
                     const ProposalSet& image);

struct MisvmConfig {
  double c_reg = 1.0;
  double gamma = 0.5;
  int max_rounds = 10;
  optim::LbfgsOptions optim;
  DetectConfig detect;
};

struct MisvmResult {
  std::vector<int> selections;  // per positive image
  LinearSvm svm;
  int rounds = 0;
  /// True when the selections repeated before max_rounds.
  bool fixed_point = false;
  /// Negative pool size after each round.
  std::vector<std::size_t> pool_sizes;
  std::vector<double> objective_trace;
};

/// Starts from the full-image proposals and a pool of negative full-image
/// features. Each round retrains, adds each negative image's hardest
/// proposal to the pool (deduplicated by (image, proposal)) and relocalizes.
MisvmResult run_misvm(std::span<const ProposalSet> positives,
                      std::span<const ProposalSet> negatives, const ObjectnessScorer& objectness,
                      const MisvmConfig& config = {});

/// Sigmoid SVM scores with class-wise suppression per `config`.
std::vector<Detection> misvm_detect(const LinearSvm& svm, const std::string& class_id,
                                    const ProposalSet& query, const DetectConfig& config = {});

struct MisvmEpisodeResult {
  std::vector<MisvmResult> classes;  // aligned with episode.classes
  std::vector<Detection> detections;
};

/// Per class: positives are its support images; negatives are the episode's
/// extra negatives for the class plus support images lacking it.
MisvmEpisodeResult run_misvm_episode(const Episode& episode, const DatasetIndex& index,
                                     const ProposalStore& proposals,
                                     const ObjectnessScorer& objectness,
                                     const MisvmConfig& config = {});

}  // namespace vmfmil
