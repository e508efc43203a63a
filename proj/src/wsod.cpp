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

#include "vmfmil/wsod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mathutil.hpp"

namespace vmfmil {

using nlohmann::json;

Vector CosineClassifier::scores(const Matrix& features) const {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DomainError(fmt::format("classifier '{}' has a zero weight", class_id));
  if (features.cols() != v.size()) {
    throw DimensionMismatch(fmt::format("classifier '{}' has d={}, features have d={}", class_id,
                                        v.size(), features.cols()));
  }
  return (tau / norm) * (features * v);
}

PseudoLabelSet build_pseudo_labels(const std::string& class_id,
                                   std::span<const ProposalSet> positive_images,
                                   const ColResult& col,
                                   std::span<const ProposalSet> negative_images) {
  if (positive_images.empty()) {
    throw DomainError(fmt::format("class '{}' has no positive images", class_id));
  }
  if (col.top_index.size() != positive_images.size()) {
    throw DimensionMismatch("COL result does not match the positive images");
  }
  PseudoLabelSet labels;
  labels.class_id = class_id;
  const int d = positive_images.front().dim();
  labels.positive_features.resize(static_cast<Eigen::Index>(positive_images.size()), d);
  for (std::size_t i = 0; i < positive_images.size(); ++i) {
    const int j = col.top_index[i];
    labels.positives.push_back({positive_images[i].image_id, j});
    labels.positive_features.row(static_cast<Eigen::Index>(i)) = positive_images[i].features.row(j);
  }
  Eigen::Index rows = 0;
  for (const auto& image : negative_images) rows += image.size();
  labels.negative_features.resize(rows, d);
  Eigen::Index next = 0;
  for (const auto& image : negative_images) {
    if (image.dim() != d) throw DimensionMismatch("negative image differs in d");
    labels.negative_features.middleRows(next, image.size()) = image.features;
    next += image.size();
  }
  return labels;
}

double classifier_objective(const Vector& v, const Matrix& positives, const Matrix& negatives,
                            double tau, double l2_reg, Vector& grad) {
  const double norm = v.norm();
  grad.setZero(v.size());
  if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(positives.rows() + negatives.rows());

  // d s / d v = (τ/‖v‖) (x − (v̂ᵀx) v̂), accumulated as a weighted sum of rows.
  const Vector unit = v / norm;
  double loss = 0.0;
  Vector xsum = Vector::Zero(v.size());
  double cos_sum = 0.0;
  const auto accumulate = [&](const Matrix& rows, double label) {
    if (rows.rows() == 0) return;
    const Vector cosines = rows * unit;
    Vector coeff(rows.rows());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      const double s = tau * cosines[r];
      loss += detail::softplus(s) - label * s;
      coeff[r] = detail::sigmoid(s) - label;
      cos_sum += coeff[r] * cosines[r];
    }
    xsum.noalias() += rows.transpose() * coeff;
  };
  accumulate(positives, 1.0);
  accumulate(negatives, 0.0);

  grad = (tau / (norm * n)) * (xsum - cos_sum * unit);
  loss /= n;
  loss += 0.5 * l2_reg * (norm - 1.0) * (norm - 1.0);
  grad += l2_reg * (norm - 1.0) * unit;
  return loss;
}

TrainedClassifier train_classifier(const PseudoLabelSet& labels, const TrainConfig& config) {
  if (labels.positive_features.rows() == 0) {
    throw DomainError(fmt::format("class '{}' has no positive pseudo-labels", labels.class_id));
  }
  if (!(config.tau > 0.0)) throw DomainError("tau must be > 0");
  if (!(config.l2_reg >= 0.0)) throw DomainError("l2_reg must be >= 0");
  if (labels.negative_features.rows() == 0) {
    spdlog::warn("class '{}' has no negatives; training against the regularizer only",
                 labels.class_id);
  }
  Vector v0 = labels.positive_features.colwise().sum().transpose();
  if (!(v0.norm() > 1e-12)) v0 = labels.positive_features.row(0).transpose();
  v0.normalize();

  const auto objective = [&](const Vector& v, Vector& grad) {
    const double f = classifier_objective(v, labels.positive_features, labels.negative_features,
                                          config.tau, config.l2_reg, grad);
    if (!std::isfinite(f)) {
      throw NumericalError(fmt::format("classifier '{}' loss became {} at ‖v‖={}", labels.class_id,
                                       f, v.norm()));
    }
    return f;
  };
  TrainedClassifier out;
  out.optimization = optim::minimize_lbfgs(objective, v0, config.optim);
  out.classifier = {labels.class_id, out.optimization.x, config.tau};
  spdlog::debug("classifier '{}': loss {:.6g} after {} iterations ({})", labels.class_id,
                out.optimization.f, out.optimization.iterations,
                optim::to_string(out.optimization.status));
  return out;
}

std::vector<Detection> detections_from_logits(const ProposalSet& query,
                                              const std::string& class_id, const Vector& logits,
                                              const DetectConfig& config, double shift) {
  if (logits.size() != query.size()) {
    throw DimensionMismatch(fmt::format("{} logits for {} proposals on '{}'", logits.size(),
                                        query.size(), query.image_id));
  }
  const std::vector<double> ranked(logits.data(), logits.data() + logits.size());
  std::vector<int> kept;
  if (config.nms_iou) {
    kept = nms(query.boxes, ranked, *config.nms_iou);
  } else {
    kept.resize(ranked.size());
    std::iota(kept.begin(), kept.end(), 0);
    std::stable_sort(kept.begin(), kept.end(),
                     [&](int a, int b) { return ranked[a] > ranked[b]; });
  }
  std::vector<Detection> out;
  for (int j : kept) {
    const double score = detail::sigmoid(ranked[j] - shift);
    if (score < config.score_threshold) continue;
    out.push_back({query.image_id, class_id, query.boxes[j], score});
  }
  return out;
}

std::vector<Detection> detect(std::span<const CosineClassifier> classifiers,
                              const ProposalSet& query, const DetectConfig& config) {
  std::vector<Detection> out;
  for (const auto& classifier : classifiers) {
    auto dets = detections_from_logits(query, classifier.class_id,
                                       classifier.scores(query.features), config);
    out.insert(out.end(), std::make_move_iterator(dets.begin()),
               std::make_move_iterator(dets.end()));
  }
  return out;
}

WsodResult run_wsod(const Episode& episode, const DatasetIndex& index,
                    const ProposalStore& proposals, const BackgroundModel& bg,
                    const WsodConfig& config) {
  const std::vector<std::string> all_support = support_images(episode);
  WsodResult result;
  std::vector<CosineClassifier> classifiers;
  for (std::size_t c = 0; c < episode.classes.size(); ++c) {
    const std::string& class_id = episode.classes[c];
    std::vector<ProposalSet> positives;
    for (const auto& id : episode.support[c]) positives.push_back(proposals.at(id));
    std::vector<ProposalSet> negatives;
    for (const auto& id : all_support) {
      if (!index.record(id).has_label(class_id)) negatives.push_back(proposals.at(id));
    }
    WsodClassRun run;
    run.col = run_col(config.col, positives, bg);
    run.labels = build_pseudo_labels(class_id, positives, run.col, negatives);
    run.trained = train_classifier(run.labels, config.train);
    classifiers.push_back(run.trained.classifier);
    result.classes.push_back(std::move(run));
  }
  for (const auto& id : episode.query) {
    auto dets = detect(classifiers, proposals.at(id), config.detect);
    result.detections.insert(result.detections.end(), std::make_move_iterator(dets.begin()),
                             std::make_move_iterator(dets.end()));
  }
  return result;
}

json to_json(const CosineClassifier& classifier) {
  return {{"class", classifier.class_id},
          {"v", std::vector<double>(classifier.v.data(), classifier.v.data() + classifier.v.size())},
          {"tau", classifier.tau}};
}

CosineClassifier classifier_from_json(const json& j) {
  try {
    const auto v = j.at("v").get<std::vector<double>>();
    return {j.at("class").get<std::string>(), Eigen::Map<const Vector>(v.data(), v.size()),
            j.at("tau").get<double>()};
  } catch (const json::exception& e) {
    throw DataError(fmt::format("classifier record: {}", e.what()));
  }
}

}  // namespace vmfmil
