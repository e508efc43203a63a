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

#include "vmfmil/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mathutil.hpp"

namespace vmfmil {

namespace {

Matrix gather_rows(std::span<const ProposalSet> images, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(images.size()), images.empty() ? 0 : images.front().dim());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = images[i].features.row(rows[i]);
  }
  return out;
}

Vector pack(const Vector& w, double b) {
  Vector p(w.size() + 1);
  p << w, b;
  return p;
}

}  // namespace

Vector ObjectnessScorer::scores(const Matrix& features) const {
  Vector z = features * w;
  return z.unaryExpr([this](double t) { return detail::sigmoid(t + b); });
}

ObjectnessData collect_objectness_data(const DatasetIndex& index, const ProposalStore& proposals,
                                       double iou_pos, double iou_neg) {
  if (!(iou_neg <= iou_pos)) throw DomainError("objectness needs iou_neg <= iou_pos");
  std::vector<const ProposalSet*> sets;
  std::vector<std::size_t> owner;
  std::vector<int> row_index;
  std::vector<double> labels;
  for (const auto& record : index.images) {
    const bool base = std::any_of(record.labels.begin(), record.labels.end(), [&](const auto& l) {
      return std::find(index.base_classes.begin(), index.base_classes.end(), l) !=
             index.base_classes.end();
    });
    if (!base || record.gt.empty() || !proposals.contains(record.image_id)) continue;
    const ProposalSet& set = proposals.at(record.image_id);
    for (int j = 0; j < set.size(); ++j) {
      double best = 0.0;
      for (const auto& g : record.gt) best = std::max(best, iou(set.boxes[j], g.box));
      if (best >= iou_pos || best < iou_neg) {
        owner.push_back(sets.size());
        row_index.push_back(j);
        labels.push_back(best >= iou_pos ? 1.0 : 0.0);
      }
    }
    sets.push_back(&set);
  }
  ObjectnessData data;
  data.features.resize(static_cast<Eigen::Index>(labels.size()), proposals.dim());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    data.features.row(static_cast<Eigen::Index>(n)) = sets[owner[n]]->features.row(row_index[n]);
  }
  data.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return data;
}

double logistic_objective(const Vector& params, const Matrix& features, const Vector& labels,
                          double l2_reg, Vector& grad) {
  const Eigen::Index d = features.cols();
  const Eigen::Index n = features.rows();
  const auto w = params.head(d);
  const double b = params[d];
  const Vector z = (features * w).array() + b;
  double loss = 0.0;
  Vector coeff(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += detail::softplus(z[i]) - labels[i] * z[i];
    coeff[i] = detail::sigmoid(z[i]) - labels[i];
  }
  grad.resize(d + 1);
  grad.head(d) = features.transpose() * coeff / static_cast<double>(n) + l2_reg * w;
  grad[d] = coeff.sum() / static_cast<double>(n);
  return loss / static_cast<double>(n) + 0.5 * l2_reg * w.squaredNorm();
}

ObjectnessScorer train_objectness(const ObjectnessData& data, double l2_reg,
                                  const optim::LbfgsOptions& options) {
  const double positives = data.labels.sum();
  if (data.labels.size() == 0 || positives == 0.0 ||
      positives == static_cast<double>(data.labels.size())) {
    throw DataError("objectness training needs both object and background proposals");
  }
  const auto objective = [&](const Vector& p, Vector& grad) {
    return logistic_objective(p, data.features, data.labels, l2_reg, grad);
  };
  const auto res = optim::minimize_lbfgs(objective, Vector::Zero(data.features.cols() + 1), options);
  spdlog::info("objectness trained on {} proposals ({} objects): loss {:.4g}, {}",
               data.labels.size(), static_cast<long>(positives), res.f, optim::to_string(res.status));
  const Eigen::Index d = data.features.cols();
  return {res.x.head(d), res.x[d]};
}

Vector LinearSvm::scores(const Matrix& features) const { return (features * w).array() + b; }

double svm_objective(const Vector& params, const Matrix& features, const Vector& labels,
                     const Vector& weights, double c_reg, Vector& grad) {
  const Eigen::Index d = features.cols();
  const auto w = params.head(d);
  const double b = params[d];
  const Vector z = (features * w).array() + b;
  const double total_weight = weights.sum();
  double loss = 0.0;
  Vector coeff = Vector::Zero(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double slack = 1.0 - labels[i] * z[i];
    if (slack <= 0.0) continue;
    loss += weights[i] * slack * slack;
    coeff[i] = -2.0 * weights[i] * slack * labels[i];
  }
  grad.resize(d + 1);
  grad.head(d) = features.transpose() * coeff / total_weight + c_reg * w;
  grad[d] = coeff.sum() / total_weight;
  return loss / total_weight + 0.5 * c_reg * w.squaredNorm();
}

SvmTraining misvm_retrain(const Matrix& positives, const Matrix& negatives, double c_reg,
                          std::span<const double> positive_weights,
                          std::span<const double> negative_weights, const LinearSvm* init,
                          const optim::LbfgsOptions& options) {
  if (positives.rows() == 0 || negatives.rows() == 0) {
    throw DomainError("SVM training needs at least one positive and one negative");
  }
  if ((!positive_weights.empty() && positive_weights.size() != std::size_t(positives.rows())) ||
      (!negative_weights.empty() && negative_weights.size() != std::size_t(negatives.rows()))) {
    throw DimensionMismatch("sample weights do not match the sample count");
  }
  const Eigen::Index np = positives.rows();
  const Eigen::Index nn = negatives.rows();
  Matrix x(np + nn, positives.cols());
  x << positives, negatives;
  Vector y(np + nn);
  y << Vector::Ones(np), -Vector::Ones(nn);
  Vector weights = Vector::Ones(np + nn);
  for (Eigen::Index i = 0; i < Eigen::Index(positive_weights.size()); ++i) {
    weights[i] = positive_weights[i];
  }
  for (Eigen::Index i = 0; i < Eigen::Index(negative_weights.size()); ++i) {
    weights[np + i] = negative_weights[i];
  }

  const auto objective = [&](const Vector& p, Vector& grad) {
    const double f = svm_objective(p, x, y, weights, c_reg, grad);
    if (!std::isfinite(f)) throw NumericalError(fmt::format("SVM objective became {}", f));
    return f;
  };
  const Vector start = init ? pack(init->w, init->b) : Vector::Zero(x.cols() + 1);
  const auto res = optim::minimize_lbfgs(objective, start, options);
  const Eigen::Index d = x.cols();
  return {{res.x.head(d), res.x[d], c_reg}, res.f};
}

int relocalize(const Vector& svm_scores, const Vector& objectness, double gamma) {
  if (svm_scores.size() != objectness.size() || svm_scores.size() == 0) {
    throw DimensionMismatch("relocalize needs matching, nonempty score vectors");
  }
  return detail::argmax(svm_scores + gamma * objectness);
}

int misvm_relocalize(const LinearSvm& svm, const ObjectnessScorer& objectness, double gamma,
                     const ProposalSet& image) {
  return relocalize(svm.scores(image.features), objectness.scores(image.features), gamma);
}

MisvmResult run_misvm(std::span<const ProposalSet> positives,
                      std::span<const ProposalSet> negatives, const ObjectnessScorer& objectness,
                      const MisvmConfig& config) {
  if (positives.empty() || negatives.empty()) {
    throw DomainError("MI-SVM needs positive and negative images");
  }
  if (config.max_rounds < 1) throw DomainError("max_rounds must be >= 1");
  MisvmResult result;
  result.selections.assign(positives.size(), 0);

  std::set<std::pair<std::size_t, int>> in_pool;
  std::vector<std::pair<std::size_t, int>> pool;
  for (std::size_t n = 0; n < negatives.size(); ++n) {
    in_pool.insert({n, 0});
    pool.emplace_back(n, 0);
  }

  const LinearSvm* warm = nullptr;
  for (int round = 0; round < config.max_rounds; ++round) {
    Matrix neg(static_cast<Eigen::Index>(pool.size()), positives.front().dim());
    for (std::size_t k = 0; k < pool.size(); ++k) {
      neg.row(static_cast<Eigen::Index>(k)) = negatives[pool[k].first].features.row(pool[k].second);
    }
    const Matrix pos = gather_rows(positives, result.selections);
    SvmTraining trained = misvm_retrain(pos, neg, config.c_reg, {}, {}, warm, config.optim);
    result.svm = std::move(trained.svm);
    warm = &result.svm;
    result.objective_trace.push_back(trained.objective);
    ++result.rounds;

    for (std::size_t n = 0; n < negatives.size(); ++n) {
      const int hardest = detail::argmax(result.svm.scores(negatives[n].features));
      if (in_pool.insert({n, hardest}).second) pool.emplace_back(n, hardest);
    }
    result.pool_sizes.push_back(pool.size());

    std::vector<int> next(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
      next[i] = misvm_relocalize(result.svm, objectness, config.gamma, positives[i]);
    }
    if (next == result.selections) {
      result.fixed_point = true;
      break;
    }
    result.selections = std::move(next);
  }
  return result;
}

std::vector<Detection> misvm_detect(const LinearSvm& svm, const std::string& class_id,
                                    const ProposalSet& query, const DetectConfig& config) {
  return detections_from_logits(query, class_id, svm.scores(query.features), config);
}

MisvmEpisodeResult run_misvm_episode(const Episode& episode, const DatasetIndex& index,
                                     const ProposalStore& proposals,
                                     const ObjectnessScorer& objectness,
                                     const MisvmConfig& config) {
  const std::vector<std::string> all_support = support_images(episode);
  MisvmEpisodeResult out;
  for (std::size_t c = 0; c < episode.classes.size(); ++c) {
    const std::string& class_id = episode.classes[c];
    std::vector<ProposalSet> positives;
    for (const auto& id : episode.support[c]) positives.push_back(proposals.at(id));
    std::vector<ProposalSet> negatives;
    if (!episode.extra_negatives.empty()) {
      for (const auto& id : episode.extra_negatives[c]) negatives.push_back(proposals.at(id));
    }
    for (const auto& id : all_support) {
      if (!index.record(id).has_label(class_id)) negatives.push_back(proposals.at(id));
    }
    if (negatives.empty()) {
      throw ProtocolError(fmt::format(
          "MI-SVM for class '{}' has no negative images; sample extra negatives", class_id));
    }
    MisvmResult run = run_misvm(positives, negatives, objectness, config);
    if (!run.fixed_point) {
      spdlog::debug("MI-SVM for '{}' stopped at the round cap", class_id);
    }
    for (const auto& id : episode.query) {
      auto dets = misvm_detect(run.svm, class_id, proposals.at(id), config.detect);
      out.detections.insert(out.detections.end(), dets.begin(), dets.end());
    }
    out.classes.push_back(std::move(run));
  }
  return out;
}

}  // namespace vmfmil
