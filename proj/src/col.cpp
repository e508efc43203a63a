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

#include "vmfmil/col.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mathutil.hpp"

namespace vmfmil {

using nlohmann::json;

namespace {

constexpr double kDegenerateNorm = 1e-12;

Matrix model_features(const ProposalSet& image, const ColModel& model) {
  if (model.kind == ColModel::Kind::tukey_gaussian) {
    return tukey_transform(image.features, model.beta);
  }
  return image.features;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string ColModel::name() const {
  switch (kind) {
    case Kind::vmf:
      return "vmf";
    case Kind::gaussian:
      return "gaussian";
    case Kind::tukey_gaussian:
      return "tukey_gaussian";
  }
  return "unknown";
}

void ColConfig::validate() const {
  if (max_iters < 0) throw DomainError(fmt::format("max_iters must be >= 0, got {}", max_iters));
  if (!(lambda > 0.0)) throw DomainError(fmt::format("lambda must be > 0, got {}", lambda));
  if (!(convergence_tol >= 0.0)) throw DomainError("convergence_tol must be >= 0");
  if (model.is_gaussian() && !(model.sigma > 0.0)) {
    throw DomainError(fmt::format("sigma must be > 0, got {}", model.sigma));
  }
  if (kappa_init && !(*kappa_init >= 0.0 && std::isfinite(*kappa_init))) {
    throw DomainError(fmt::format("kappa_init must be finite and >= 0, got {}", *kappa_init));
  }
  if (!(kappa_max > kKappaMin)) throw DomainError("kappa_max must exceed the lower clamp");
}

double ColConfig::initial_kappa(int d) const {
  if (kappa_init) return *kappa_init;
  return 0.1 * d;
}

Vector softmax(const Vector& logits) {
  const double shift = logits.maxCoeff();
  Vector w = (logits.array() - shift).exp().matrix();
  return w / w.sum();
}

double logsumexp(const Vector& logits) {
  const double shift = logits.maxCoeff();
  return shift + std::log((logits.array() - shift).exp().sum());
}

Vector init_direction(std::span<const ProposalSet> support, const ColInit& init) {
  if (support.empty()) throw DomainError("COL needs at least one support image");
  const int d = support.front().dim();
  if (init.kind == ColInit::Kind::random) {
    Rng rng(init.seed);
    return sample_uniform_sphere(d, rng);
  }
  Vector sum = Vector::Zero(d);
  for (const auto& image : support) {
    if (image.dim() != d) throw DimensionMismatch("support images differ in d");
    sum += image.features.row(0).transpose();
  }
  const double norm = sum.norm();
  if (norm < kDegenerateNorm) {
    throw DegenerateResultant("full-image features sum to zero; prototype undefined");
  }
  return sum / norm;
}

Vector col_logits(const Vector& theta, double kappa, const Matrix& features,
                  const Vector& bg_scores, const ColModel& model) {
  if (features.cols() != theta.size()) {
    throw DimensionMismatch(
        fmt::format("theta has d={}, features have d={}", theta.size(), features.cols()));
  }
  if (model.is_gaussian()) {
    const double scale = 1.0 / (2.0 * model.sigma * model.sigma);
    return -scale * (features.rowwise() - theta.transpose()).rowwise().squaredNorm() - bg_scores;
  }
  return kappa * (features * theta) - bg_scores;
}

Vector e_step(const Vector& theta, double kappa, const BackgroundModel& bg,
              const ProposalSet& image, const ColModel& model) {
  return softmax(col_logits(theta, kappa, model_features(image, model), bg_log_scores(bg, image),
                            model));
}

Vector m_step(std::span<const Vector> weights, std::span<const Matrix> features,
              const ColModel& model) {
  if (weights.size() != features.size() || weights.empty()) {
    throw DimensionMismatch("m_step needs one weight vector per image");
  }
  Vector sum = Vector::Zero(features.front().cols());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sum.noalias() += features[i].transpose() * weights[i];
  }
  if (model.is_gaussian()) return sum / static_cast<double>(weights.size());
  const double norm = sum.norm();
  if (norm < kDegenerateNorm) throw DegenerateResultant("weighted resultant vanished in M-step");
  return sum / norm;
}

Vector m_step(std::span<const Vector> weights, std::span<const ProposalSet> support,
              const ColModel& model) {
  std::vector<Matrix> features;
  features.reserve(support.size());
  for (const auto& image : support) features.push_back(model_features(image, model));
  return m_step(weights, features, model);
}

KappaEstimate update_kappa(std::span<const Vector> weights, std::span<const Matrix> features,
                           const KappaRule& rule, double kappa_max) {
  if (rule.is_constant()) throw DomainError("update_kappa needs a non-constant rule");
  if (weights.size() != features.size() || weights.empty()) {
    throw DimensionMismatch("update_kappa needs one weight vector per image");
  }
  Vector sum = Vector::Zero(features.front().cols());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sum.noalias() += features[i].transpose() * weights[i];
  }
  // Each w_i sums to one, so the total weight is M; rounding may nudge r̄
  // past one, which is the saturation case.
  const double rbar = std::min(sum.norm() / static_cast<double>(weights.size()), 1.0);
  const int d = static_cast<int>(sum.size());
  KappaEstimate est = estimate_kappa(rbar, d, rule, kappa_max);
  est.kappa = std::clamp(est.kappa, kKappaMin, kappa_max);
  return est;
}

double marginal_log_likelihood(const Vector& theta, double kappa, const BackgroundModel& bg,
                               std::span<const ProposalSet> support, const ColModel& model) {
  double total = 0.0;
  for (const auto& image : support) {
    total += logsumexp(col_logits(theta, kappa, model_features(image, model),
                                  bg_log_scores(bg, image), model));
  }
  return total;
}

ColResult run_col(const ColConfig& config, std::span<const ProposalSet> support,
                  const BackgroundModel& bg) {
  config.validate();
  if (support.empty()) throw DomainError("COL needs at least one support image");
  const int d = support.front().dim();
  const std::size_t m = support.size();

  std::vector<Matrix> features;
  std::vector<Vector> bg_scores;
  features.reserve(m);
  bg_scores.reserve(m);
  for (const auto& image : support) {
    if (image.dim() != d) throw DimensionMismatch("support images differ in d");
    features.push_back(model_features(image, config.model));
    bg_scores.push_back(bg_log_scores(bg, image));
  }

  const auto objective = [&](const Vector& theta, double kappa) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      total += logsumexp(col_logits(theta, kappa, features[i], bg_scores[i], config.model));
    }
    return total;
  };
  const auto expectation = [&](const Vector& theta, double kappa) {
    std::vector<Vector> w(m);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = softmax(col_logits(theta, kappa, features[i], bg_scores[i], config.model));
    }
    return w;
  };

  ColResult result;
  Vector theta;
  if (config.model.kind == ColModel::Kind::tukey_gaussian &&
      config.init.kind == ColInit::Kind::prototypical) {
    Vector sum = Vector::Zero(d);
    for (const auto& f : features) sum += f.row(0).transpose();
    if (sum.norm() < kDegenerateNorm) {
      throw DegenerateResultant("full-image features sum to zero; prototype undefined");
    }
    theta = sum.normalized();
  } else {
    theta = init_direction(support, config.init);
  }
  double kappa = config.initial_kappa(d);
  result.theta_trace.push_back(theta);
  result.loglik_trace.push_back(objective(theta, kappa));

  for (int t = 0; t < config.max_iters; ++t) {
    const std::vector<Vector> w = expectation(theta, kappa);
    Vector next = m_step(w, features, config.model);
    if (!config.kappa_rule.is_constant() && !config.model.is_gaussian()) {
      const KappaEstimate est = update_kappa(w, features, config.kappa_rule, config.kappa_max);
      if (est.saturated) spdlog::warn("concentration update saturated at {}", est.kappa);
      kappa = est.kappa;
    }
    const double delta = (next - theta).norm();
    theta = std::move(next);
    ++result.iterations;
    result.theta_trace.push_back(theta);
    result.loglik_trace.push_back(objective(theta, kappa));
    if (delta < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  result.theta = theta;
  result.kappa_final = kappa;
  result.soft_labels = expectation(theta, kappa);
  result.top_index.reserve(m);
  for (const auto& w : result.soft_labels) result.top_index.push_back(detail::argmax(w));
  return result;
}

QueryScores score_query(const Vector& theta, double kappa, const BackgroundModel& bg,
                        double lambda, const ProposalSet& query, const ColModel& model) {
  if (!(lambda > 0.0)) throw DomainError(fmt::format("lambda must be > 0, got {}", lambda));
  QueryScores out;
  out.logit = col_logits(theta, kappa, model_features(query, model), bg_log_scores(bg, query),
                         model);
  const double shift = std::log(lambda);
  out.probability = out.logit.unaryExpr([shift](double z) { return detail::sigmoid(z - shift); });
  return out;
}

json to_json(const ColResult& result, std::span<const ProposalSet> support) {
  json images = json::array();
  for (std::size_t i = 0; i < result.soft_labels.size(); ++i) {
    images.push_back({{"image_id", i < support.size() ? support[i].image_id : std::string()},
                      {"top_index", result.top_index[i]},
                      {"weights", to_std(result.soft_labels[i])}});
  }
  return {{"theta", to_std(result.theta)},
          {"kappa", result.kappa_final},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"loglik_trace", result.loglik_trace},
          {"images", images}};
}

}  // namespace vmfmil
