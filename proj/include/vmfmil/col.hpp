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

/// \file col.hpp
///
/// Common-object localization by EM over one latent positive proposal per
/// image. The foreground is vMF(θ, κ) (or an isotropic Gaussian for the
/// ablation) and the background enters through log u⁻ only.
///
/// Logits per proposal j of image i:
///
///     vMF:       o_ij = κ θᵀF_ij − log u⁻(F_ij)
///     Gaussian:  o_ij = −‖F_ij − θ‖² / (2σ²) − log u⁻(F_ij)
///
/// E-step w_i = softmax(o_i). M-step θ = norm(Σ_i w_iᵀF_i) for vMF, the plain
/// mean (1/M) Σ_i w_iᵀF_i for the Gaussian. The tracked objective is
/// Σ_i logsumexp_j o_ij, the marginal log-likelihood up to a constant.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmfmil/background.hpp"
#include "vmfmil/dataio.hpp"
#include "vmfmil/directional.hpp"
#include "vmfmil/types.hpp"

namespace vmfmil {

struct ColModel {
  enum class Kind { vmf, gaussian, tukey_gaussian };

  Kind kind = Kind::vmf;
  double sigma = 0.1;  // Gaussian kinds
  double beta = 0.5;   // Tukey exponent; 0 means log

  static ColModel vmf() { return {}; }
  static ColModel gaussian(double sigma) { return {Kind::gaussian, sigma, 0.5}; }
  static ColModel tukey_gaussian(double beta, double sigma) {
    return {Kind::tukey_gaussian, sigma, beta};
  }

  bool is_gaussian() const { return kind != Kind::vmf; }
  std::string name() const;
};

struct ColInit {
  enum class Kind { prototypical, random };

  Kind kind = Kind::prototypical;
  std::uint64_t seed = 0;  // Kind::random
};

struct ColConfig {
  /// Kind::constant keeps κ fixed; any other kind re-estimates κ after every
  /// M-step.
  KappaRule kappa_rule = KappaRule::constant(0.0);
  /// Starting κ; defaults to 0.1·d.
  std::optional<double> kappa_init;
  int max_iters = 8;
  double convergence_tol = 1e-6;
  double lambda = 1.0;
  ColModel model;
  ColInit init;
  double kappa_max = kDefaultKappaMax;

  void validate() const;
  double initial_kappa(int d) const;
};

/// Lower clamp for re-estimated κ.
inline constexpr double kKappaMin = 1e-3;

struct ColResult {
  Vector theta;
  double kappa_final = 0.0;
  std::vector<Vector> soft_labels;
  std::vector<int> top_index;
  /// Objective at the initial θ, then after each iteration.
  std::vector<double> loglik_trace;
  /// Initial θ, then θ after each M-step.
  std::vector<Vector> theta_trace;
  int iterations = 0;
  bool converged = false;
};

/// Max-shifted softmax and logsumexp.
Vector softmax(const Vector& logits);
double logsumexp(const Vector& logits);

/// Prototypical: norm(Σ_i F_i0). Random: uniform on the sphere from `seed`.
/// Throws DegenerateResultant when the prototype sum vanishes.
Vector init_direction(std::span<const ProposalSet> support, const ColInit& init);

/// o_ij for one image given its features and background scores.
Vector col_logits(const Vector& theta, double kappa, const Matrix& features,
                  const Vector& bg_scores, const ColModel& model = {});

/// Soft labels of one image.
Vector e_step(const Vector& theta, double kappa, const BackgroundModel& bg,
              const ProposalSet& image, const ColModel& model = {});

/// New θ from soft labels. Throws DegenerateResultant for the vMF when the
/// weighted resultant vanishes.
Vector m_step(std::span<const Vector> weights, std::span<const Matrix> features,
              const ColModel& model = {});
Vector m_step(std::span<const Vector> weights, std::span<const ProposalSet> support,
              const ColModel& model = {});

/// κ from the weighted mean resultant length r̄ = ‖Σ_i w_iᵀF_i‖ / M, clamped
/// to [kKappaMin, kappa_max]. `rule` must not be constant.
KappaEstimate update_kappa(std::span<const Vector> weights, std::span<const Matrix> features,
                           const KappaRule& rule, double kappa_max = kDefaultKappaMax);

/// Σ_i logsumexp_j o_ij.
double marginal_log_likelihood(const Vector& theta, double kappa, const BackgroundModel& bg,
                               std::span<const ProposalSet> support, const ColModel& model = {});

ColResult run_col(const ColConfig& config, std::span<const ProposalSet> support,
                  const BackgroundModel& bg);

struct QueryScores {
  Vector logit;
  Vector probability;  // σ(logit − log λ)
};

QueryScores score_query(const Vector& theta, double kappa, const BackgroundModel& bg,
                        double lambda, const ProposalSet& query, const ColModel& model = {});

/// {theta, kappa, iterations, converged, loglik_trace, images: [{image_id,
/// top_index, weights}]}
nlohmann::json to_json(const ColResult& result, std::span<const ProposalSet> support);

}  // namespace vmfmil
