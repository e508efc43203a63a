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

/// \file directional.hpp
///
/// von Mises-Fisher machinery on the unit hypersphere S^{d-1}.
///
/// The density is p(x) = exp(κ θᵀx) / Z(κ) with
///
///     Z(κ) = (2π)^{d/2} I_{d/2-1}(κ) / κ^{d/2-1},
///
/// and the mean resultant length of the distribution is the Bessel ratio
/// A_d(κ) = I_{d/2}(κ) / I_{d/2-1}(κ). Everything is evaluated in log space so
/// that d in the thousands and κ up to the saturation cap stay finite.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "vmfmil/types.hpp"

namespace vmfmil {

/// Default saturation cap for concentration estimates.
inline constexpr double kDefaultKappaMax = 1e6;

/// log I_ν(x) for ν ≥ 0, x ≥ 0. Returns -inf for x = 0 and ν > 0.
double log_bessel_i(double nu, double x);

/// log Z(κ) for the vMF on S^{d-1}. At κ = 0 this is the log surface area.
double log_normalizer(int d, double kappa);

/// A_d(κ) = I_{d/2}(κ) / I_{d/2-1}(κ), in [0, 1), strictly increasing.
double bessel_ratio(int d, double kappa);

/// Derivative A_d'(κ) = 1 - A² - (d-1) A / κ; equals 1/d at κ = 0.
double bessel_ratio_derivative(int d, double kappa);

struct VmfParams {
  Vector theta;
  double kappa = 0.0;

  int dim() const { return static_cast<int>(theta.size()); }
  /// Throws DomainError unless ‖θ‖ = 1 ± 1e-10 and κ is finite and ≥ 0.
  void validate() const;
};

/// Concentration estimators. The polynomial orders are truncations of the
/// series d r̄ (1 + r̄² + r̄⁴ + ...) whose closed form is OrderInf.
struct KappaRule {
  enum class Kind { constant, order0, order1, order2, order3, order_inf, exact };

  Kind kind = Kind::constant;
  double value = 0.0;  // only for Kind::constant

  static KappaRule constant(double value);
  static KappaRule order(Kind kind) { return {kind, 0.0}; }

  bool is_constant() const { return kind == Kind::constant; }
  std::string name() const;
  /// Accepts "constant:<v>", "order0".."order3", "order_inf", "exact".
  static KappaRule parse(std::string_view text);
};

struct ResultantSummary {
  Vector resultant;
  double rbar = 0.0;
  double count = 0.0;
};

struct KappaEstimate {
  double kappa = 0.0;
  /// True when r̄ ≥ 1 forced the estimate to the cap.
  bool saturated = false;
};

/// Concentration estimate from a mean resultant length r̄. Estimates are
/// capped at `kappa_max`. OrderInf and Exact saturate (with a logged warning)
/// when r̄ ≥ 1.
KappaEstimate estimate_kappa(double rbar, int d, const KappaRule& rule,
                             double kappa_max = kDefaultKappaMax);
KappaEstimate estimate_kappa(const ResultantSummary& summary, int d, const KappaRule& rule,
                             double kappa_max = kDefaultKappaMax);

/// Solves A_d(κ) = r̄ on [0, kappa_max] by safeguarded Newton iteration.
double invert_bessel_ratio(int d, double rbar, double kappa_max = kDefaultKappaMax);

struct VmfFit {
  VmfParams params;
  ResultantSummary summary;
  bool saturated = false;
};

/// Maximum-likelihood direction and concentration of unit vectors (rows of
/// `points`), optionally weighted.
VmfFit fit_vmf(const Matrix& points, std::span<const double> weights = {},
               const KappaRule& rule = KappaRule::order(KappaRule::Kind::exact),
               double kappa_max = kDefaultKappaMax);

double vmf_log_density(const VmfParams& params, const Eigen::Ref<const Vector>& x);

/// Uniform draw on S^{d-1}.
Vector sample_uniform_sphere(int d, Rng& rng);

/// n draws from vMF(θ, κ) as rows, by Wood's rejection scheme.
Matrix sample_vmf(const VmfParams& params, int n, Rng& rng);

/// Tukey ladder-of-powers transform followed by row re-normalization.
/// beta = 0 means log(x + 1e-6).
Matrix tukey_transform(const Matrix& raw, double beta);

}  // namespace vmfmil
