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

/// \file optim.hpp
///
/// Limited-memory BFGS with a strong-Wolfe line search. Shared by the
/// cosine classifier, the MI-SVM and the objectness regressor.

#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "vmfmil/types.hpp"

namespace vmfmil::optim {

/// Objective callback: returns f(x) and writes the gradient into `grad`
/// (already sized to x.size()).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsOptions {
  /// Number of stored curvature pairs.
  int memory = 10;
  int max_iters = 200;
  /// Converged when ‖∇f‖∞ drops below this.
  double grad_tol = 1e-6;
  /// Sufficient-decrease constant of the strong Wolfe conditions.
  double c1 = 1e-4;
  /// Curvature constant of the strong Wolfe conditions.
  double c2 = 0.9;
  int max_line_search_evals = 40;
  double max_step = 1e10;
};

enum class LbfgsStatus {
  converged,
  max_iterations,
  line_search_failed,
};

std::string_view to_string(LbfgsStatus status);

/// One accepted line-search step along the 1-D slice φ(α) = f(x + α p).
struct LineSearchStep {
  double alpha = 0.0;
  double phi0 = 0.0;
  double dphi0 = 0.0;
  double phi = 0.0;
  double dphi = 0.0;

  bool satisfies_strong_wolfe(double c1, double c2) const;
};

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  std::vector<LineSearchStep> steps;

  bool converged() const { return status == LbfgsStatus::converged; }
};

/// Minimizes `objective` from `x0`. Throws NumericalError if the objective
/// is non-finite at the starting point.
LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0,
                           const LbfgsOptions& options = {});

}  // namespace vmfmil::optim
