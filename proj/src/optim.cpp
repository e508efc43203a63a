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

#include "vmfmil/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include <fmt/format.h>

namespace vmfmil::optim {

std::string_view to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::converged:
      return "converged";
    case LbfgsStatus::max_iterations:
      return "max_iterations";
    case LbfgsStatus::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

bool LineSearchStep::satisfies_strong_wolfe(double c1, double c2) const {
  // Small relative slack absorbs rounding in φ when the decrease is tiny.
  const double slack = 1e-12 * (1.0 + std::abs(phi0));
  return phi <= phi0 + c1 * alpha * dphi0 + slack &&
         std::abs(dphi) <= -c2 * dphi0 + 1e-12;
}

namespace {

struct Trial {
  double alpha;
  double phi;
  double dphi;
};

// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb),
// safeguarded to stay inside the interval away from its ends.
double interpolate(const Trial& a, const Trial& b) {
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double width = hi - lo;
  const double d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.dphi * b.dphi;
  double candidate = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.dphi - a.dphi + 2.0 * d2;
    if (denom != 0.0) {
      candidate = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
    }
  }
  if (!std::isfinite(candidate)) candidate = 0.5 * (lo + hi);
  return std::clamp(candidate, lo + 0.1 * width, hi - 0.1 * width);
}

class LineSearch {
 public:
  LineSearch(const Objective& objective, const Vector& x, const Vector& direction,
             double phi0, double dphi0, const LbfgsOptions& options)
      : objective_(objective),
        x_(x),
        p_(direction),
        phi0_(phi0),
        dphi0_(dphi0),
        options_(options),
        trial_x_(x.size()),
        trial_grad_(x.size()) {}

  // Returns the accepted trial or nullopt when the budget is exhausted.
  std::optional<Trial> run(double alpha) {
    Trial prev{0.0, phi0_, dphi0_};
    for (int i = 0; evals_ < options_.max_line_search_evals; ++i) {
      const Trial cur = evaluate(alpha);
      if (!std::isfinite(cur.phi)) {
        alpha = 0.5 * (prev.alpha + alpha);
        continue;
      }
      if (cur.phi > phi0_ + options_.c1 * cur.alpha * dphi0_ ||
          (i > 0 && cur.phi >= prev.phi)) {
        return zoom(prev, cur);
      }
      if (std::abs(cur.dphi) <= -options_.c2 * dphi0_) return cur;
      if (cur.dphi >= 0.0) return zoom(cur, prev);
      prev = cur;
      alpha = std::min(2.0 * alpha, options_.max_step);
      if (prev.alpha >= options_.max_step) return std::nullopt;
    }
    return std::nullopt;
  }

  int evaluations() const { return evals_; }
  // Point and gradient of the most recent evaluation, which is always the
  // accepted trial when run() succeeds.
  const Vector& last_point() const { return trial_x_; }
  const Vector& last_gradient() const { return trial_grad_; }

 private:
  Trial evaluate(double alpha) {
    trial_x_ = x_ + alpha * p_;
    const double phi = objective_(trial_x_, trial_grad_);
    ++evals_;
    const double dphi = trial_grad_.dot(p_);
    return {alpha, phi, dphi};
  }

  std::optional<Trial> zoom(Trial lo, Trial hi) {
    while (evals_ < options_.max_line_search_evals) {
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, lo.alpha)) break;
      const Trial cur = evaluate(interpolate(lo, hi));
      if (!std::isfinite(cur.phi) || cur.phi > phi0_ + options_.c1 * cur.alpha * dphi0_ ||
          cur.phi >= lo.phi) {
        hi = cur;
        continue;
      }
      if (std::abs(cur.dphi) <= -options_.c2 * dphi0_) return cur;
      if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
    return std::nullopt;
  }

  const Objective& objective_;
  const Vector& x_;
  const Vector& p_;
  double phi0_;
  double dphi0_;
  const LbfgsOptions& options_;
  Vector trial_x_;
  Vector trial_grad_;
  int evals_ = 0;
};

// Two-loop recursion: returns -H ∇f.
Vector search_direction(const Vector& grad, const std::deque<Vector>& s_hist,
                        const std::deque<Vector>& y_hist, const std::deque<double>& rho_hist) {
  Vector q = grad;
  const std::size_t m = s_hist.size();
  std::vector<double> alpha(m);
  for (std::size_t k = m; k-- > 0;) {
    alpha[k] = rho_hist[k] * s_hist[k].dot(q);
    q -= alpha[k] * y_hist[k];
  }
  if (m > 0) {
    const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    q *= gamma;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double beta = rho_hist[k] * y_hist[k].dot(q);
    q += (alpha[k] - beta) * s_hist[k];
  }
  return -q;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  result.grad = Vector::Zero(result.x.size());
  result.f = objective(result.x, result.grad);
  result.evaluations = 1;
  if (!std::isfinite(result.f) || !result.grad.allFinite()) {
    throw NumericalError(fmt::format("non-finite objective at the starting point (f = {})", result.f));
  }

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;

  while (true) {
    if (result.grad.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      result.status = LbfgsStatus::converged;
      return result;
    }
    if (result.iterations >= options.max_iters) {
      result.status = LbfgsStatus::max_iterations;
      return result;
    }

    Vector direction = search_direction(result.grad, s_hist, y_hist, rho_hist);
    double dphi0 = result.grad.dot(direction);
    if (!(dphi0 < 0.0)) {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -result.grad;
      dphi0 = result.grad.dot(direction);
    }
    const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / direction.norm()) : 1.0;

    LineSearch search(objective, result.x, direction, result.f, dphi0, options);
    const std::optional<Trial> accepted = search.run(alpha0);
    result.evaluations += search.evaluations();
    if (!accepted) {
      result.status = LbfgsStatus::line_search_failed;
      return result;
    }

    Vector x_new = search.last_point();
    Vector g_new = search.last_gradient();
    result.steps.push_back({accepted->alpha, result.f, dphi0, accepted->phi, accepted->dphi});

    Vector s = x_new - result.x;
    Vector y = g_new - result.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
      if (static_cast<int>(s_hist.size()) == options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    result.x = std::move(x_new);
    result.grad = std::move(g_new);
    result.f = accepted->phi;
    ++result.iterations;
  }
}

}  // namespace vmfmil::optim
