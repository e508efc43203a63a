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

#include "vmfmil/directional.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace vmfmil {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTukeyEpsilon = 1e-6;
constexpr double kDegenerateResultant = 1e-12;

// Orders at or above this use the uniform (Debye) expansion once x > ν.
constexpr double kDebyeMinOrder = 40.0;
// Below kDebyeMinOrder the power series is used up to this argument (or 2ν²
// when larger) and the large-argument Hankel expansion beyond it.
constexpr double kSeriesMinLimit = 500.0;

enum class Regime { series, debye, hankel };

Regime choose_regime(double nu, double x) {
  if (x <= nu) return Regime::series;
  if (nu >= kDebyeMinOrder) return Regime::debye;
  if (x <= std::max(kSeriesMinLimit, 2.0 * nu * nu)) return Regime::series;
  return Regime::hankel;
}

// log Σ_k (x²/4)^k Γ(ν+1) / (k! Γ(ν+k+1)), so that
// I_ν(x) = (x/2)^ν / Γ(ν+1) · exp(result). All terms are positive.
double log_series_sum(double nu, double x) {
  const double q = 0.25 * x * x;
  constexpr double kRescale = 1e280;
  const double log_rescale = std::log(kRescale);
  double log_offset = 0.0;
  double sum = 1.0;
  double term = 1.0;
  for (int k = 0; k < 10'000'000; ++k) {
    const double ratio = q / ((k + 1.0) * (nu + k + 1.0));
    term *= ratio;
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_offset += log_rescale;
    }
    if (ratio < 1.0 && term <= sum * 1e-17) break;
  }
  return log_offset + std::log(sum);
}

double log_bessel_series(double nu, double x) {
  return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + log_series_sum(nu, x);
}

// Debye polynomials u_k(t), k = 1..7, as coefficients of t^{k}, t^{k+2}, ...
constexpr std::array<std::array<double, 8>, 7> kDebye = {{
    {0.125, -0.20833333333333334},
    {0.0703125, -0.40104166666666669, 0.3342013888888889},
    {0.0732421875, -0.89121093750000002, 1.8464626736111112, -1.0258125964506173},
    {0.112152099609375, -2.3640869140624998, 8.78912353515625, -11.207002616222994,
     4.6695844234262474},
    {0.22710800170898438, -7.3687943594796321, 42.534998745388457, -91.818241543240021,
     84.636217674600729, -28.212072558200244},
    {0.57250142097473145, -26.491430486951554, 218.19051174421159, -699.57962737613252,
     1059.9904525279999, -765.25246814118168, 212.57013003921713},
    {1.7277275025844574, -108.09091978839466, 1200.9029132163525, -5305.646978613403,
     11655.393336864534, -13586.550006434138, 8061.7221817373093, -1919.4576623184071},
}};

// Σ_k u_k(t) / ν^k with t = 1/√(1+z²), z = x/ν.
double debye_series(double nu, double x) {
  const double z = x / nu;
  const double t = 1.0 / std::sqrt(1.0 + z * z);
  const double t2 = t * t;
  double series = 1.0;
  double t_pow = t;       // t^k
  double nu_pow = 1.0;    // ν^k
  for (std::size_t k = 0; k < kDebye.size(); ++k) {
    nu_pow *= nu;
    double poly = 0.0;
    double tp = t_pow;
    for (std::size_t j = 0; j <= k + 1 && j < kDebye[k].size(); ++j) {
      poly += kDebye[k][j] * tp;
      tp *= t2;
    }
    series += poly / nu_pow;
    t_pow *= t;
  }
  return series;
}

double log_bessel_debye(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double eta = root + std::log(z / (1.0 + root));
  return nu * eta - 0.5 * std::log(kTwoPi * nu) - 0.25 * std::log1p(z * z) +
         std::log(debye_series(nu, x));
}

// Σ_k (-1)^k a_k(ν) / x^k, truncated before the terms start growing.
double hankel_sum(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (next == 0.0) break;
    if (std::abs(next) >= std::abs(term)) break;  // asymptotic series diverging
    term = next;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double log_bessel_hankel(double nu, double x) {
  return x - 0.5 * std::log(kTwoPi * x) + std::log(hankel_sum(nu, x));
}

// log I_{ν+1}(x) − log I_ν(x) from the Debye forms with the large exponents
// cancelled analytically, using s = √(ν²+x²): νη(x/ν) = s + ν log(x/(ν+s)).
double log_ratio_debye(double nu, double x) {
  const double s0 = std::hypot(nu, x);
  const double s1 = std::hypot(nu + 1.0, x);
  const double ds = (2.0 * nu + 1.0) / (s0 + s1);
  return ds + std::log(x) - std::log(nu + 1.0 + s1) - nu * std::log1p((1.0 + ds) / (nu + s0)) -
         0.5 * std::log1p(ds / s0) + std::log(debye_series(nu + 1.0, x) / debye_series(nu, x));
}

double log_bessel_in_regime(Regime regime, double nu, double x) {
  switch (regime) {
    case Regime::series:
      return log_bessel_series(nu, x);
    case Regime::debye:
      return log_bessel_debye(nu, x);
    case Regime::hankel:
      return log_bessel_hankel(nu, x);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void check_dimension(int d) {
  if (d < 2) throw DomainError(fmt::format("vMF dimension must be at least 2, got {}", d));
}

void check_kappa(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw DomainError(fmt::format("concentration must be finite and nonnegative, got {}", kappa));
  }
}

}  // namespace

double log_bessel_i(double nu, double x) {
  if (!(nu >= 0.0) || !(x >= 0.0)) {
    throw DomainError(fmt::format("log_bessel_i requires nu >= 0 and x >= 0 (nu={}, x={})", nu, x));
  }
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return log_bessel_in_regime(choose_regime(nu, x), nu, x);
}

double log_normalizer(int d, double kappa) {
  check_dimension(d);
  check_kappa(kappa);
  const double nu = 0.5 * d - 1.0;
  const Regime regime = kappa == 0.0 ? Regime::series : choose_regime(nu, kappa);
  if (regime == Regime::series) {
    // The (κ/2)^ν factor cancels against κ^ν, which keeps κ → 0 exact.
    return 0.5 * d * std::log(kTwoPi) - nu * std::numbers::ln2 - std::lgamma(nu + 1.0) +
           (kappa == 0.0 ? 0.0 : log_series_sum(nu, kappa));
  }
  return 0.5 * d * std::log(kTwoPi) + log_bessel_in_regime(regime, nu, kappa) - nu * std::log(kappa);
}

double bessel_ratio(int d, double kappa) {
  check_dimension(d);
  check_kappa(kappa);
  if (kappa == 0.0) return 0.0;
  const double nu = 0.5 * d - 1.0;
  // Both orders share the regime picked for the lower one so the ratio is
  // continuous in κ.
  const Regime regime = choose_regime(nu, kappa);
  double log_ratio;
  if (regime == Regime::series) {
    log_ratio = std::log(0.5 * kappa) - std::log(nu + 1.0) + log_series_sum(nu + 1.0, kappa) -
                log_series_sum(nu, kappa);
  } else if (regime == Regime::debye) {
    log_ratio = log_ratio_debye(nu, kappa);
  } else {
    log_ratio = std::log(hankel_sum(nu + 1.0, kappa) / hankel_sum(nu, kappa));
  }
  return std::min(std::exp(log_ratio), std::nextafter(1.0, 0.0));
}

double bessel_ratio_derivative(int d, double kappa) {
  if (kappa == 0.0) return 1.0 / d;
  const double a = bessel_ratio(d, kappa);
  return 1.0 - a * a - (d - 1.0) * a / kappa;
}

void VmfParams::validate() const {
  if (theta.size() < 2) throw DomainError("vMF mean direction needs at least 2 dimensions");
  if (std::abs(theta.norm() - 1.0) > 1e-10) {
    throw DomainError(fmt::format("vMF mean direction must be unit norm (norm = {})", theta.norm()));
  }
  check_kappa(kappa);
}

KappaRule KappaRule::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw DomainError(fmt::format("constant concentration must be finite and >= 0, got {}", value));
  }
  return {Kind::constant, value};
}

std::string KappaRule::name() const {
  switch (kind) {
    case Kind::constant:
      return fmt::format("constant:{}", value);
    case Kind::order0:
      return "order0";
    case Kind::order1:
      return "order1";
    case Kind::order2:
      return "order2";
    case Kind::order3:
      return "order3";
    case Kind::order_inf:
      return "order_inf";
    case Kind::exact:
      return "exact";
  }
  return "unknown";
}

KappaRule KappaRule::parse(std::string_view text) {
  if (text == "order0") return order(Kind::order0);
  if (text == "order1") return order(Kind::order1);
  if (text == "order2") return order(Kind::order2);
  if (text == "order3") return order(Kind::order3);
  if (text == "order_inf" || text == "orderinf") return order(Kind::order_inf);
  if (text == "exact") return order(Kind::exact);
  constexpr std::string_view prefix = "constant:";
  if (text.starts_with(prefix)) {
    const std::string number(text.substr(prefix.size()));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == number.size() && used > 0) return constant(value);
  }
  throw DomainError(fmt::format("unknown kappa rule '{}'", text));
}

double invert_bessel_ratio(int d, double rbar, double kappa_max) {
  check_dimension(d);
  if (rbar <= 0.0) return 0.0;
  if (rbar >= bessel_ratio(d, kappa_max)) return kappa_max;

  double lo = 0.0;
  double hi = kappa_max;
  // Closed-form approximation as the starting point.
  double kappa = std::clamp(rbar * (d - rbar * rbar) / (1.0 - rbar * rbar), 1e-300, kappa_max);
  for (int iter = 0; iter < 500; ++iter) {
    const double f = bessel_ratio(d, kappa) - rbar;
    if (std::abs(f) <= 1e-13) break;
    if (f < 0.0) {
      lo = kappa;
    } else {
      hi = kappa;
    }
    const double slope = bessel_ratio_derivative(d, kappa);
    double next = kappa - f / slope;
    if (!(slope > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - kappa) <= 1e-15 * std::max(1.0, kappa)) {
      kappa = next;
      break;
    }
    kappa = next;
  }
  return kappa;
}

KappaEstimate estimate_kappa(double rbar, int d, const KappaRule& rule, double kappa_max) {
  check_dimension(d);
  if (!(rbar >= 0.0) || rbar > 1.0 + 1e-9) {
    throw DomainError(fmt::format("mean resultant length must lie in [0, 1], got {}", rbar));
  }
  rbar = std::min(rbar, 1.0);
  const double r2 = rbar * rbar;
  const double base = d * rbar;

  auto capped = [kappa_max](double kappa) {
    if (kappa >= kappa_max) return KappaEstimate{kappa_max, true};
    return KappaEstimate{kappa, false};
  };
  auto saturate = [&]() {
    spdlog::warn("mean resultant length {} saturates the {} estimator; kappa set to {}", rbar,
                 rule.name(), kappa_max);
    return KappaEstimate{kappa_max, true};
  };

  switch (rule.kind) {
    case KappaRule::Kind::constant:
      return {rule.value, false};
    case KappaRule::Kind::order0:
      return capped(base);
    case KappaRule::Kind::order1:
      return capped(base * (1.0 + r2));
    case KappaRule::Kind::order2:
      return capped(base * (1.0 + r2 + r2 * r2));
    case KappaRule::Kind::order3:
      return capped(base * (1.0 + r2 + r2 * r2 + r2 * r2 * r2));
    case KappaRule::Kind::order_inf:
      if (rbar >= 1.0) return saturate();
      return capped(base / (1.0 - r2));
    case KappaRule::Kind::exact:
      if (rbar >= 1.0) return saturate();
      return capped(invert_bessel_ratio(d, rbar, kappa_max));
  }
  throw DomainError("unhandled kappa rule");
}

KappaEstimate estimate_kappa(const ResultantSummary& summary, int d, const KappaRule& rule,
                             double kappa_max) {
  return estimate_kappa(summary.rbar, d, rule, kappa_max);
}

VmfFit fit_vmf(const Matrix& points, std::span<const double> weights, const KappaRule& rule,
               double kappa_max) {
  if (points.rows() < 1) throw DomainError("fit_vmf needs at least one point");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != points.rows()) {
    throw DimensionMismatch(
        fmt::format("fit_vmf got {} weights for {} points", weights.size(), points.rows()));
  }
  Vector resultant = Vector::Zero(points.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw DomainError(fmt::format("negative weight {} at point {}", w, i));
    resultant += w * points.row(i).transpose();
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("fit_vmf weights are all zero");
  const double norm = resultant.norm();
  if (norm < kDegenerateResultant) {
    throw DegenerateResultant(
        fmt::format("resultant norm {} is below {}; mean direction undefined", norm,
                    kDegenerateResultant));
  }
  VmfFit fit;
  fit.summary = {resultant, std::min(norm / total, 1.0), total};
  const KappaEstimate estimate = estimate_kappa(fit.summary, static_cast<int>(points.cols()), rule,
                                                kappa_max);
  fit.params = {resultant / norm, estimate.kappa};
  fit.saturated = estimate.saturated;
  return fit;
}

double vmf_log_density(const VmfParams& params, const Eigen::Ref<const Vector>& x) {
  if (x.size() != params.theta.size()) {
    throw DimensionMismatch(
        fmt::format("point has dimension {}, distribution has {}", x.size(), params.theta.size()));
  }
  return params.kappa * params.theta.dot(x) - log_normalizer(params.dim(), params.kappa);
}

Vector sample_uniform_sphere(int d, Rng& rng) {
  check_dimension(d);
  std::normal_distribution<double> normal;
  Vector v(d);
  double norm = 0.0;
  do {
    for (int j = 0; j < d; ++j) v[j] = normal(rng);
    norm = v.norm();
  } while (norm < 1e-300);
  return v / norm;
}

Matrix sample_vmf(const VmfParams& params, int n, Rng& rng) {
  params.validate();
  const int d = params.dim();
  Matrix out(n, d);
  if (params.kappa == 0.0) {
    for (int i = 0; i < n; ++i) out.row(i) = sample_uniform_sphere(d, rng).transpose();
    return out;
  }

  const double kappa = params.kappa;
  const double dm1 = d - 1.0;
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double one_minus_x0 = 2.0 * b / (1.0 + b);
  const double x0 = 1.0 - one_minus_x0;
  const double c = kappa * x0 + dm1 * std::log(one_minus_x0 * (2.0 - one_minus_x0));

  std::gamma_distribution<double> gamma(0.5 * dm1, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal;

  for (int i = 0; i < n; ++i) {
    double one_minus_w = 0.0;
    while (true) {
      const double g1 = gamma(rng);
      const double g2 = gamma(rng);
      const double z = g1 / (g1 + g2);
      one_minus_w = 2.0 * b * z / (1.0 - (1.0 - b) * z);
      const double w = 1.0 - one_minus_w;
      const double u = uniform(rng);
      // 1 - x0 w = (1 - x0) + x0 (1 - w), written to avoid cancellation.
      const double accept = kappa * w + dm1 * std::log(one_minus_x0 + x0 * one_minus_w) - c;
      if (u > 0.0 && accept >= std::log(u)) break;
    }
    const double w = 1.0 - one_minus_w;

    Vector v(d);
    double norm = 0.0;
    do {
      for (int j = 0; j < d; ++j) v[j] = normal(rng);
      v -= v.dot(params.theta) * params.theta;
      norm = v.norm();
    } while (norm < 1e-12);
    v /= norm;

    const double tangent = std::sqrt(std::max(0.0, one_minus_w * (1.0 + w)));
    out.row(i) = (w * params.theta + tangent * v).transpose();
  }
  return out;
}

Matrix tukey_transform(const Matrix& raw, double beta) {
  if (!std::isfinite(beta)) throw DomainError("Tukey beta must be finite");
  const bool integral = beta == std::round(beta);
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double x = raw(i, j);
      if (beta == 0.0) {
        if (!(x + kTukeyEpsilon > 0.0)) {
          throw DomainError(fmt::format("Tukey log transform of {} at ({}, {})", x, i, j));
        }
        out(i, j) = std::log(x + kTukeyEpsilon);
      } else {
        if (!integral && x < 0.0) {
          throw DomainError(
              fmt::format("Tukey power {} of negative entry {} at ({}, {})", beta, x, i, j));
        }
        out(i, j) = std::pow(x, beta);
      }
    }
    const double norm = out.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DomainError(fmt::format("Tukey transform of row {} cannot be normalized", i));
    }
    out.row(i) /= norm;
  }
  return out;
}

}  // namespace vmfmil
