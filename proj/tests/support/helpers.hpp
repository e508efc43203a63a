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

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "vmfmil/dataio.hpp"
#include "vmfmil/types.hpp"

namespace vmfmil::testing {

inline Vector random_unit(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return v.normalized();
}

inline Matrix random_unit_rows(int n, int d, Rng& rng) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) m.row(i) = random_unit(d, rng).transpose();
  return m;
}

/// Proposal set with unit-norm features and disjoint unit boxes.
inline ProposalSet random_image(const std::string& id, int p, int d, Rng& rng) {
  ProposalSet set;
  set.image_id = id;
  set.features = random_unit_rows(p, d, rng);
  for (int j = 0; j < p; ++j) set.boxes.push_back({2.0 * j, 0.0, 2.0 * j + 1.0, 1.0});
  return set;
}

/// Central finite differences of f at x.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                               double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

}  // namespace vmfmil::testing
