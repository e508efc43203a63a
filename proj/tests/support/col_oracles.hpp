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


// Random COL instances and an enumerated posterior, shared by the unit and
// acceptance tests.

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "vmfmil/background.hpp"
#include "vmfmil/dataio.hpp"

namespace vmfmil::testing {

struct Instance {
  std::vector<ProposalSet> support;
  BackgroundModel bg;
  Vector theta;
  double kappa;
};

inline Instance random_instance(Rng& rng) {
  std::uniform_int_distribution<int> images(1, 5), proposals(1, 8), dims(2, 8);
  std::uniform_real_distribution<double> kappa(0.1, 30.0);
  std::uniform_int_distribution<int> kind(0, 2);
  const int d = dims(rng);
  Instance in;
  const int m = images(rng);
  for (int i = 0; i < m; ++i) {
    in.support.push_back(random_image("i" + std::to_string(i), proposals(rng), d, rng));
  }
  switch (kind(rng)) {
    case 0:
      in.bg = BackgroundModel::uniform();
      break;
    case 1:
      in.bg = BackgroundModel::vmf({random_unit(d, rng), kappa(rng) / 3.0});
      break;
    default: {
      in.bg = BackgroundModel::objectness(0.5 + kappa(rng) / 30.0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (auto& image : in.support) {
        image.objectness = Vector(image.size());
        for (int j = 0; j < image.size(); ++j) (*image.objectness)[j] = unit(rng);
      }
    }
  }
  in.theta = random_unit(d, rng);
  in.kappa = kappa(rng);
  return in;
}

// Posterior over the positive proposal by direct enumeration in long double:
// p(z = j) ∝ exp(κ θᵀf_j) / u⁻(f_j).
inline std::vector<long double> enumerate_posterior(const Instance& in, const ProposalSet& image) {
  std::vector<long double> p(image.size());
  long double total = 0.0L;
  for (int j = 0; j < image.size(); ++j) {
    long double log_bg = 0.0L;
    if (in.bg.kind == BackgroundModel::Kind::vmf) {
      log_bg = in.bg.params.kappa * in.bg.params.theta.dot(image.features.row(j).transpose());
    } else if (in.bg.kind == BackgroundModel::Kind::objectness) {
      log_bg = std::log(in.bg.alpha * (1.0L - (*image.objectness)[j]) + 1e-9L);
    }
    p[j] = std::exp(static_cast<long double>(in.kappa) *
                        in.theta.dot(image.features.row(j).transpose()) -
                    log_bg);
    total += p[j];
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace vmfmil::testing
