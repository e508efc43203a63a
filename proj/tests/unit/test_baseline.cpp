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


#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "helpers.hpp"
#include "vmfmil/baseline.hpp"

namespace vmfmil {
namespace {

using testing::numeric_gradient;
using testing::random_image;
using testing::random_unit_rows;

TEST_CASE("squared-hinge objective matches its definition and finite differences") {
  Rng rng(41);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 20; ++t) {
    const Matrix x = random_unit_rows(25, 4, rng);
    Vector y(25), weights(25), params(5);
    for (int i = 0; i < 25; ++i) {
      y[i] = i % 3 == 0 ? 1.0 : -1.0;
      weights[i] = 0.5 + std::abs(normal(rng));
    }
    for (int i = 0; i < 5; ++i) params[i] = normal(rng);
    double expected = 0.0;
    for (int i = 0; i < 25; ++i) {
      const double margin = y[i] * (x.row(i).dot(params.head(4)) + params[4]);
      expected += weights[i] * std::pow(std::max(0.0, 1.0 - margin), 2);
    }
    expected = expected / weights.sum() + 0.35 * params.head(4).squaredNorm();
    Vector grad;
    CHECK(svm_objective(params, x, y, weights, 0.7, grad) == doctest::Approx(expected));
    const Vector fd = numeric_gradient(
        [&](const Vector& p) {
          Vector g;
          return svm_objective(p, x, y, weights, 0.7, g);
        },
        params);
    CHECK((grad - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("logistic objective gradient matches finite differences") {
  Rng rng(42);
  std::normal_distribution<double> normal;
  const Matrix x = random_unit_rows(30, 5, rng);
  Vector y(30);
  for (int i = 0; i < 30; ++i) y[i] = i % 2;
  for (int t = 0; t < 20; ++t) {
    Vector params(6);
    for (int i = 0; i < 6; ++i) params[i] = 2.0 * normal(rng);
    Vector grad;
    logistic_objective(params, x, y, 1e-2, grad);
    const Vector fd = numeric_gradient(
        [&](const Vector& p) {
          Vector g;
          return logistic_objective(p, x, y, 1e-2, g);
        },
        params);
    CHECK((grad - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("relocalize adds weighted objectness and breaks ties low") {
  Vector svm(3), obj(3);
  svm << 1.0, 0.8, 1.0;
  obj << 0.1, 0.9, 0.1;
  CHECK(relocalize(svm, obj, 0.0) == 0);
  CHECK(relocalize(svm, obj, 0.5) == 1);
  CHECK_THROWS_AS(relocalize(svm, Vector::Zero(2), 0.5), DimensionMismatch);
}

TEST_CASE("objectness data follows the IoU bands on base images") {
  SyntheticWorldSpec spec;
  spec.num_classes = 4;
  spec.num_base_classes = 2;
  spec.proposals = 8;
  const SyntheticWorld world = generate_synthetic(spec, 5);
  const ProposalStore store(world.proposals);
  const ObjectnessData data = collect_objectness_data(world.index, store);
  // Ten base images: one object row, six background strips; the full image
  // (IoU 1/3) falls between the bands.
  CHECK(data.labels.size() == 70);
  CHECK(data.labels.sum() == 10.0);
  const ObjectnessData loose = collect_objectness_data(world.index, store, 0.5, 0.34);
  CHECK(loose.labels.size() == 80);
  CHECK_THROWS_AS(collect_objectness_data(world.index, store, 0.2, 0.3), DomainError);

  const ObjectnessScorer scorer = train_objectness(data);
  const Vector s = scorer.scores(data.features);
  for (Eigen::Index i = 0; i < s.size(); ++i) CHECK((s[i] > 0.5) == (data.labels[i] == 1.0));

  ObjectnessData one_sided = data;
  one_sided.labels.setZero();
  CHECK_THROWS_AS(train_objectness(one_sided), DataError);
}

TEST_CASE("MI-SVM terminates with a deduplicated hard-negative pool") {
  Rng rng(43);
  for (int t = 0; t < 20; ++t) {
    std::vector<ProposalSet> pos, neg;
    for (int i = 0; i < 5; ++i) pos.push_back(random_image("p" + std::to_string(i), 6, 4, rng));
    for (int i = 0; i < 4; ++i) neg.push_back(random_image("n" + std::to_string(i), 6, 4, rng));
    const ObjectnessScorer obj{testing::random_unit(4, rng), 0.0};
    MisvmConfig config;
    config.max_rounds = 10;
    const MisvmResult r = run_misvm(pos, neg, obj, config);
    CHECK(r.rounds >= 1);
    CHECK(r.rounds <= 10);
    CHECK(r.pool_sizes.size() == static_cast<std::size_t>(r.rounds));
    for (std::size_t k = 1; k < r.pool_sizes.size(); ++k) {
      CHECK(r.pool_sizes[k] >= r.pool_sizes[k - 1]);
    }
    CHECK(r.pool_sizes.back() <= 4u * 6u);
    if (r.fixed_point) {
      for (std::size_t i = 0; i < pos.size(); ++i) {
        CHECK(misvm_relocalize(r.svm, obj, config.gamma, pos[i]) == r.selections[i]);
      }
    }
  }
}

TEST_CASE("MI-SVM finds planted positives on separable bags") {
  Rng rng(44);
  const Vector dir = testing::random_unit(16, rng);
  std::vector<ProposalSet> pos, neg;
  std::vector<int> planted;
  for (int i = 0; i < 6; ++i) {
    ProposalSet p = random_image("p" + std::to_string(i), 8, 16, rng);
    const int row = 2 + i % 5;
    p.features.row(row) = sample_vmf({dir, 300.0}, 1, rng).row(0);
    p.features.row(0) = (0.6 * p.features.row(row) + 0.4 * p.features.row(1)).normalized();
    planted.push_back(row);
    pos.push_back(std::move(p));
  }
  for (int i = 0; i < 6; ++i) neg.push_back(random_image("n" + std::to_string(i), 8, 16, rng));
  const ObjectnessScorer flat{Vector::Zero(16), 0.0};
  const MisvmResult r = run_misvm(pos, neg, flat);
  for (std::size_t i = 0; i < planted.size(); ++i) CHECK(r.selections[i] == planted[i]);
}

TEST_CASE("episode without negatives is a protocol error") {
  SyntheticWorldSpec spec;
  const SyntheticWorld world = generate_synthetic(spec, 8);
  const ProposalStore store(world.proposals);
  const Episode ep = EpisodeSampler(world.index, {1, 3, 2, false}).sample(std::uint64_t{3});
  const ObjectnessScorer flat{Vector::Zero(spec.d), 0.0};
  CHECK_THROWS_AS(run_misvm_episode(ep, world.index, store, flat), ProtocolError);
  const Episode with_neg = EpisodeSampler(world.index, {1, 3, 2, true}).sample(std::uint64_t{3});
  const auto r = run_misvm_episode(with_neg, world.index, store, flat);
  CHECK(r.classes.size() == 1);
}

TEST_CASE("warm-started retraining reaches the same optimum") {
  Rng rng(45);
  const Matrix pos = random_unit_rows(5, 4, rng);
  const Matrix neg = random_unit_rows(20, 4, rng);
  const SvmTraining cold = misvm_retrain(pos, neg);
  const SvmTraining warm = misvm_retrain(pos, neg, 1.0, {}, {}, &cold.svm);
  CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-8));
  CHECK_THROWS_AS(misvm_retrain(pos, Matrix(0, 4)), DomainError);
}

}  // namespace
}  // namespace vmfmil
