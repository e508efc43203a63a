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
#include <filesystem>
#include <set>

#include <boost/math/special_functions/bessel.hpp>

#include "helpers.hpp"
#include "vmfmil/background.hpp"
#include "vmfmil/eval.hpp"

namespace vmfmil {
namespace {

SyntheticWorld world_with_base(std::uint64_t seed) {
  SyntheticWorldSpec spec;
  spec.d = 6;
  spec.num_classes = 4;
  spec.num_base_classes = 2;
  spec.proposals = 8;
  spec.seed = seed;
  return generate_synthetic(spec, 5);
}

// Independent MLE: pool the low-overlap rows of base-only images, then
// invert A_d by bisection on Boost's long double Bessel ratio.
VmfParams oracle_background(const SyntheticWorld& world, double threshold) {
  const std::set<std::string> base(world.index.base_classes.begin(),
                                   world.index.base_classes.end());
  const int d = world.proposals.front().dim();
  Vector sum = Vector::Zero(d);
  double count = 0.0;
  for (std::size_t i = 0; i < world.proposals.size(); ++i) {
    const auto& record = world.index.images[i];
    bool has_base = false, has_novel = false;
    for (const auto& l : record.labels) (base.contains(l) ? has_base : has_novel) = true;
    if (!has_base || has_novel) continue;
    const auto& set = world.proposals[i];
    for (int j = 0; j < set.size(); ++j) {
      double best = 0.0;
      for (const auto& g : record.gt) best = std::max(best, iou(set.boxes[j], g.box));
      if (best < threshold) {
        sum += set.features.row(j).transpose();
        count += 1.0;
      }
    }
  }
  const double rbar = sum.norm() / count;
  const auto ratio = [d](long double k) {
    return boost::math::cyl_bessel_i(d / 2.0L, k) / boost::math::cyl_bessel_i(d / 2.0L - 1.0L, k);
  };
  long double lo = 0.0L, hi = 1e4L;
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    (ratio(mid) < rbar ? lo : hi) = mid;
  }
  return {sum.normalized(), static_cast<double>(0.5L * (lo + hi))};
}

TEST_CASE("fit_background matches an independent maximum-likelihood fit") {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const SyntheticWorld world = world_with_base(seed);
    const ProposalStore store(world.proposals);
    const BackgroundFit fit = fit_background(world.index, store, 0.3);
    const VmfParams oracle = oracle_background(world, 0.3);
    CHECK(fit.model.kind == BackgroundModel::Kind::vmf);
    // Base-only images: 2 classes × 5 images × 6 background strips.
    CHECK(fit.negatives == 60);
    CHECK((fit.model.params.theta - oracle.theta).norm() < 1e-12);
    CHECK(fit.model.params.kappa == doctest::Approx(oracle.kappa).epsilon(1e-9));
    CHECK_FALSE(fit.saturated);
  }
}

TEST_CASE("background direction approaches the planted one") {
  SyntheticWorldSpec spec;
  spec.seed = 4;
  const SyntheticWorld world = generate_synthetic(spec, 40);
  const BackgroundFit fit = fit_background(world.index, ProposalStore(world.proposals));
  CHECK(fit.model.params.theta.dot(world.truth.background_direction) > 0.99);
  CHECK(fit.model.params.kappa == doctest::Approx(spec.kappa_background).epsilon(0.1));
}

TEST_CASE("a looser threshold admits the full-image proposals") {
  const SyntheticWorld world = world_with_base(3);
  const ProposalStore store(world.proposals);
  // The full-image box has IoU 1/3 with the object.
  CHECK(fit_background(world.index, store, 0.34).negatives == 70);
  CHECK(fit_background(world.index, store, 1.0 / 3.0).negatives == 60);
}

TEST_CASE("fit_background errors") {
  SyntheticWorld world = world_with_base(5);
  const ProposalStore store(world.proposals);
  CHECK_THROWS_AS(fit_background(world.index, store, 0.0), DataError);
  world.index.base_classes.clear();
  world.index.novel_classes = {"c00", "c01", "c02", "c03"};
  CHECK_THROWS_AS(fit_background(world.index, store, 0.3), DataError);
}

TEST_CASE("log scores of each variant") {
  Vector theta(3);
  theta << 0.0, 0.6, 0.8;
  Vector x(3);
  x << 1.0, 0.0, 0.0;
  const auto vmf = BackgroundModel::vmf({theta, 4.0});
  CHECK(bg_log_score(vmf, theta) == doctest::Approx(4.0));
  CHECK(bg_log_score(vmf, x) == 0.0);
  CHECK(bg_log_score(BackgroundModel::uniform(), x) == 0.0);
  const auto obj = BackgroundModel::objectness(2.0);
  CHECK(bg_log_score(obj, x, 0.25) == doctest::Approx(std::log(1.5 + 1e-9)));
  CHECK(bg_log_score(obj, x, 1.0) == doctest::Approx(std::log(1e-9)));
  CHECK_THROWS_AS(bg_log_score(obj, x), DataError);
  CHECK_THROWS_AS(bg_log_score(obj, x, 1.5), DomainError);
  CHECK_THROWS_AS(bg_log_score(vmf, Vector::Ones(2)), DimensionMismatch);
}

TEST_CASE("vectorized scores agree with the scalar form") {
  Rng rng(8);
  ProposalSet image = testing::random_image("a", 5, 4, rng);
  image.objectness = Vector::LinSpaced(5, 0.0, 1.0);
  const auto vmf = BackgroundModel::vmf({testing::random_unit(4, rng), 3.0});
  const auto obj = BackgroundModel::objectness(0.7);
  const Vector a = bg_log_scores(vmf, image);
  const Vector b = bg_log_scores(obj, image);
  for (int j = 0; j < 5; ++j) {
    CHECK(a[j] == doctest::Approx(bg_log_score(vmf, image.features.row(j).transpose())));
    CHECK(b[j] == doctest::Approx(bg_log_score(obj, image.features.row(j).transpose(),
                                               (*image.objectness)[j])));
  }
  CHECK(bg_log_scores(BackgroundModel::uniform(), image).isZero());
}

TEST_CASE("low_overlap_proposals uses a strict threshold") {
  ProposalSet image;
  image.image_id = "a";
  image.boxes = {{0, 0, 10, 10}, {0, 0, 5, 10}, {20, 20, 30, 30}};
  image.features = Matrix::Identity(3, 3);
  const std::vector<GtBox> gt = {{"x", {0, 0, 10, 10}}};
  CHECK(low_overlap_proposals(image, gt, 0.5) == std::vector<int>{2});
  CHECK(low_overlap_proposals(image, gt, 0.51) == std::vector<int>{1, 2});
}

TEST_CASE("background models round-trip through JSON files") {
  const auto path = std::filesystem::temp_directory_path() / "vmfmil_bg.json";
  Vector theta(2);
  theta << 0.6, 0.8;
  for (const auto& model : {BackgroundModel::vmf({theta, 2.5}), BackgroundModel::objectness(0.3),
                            BackgroundModel::uniform()}) {
    save_background(model, path);
    const BackgroundModel back = load_background(path);
    CHECK(back.kind == model.kind);
    CHECK(back.alpha == model.alpha);
    CHECK(back.params.kappa == model.params.kappa);
    CHECK(back.params.theta == model.params.theta);
  }
  CHECK_THROWS_AS(background_from_json({{"variant", "mystery"}}), DataError);
  CHECK_THROWS_AS(BackgroundModel::objectness(-1.0), DomainError);
}

}  // namespace
}  // namespace vmfmil
