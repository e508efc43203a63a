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

/// \file background.hpp
///
/// Unnormalized background scores log u⁻(x). Normalizers are never computed:
/// they are constant per model and cancel in every softmax that uses them.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "vmfmil/dataio.hpp"
#include "vmfmil/directional.hpp"
#include "vmfmil/types.hpp"

namespace vmfmil {

/// Added inside the objectness log so obj = 1 stays finite.
inline constexpr double kObjectnessEpsilon = 1e-9;

struct BackgroundModel {
  enum class Kind { uniform, vmf, objectness };

  Kind kind = Kind::uniform;
  VmfParams params;    // Kind::vmf
  double alpha = 1.0;  // Kind::objectness

  static BackgroundModel uniform() { return {}; }
  static BackgroundModel vmf(VmfParams params);
  static BackgroundModel objectness(double alpha);

  bool needs_objectness() const { return kind == Kind::objectness; }
  std::string name() const;
  void validate() const;
};

/// log u⁻(x): κ_bg θ_bgᵀx, log(α(1 − obj) + ε) or 0. Throws DataError when an
/// objectness model gets no objectness value.
double bg_log_score(const BackgroundModel& model, const Eigen::Ref<const Vector>& feature,
                    std::optional<double> objectness = {});

/// bg_log_score for every proposal of an image.
Vector bg_log_scores(const BackgroundModel& model, const ProposalSet& image);

struct BackgroundFit {
  BackgroundModel model;
  std::size_t negatives = 0;
  bool saturated = false;
};

/// Fits a vMF to every base-image proposal whose max IoU with the image's gt
/// boxes is below `iou_threshold`. Base images are those carrying a base label
/// and no novel one; images without proposals are skipped. Throws DataError
/// when nothing is collected.
BackgroundFit fit_background(const DatasetIndex& index, const ProposalStore& proposals,
                             double iou_threshold = 0.3,
                             const KappaRule& rule = KappaRule::order(KappaRule::Kind::exact),
                             double kappa_max = kDefaultKappaMax);

/// Indices of proposals whose max IoU with `gt` is below `iou_threshold`.
std::vector<int> low_overlap_proposals(const ProposalSet& image, std::span<const GtBox> gt,
                                       double iou_threshold);

/// {variant, theta, kappa, alpha}
nlohmann::json to_json(const BackgroundModel& model);
BackgroundModel background_from_json(const nlohmann::json& j);

void save_background(const BackgroundModel& model, const std::filesystem::path& path);
BackgroundModel load_background(const std::filesystem::path& path);

}  // namespace vmfmil
