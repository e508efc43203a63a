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

#include "vmfmil/background.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vmfmil/eval.hpp"

namespace vmfmil {

using nlohmann::json;

BackgroundModel BackgroundModel::vmf(VmfParams params) {
  BackgroundModel model;
  model.kind = Kind::vmf;
  model.params = std::move(params);
  model.validate();
  return model;
}

BackgroundModel BackgroundModel::objectness(double alpha) {
  BackgroundModel model;
  model.kind = Kind::objectness;
  model.alpha = alpha;
  model.validate();
  return model;
}

std::string BackgroundModel::name() const {
  switch (kind) {
    case Kind::uniform:
      return "uniform";
    case Kind::vmf:
      return "vmf";
    case Kind::objectness:
      return "objectness";
  }
  return "unknown";
}

void BackgroundModel::validate() const {
  if (kind == Kind::vmf) params.validate();
  if (kind == Kind::objectness && !(alpha > 0.0 && std::isfinite(alpha))) {
    throw DomainError(fmt::format("objectness background needs alpha > 0, got {}", alpha));
  }
}

double bg_log_score(const BackgroundModel& model, const Eigen::Ref<const Vector>& feature,
                    std::optional<double> objectness) {
  switch (model.kind) {
    case BackgroundModel::Kind::uniform:
      return 0.0;
    case BackgroundModel::Kind::vmf:
      if (feature.size() != model.params.theta.size()) {
        throw DimensionMismatch(fmt::format("background has d={}, feature has d={}",
                                            model.params.theta.size(), feature.size()));
      }
      return model.params.kappa * model.params.theta.dot(feature);
    case BackgroundModel::Kind::objectness:
      if (!objectness) throw DataError("objectness background needs per-proposal objectness");
      if (!(*objectness >= 0.0 && *objectness <= 1.0)) {
        throw DomainError(fmt::format("objectness {} outside [0, 1]", *objectness));
      }
      return std::log(model.alpha * (1.0 - *objectness) + kObjectnessEpsilon);
  }
  return 0.0;
}

Vector bg_log_scores(const BackgroundModel& model, const ProposalSet& image) {
  const int p = image.size();
  Vector out(p);
  switch (model.kind) {
    case BackgroundModel::Kind::uniform:
      out.setZero();
      break;
    case BackgroundModel::Kind::vmf:
      if (image.dim() != model.params.dim()) {
        throw DimensionMismatch(fmt::format("background has d={}, image '{}' has d={}",
                                            model.params.dim(), image.image_id, image.dim()));
      }
      out = model.params.kappa * (image.features * model.params.theta);
      break;
    case BackgroundModel::Kind::objectness:
      if (!image.objectness) {
        throw DataError(
            fmt::format("image '{}' has no objectness for the objectness background",
                        image.image_id));
      }
      for (int j = 0; j < p; ++j) {
        out[j] = bg_log_score(model, image.features.row(j).transpose(), (*image.objectness)[j]);
      }
      break;
  }
  return out;
}

std::vector<int> low_overlap_proposals(const ProposalSet& image, std::span<const GtBox> gt,
                                       double iou_threshold) {
  std::vector<int> rows;
  for (int j = 0; j < image.size(); ++j) {
    double best = 0.0;
    for (const auto& g : gt) best = std::max(best, iou(image.boxes[j], g.box));
    if (best < iou_threshold) rows.push_back(j);
  }
  return rows;
}

BackgroundFit fit_background(const DatasetIndex& index, const ProposalStore& proposals,
                             double iou_threshold, const KappaRule& rule, double kappa_max) {
  const auto is_base = [&](const std::string& label) {
    return std::find(index.base_classes.begin(), index.base_classes.end(), label) !=
           index.base_classes.end();
  };
  std::vector<const ProposalSet*> images;
  std::vector<std::vector<int>> rows;
  std::size_t total = 0;
  for (const auto& record : index.images) {
    const bool base = std::any_of(record.labels.begin(), record.labels.end(), is_base);
    const bool novel = std::any_of(record.labels.begin(), record.labels.end(),
                                   [&](const std::string& l) { return !is_base(l); });
    if (!base || novel || !proposals.contains(record.image_id)) continue;
    if (record.gt.empty()) {
      throw DataError(fmt::format("base image '{}' has no gt boxes", record.image_id));
    }
    const ProposalSet& set = proposals.at(record.image_id);
    auto picked = low_overlap_proposals(set, record.gt, iou_threshold);
    total += picked.size();
    images.push_back(&set);
    rows.push_back(std::move(picked));
  }
  if (total == 0) {
    throw DataError(fmt::format("no base proposals below IoU {} to fit the background",
                                iou_threshold));
  }

  Matrix negatives(static_cast<Eigen::Index>(total), proposals.dim());
  Eigen::Index next = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (int j : rows[i]) negatives.row(next++) = images[i]->features.row(j);
  }
  const VmfFit fit = fit_vmf(negatives, {}, rule, kappa_max);
  spdlog::info("background fit on {} negatives from {} base images: kappa={:.4g}", total,
               images.size(), fit.params.kappa);
  return {BackgroundModel::vmf(fit.params), total, fit.saturated};
}

json to_json(const BackgroundModel& model) {
  json j = {{"variant", model.name()}, {"kappa", nullptr}, {"alpha", nullptr},
            {"theta", nullptr}};
  if (model.kind == BackgroundModel::Kind::vmf) {
    const Vector& t = model.params.theta;
    j["theta"] = std::vector<double>(t.data(), t.data() + t.size());
    j["kappa"] = model.params.kappa;
  }
  if (model.kind == BackgroundModel::Kind::objectness) j["alpha"] = model.alpha;
  return j;
}

BackgroundModel background_from_json(const json& j) {
  try {
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "uniform") return BackgroundModel::uniform();
    if (variant == "objectness") return BackgroundModel::objectness(j.at("alpha").get<double>());
    if (variant == "vmf") {
      const auto theta = j.at("theta").get<std::vector<double>>();
      VmfParams params{Eigen::Map<const Vector>(theta.data(), theta.size()),
                       j.at("kappa").get<double>()};
      return BackgroundModel::vmf(std::move(params));
    }
    throw DataError(fmt::format("unknown background variant '{}'", variant));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("background model: {}", e.what()));
  } catch (const DomainError& e) {
    throw DataError(fmt::format("background model: {}", e.what()));
  }
}

void save_background(const BackgroundModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << to_json(model).dump(2) << '\n';
}

BackgroundModel load_background(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    return background_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

}  // namespace vmfmil
