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

/// \file episodes.hpp
///
/// N-way K-shot episode sampling over the novel classes of a dataset.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmfmil/dataio.hpp"
#include "vmfmil/types.hpp"

namespace vmfmil {

struct EpisodeSpec {
  int n_way = 1;
  int k_shot = 5;
  int num_query = 5;
  /// Also draw K images lacking each class (MI-SVM negatives in COL mode).
  bool with_extra_negatives = false;

  void validate() const;
};

struct Episode {
  std::uint64_t seed = 0;
  std::vector<std::string> classes;
  /// support[c] holds the K image ids of classes[c].
  std::vector<std::vector<std::string>> support;
  std::vector<std::string> query;
  /// Empty unless requested; otherwise aligned with `classes`.
  std::vector<std::vector<std::string>> extra_negatives;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Derives the seed of episode `index` from a run seed (splitmix64 mixing).
std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t index);

/// Precomputes per-class image pools; immutable and shareable across threads.
class EpisodeSampler {
 public:
  EpisodeSampler(const DatasetIndex& index, EpisodeSpec spec);

  /// Draws one episode. Throws CapacityError naming the first drawn class
  /// with fewer than K images, or when there are fewer than N novel classes.
  Episode sample(Rng& rng) const;
  /// sample() with a generator seeded by `seed`; the seed is recorded.
  Episode sample(std::uint64_t seed) const;

  const EpisodeSpec& spec() const { return spec_; }

 private:
  const DatasetIndex* index_;
  EpisodeSpec spec_;
  std::map<std::string, std::vector<std::size_t>> by_class_;
  std::vector<std::size_t> novel_only_;
};

Episode sample_episode(const DatasetIndex& index, const EpisodeSpec& spec, Rng& rng);

/// Lazily yields episodes seeded by episode_seed(run_seed, i), i < count.
class EpisodeStream {
 public:
  EpisodeStream(const DatasetIndex& index, EpisodeSpec spec, std::uint64_t run_seed,
                std::size_t count);

  bool done() const { return next_ >= count_; }
  std::size_t size() const { return count_; }
  Episode next();
  Episode at(std::size_t i) const;

 private:
  EpisodeSampler sampler_;
  std::uint64_t run_seed_;
  std::size_t count_;
  std::size_t next_ = 0;
};

EpisodeStream sample_benchmark(const DatasetIndex& index, const EpisodeSpec& spec,
                               std::uint64_t run_seed, std::size_t num_episodes);

/// All image ids of the support set, deduplicated, first-seen order.
std::vector<std::string> support_images(const Episode& episode);

nlohmann::json to_json(const Episode& episode);
Episode episode_from_json(const nlohmann::json& j);

/// {"episodes": [...]} for exact replay.
void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& path);
std::vector<Episode> load_episodes(const std::filesystem::path& path);

}  // namespace vmfmil
