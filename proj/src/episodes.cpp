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

#include "vmfmil/episodes.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace vmfmil {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// k draws without replacement from `pool` (partial Fisher-Yates).
template <typename T>
std::vector<T> draw(std::vector<T> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

void EpisodeSpec::validate() const {
  if (n_way < 1) throw DomainError(fmt::format("N must be >= 1, got {}", n_way));
  if (k_shot < 1) throw DomainError(fmt::format("K must be >= 1, got {}", k_shot));
  if (num_query < 0) throw DomainError(fmt::format("num_query must be >= 0, got {}", num_query));
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t index) {
  return splitmix64(splitmix64(run_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

EpisodeSampler::EpisodeSampler(const DatasetIndex& index, EpisodeSpec spec)
    : index_(&index), spec_(spec) {
  spec_.validate();
  const std::set<std::string> novel(index.novel_classes.begin(), index.novel_classes.end());
  for (const auto& c : index.novel_classes) by_class_[c];
  for (std::size_t i = 0; i < index.images.size(); ++i) {
    const auto& labels = index.images[i].labels;
    bool all_novel = !labels.empty();
    for (const auto& label : labels) {
      if (novel.contains(label)) {
        by_class_[label].push_back(i);
      } else {
        all_novel = false;
      }
    }
    if (all_novel) novel_only_.push_back(i);
  }
}

Episode EpisodeSampler::sample(Rng& rng) const {
  const auto& index = *index_;
  const auto n = static_cast<std::size_t>(spec_.n_way);
  const auto k = static_cast<std::size_t>(spec_.k_shot);
  if (index.novel_classes.size() < n) {
    throw CapacityError(fmt::format("{}-way episode needs {} novel classes, dataset has {}", n, n,
                                    index.novel_classes.size()));
  }

  Episode ep;
  ep.classes = draw(index.novel_classes, n, rng);
  std::set<std::size_t> used;
  for (const auto& c : ep.classes) {
    const auto& pool = by_class_.at(c);
    if (pool.size() < k) {
      throw CapacityError(
          fmt::format("class '{}' has {} images, {}-shot needs {}", c, pool.size(), k, k));
    }
    std::vector<std::string> ids;
    for (std::size_t i : draw(pool, k, rng)) {
      ids.push_back(index.images[i].image_id);
      used.insert(i);
    }
    ep.support.push_back(std::move(ids));
  }

  std::vector<std::size_t> query_pool;
  for (std::size_t i = 0; i < index.images.size(); ++i) {
    if (used.contains(i)) continue;
    const auto& record = index.images[i];
    if (std::any_of(ep.classes.begin(), ep.classes.end(),
                    [&](const std::string& c) { return record.has_label(c); })) {
      query_pool.push_back(i);
    }
  }
  const auto wanted = static_cast<std::size_t>(spec_.num_query);
  if (query_pool.size() < wanted) {
    spdlog::warn("only {} query images available, {} requested", query_pool.size(), wanted);
  }
  for (std::size_t i : draw(std::move(query_pool), wanted, rng)) {
    ep.query.push_back(index.images[i].image_id);
    used.insert(i);
  }

  if (spec_.with_extra_negatives) {
    for (const auto& c : ep.classes) {
      std::vector<std::size_t> pool;
      for (std::size_t i : novel_only_) {
        if (!used.contains(i) && !index.images[i].has_label(c)) pool.push_back(i);
      }
      if (pool.size() < k) {
        throw CapacityError(fmt::format("class '{}' has {} candidate negative images, need {}", c,
                                        pool.size(), k));
      }
      std::vector<std::string> ids;
      for (std::size_t i : draw(std::move(pool), k, rng)) ids.push_back(index.images[i].image_id);
      ep.extra_negatives.push_back(std::move(ids));
    }
  }
  return ep;
}

Episode EpisodeSampler::sample(std::uint64_t seed) const {
  Rng rng(seed);
  Episode ep = sample(rng);
  ep.seed = seed;
  return ep;
}

Episode sample_episode(const DatasetIndex& index, const EpisodeSpec& spec, Rng& rng) {
  return EpisodeSampler(index, spec).sample(rng);
}

EpisodeStream::EpisodeStream(const DatasetIndex& index, EpisodeSpec spec, std::uint64_t run_seed,
                             std::size_t count)
    : sampler_(index, spec), run_seed_(run_seed), count_(count) {}

Episode EpisodeStream::next() {
  if (done()) throw DomainError("episode stream exhausted");
  return at(next_++);
}

Episode EpisodeStream::at(std::size_t i) const { return sampler_.sample(episode_seed(run_seed_, i)); }

EpisodeStream sample_benchmark(const DatasetIndex& index, const EpisodeSpec& spec,
                               std::uint64_t run_seed, std::size_t num_episodes) {
  return {index, spec, run_seed, num_episodes};
}

std::vector<std::string> support_images(const Episode& episode) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& ids : episode.support) {
    for (const auto& id : ids) {
      if (seen.insert(id).second) out.push_back(id);
    }
  }
  return out;
}

json to_json(const Episode& ep) {
  json j = {{"seed", ep.seed}, {"classes", ep.classes}, {"support", ep.support},
            {"query", ep.query}};
  if (!ep.extra_negatives.empty()) j["extra_negatives"] = ep.extra_negatives;
  return j;
}

Episode episode_from_json(const json& j) {
  try {
    Episode ep;
    ep.seed = j.value("seed", std::uint64_t{0});
    ep.classes = j.at("classes").get<std::vector<std::string>>();
    ep.support = j.at("support").get<std::vector<std::vector<std::string>>>();
    ep.query = j.at("query").get<std::vector<std::string>>();
    if (j.contains("extra_negatives")) {
      ep.extra_negatives = j.at("extra_negatives").get<std::vector<std::vector<std::string>>>();
    }
    if (ep.support.size() != ep.classes.size() ||
        (!ep.extra_negatives.empty() && ep.extra_negatives.size() != ep.classes.size())) {
      throw DataError("episode support/negatives do not align with its classes");
    }
    return ep;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("episode record: {}", e.what()));
  }
}

void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& path) {
  json list = json::array();
  for (const auto& ep : episodes) list.push_back(to_json(ep));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << json{{"episodes", list}}.dump(1) << '\n';
}

std::vector<Episode> load_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    const json j = json::parse(in);
    std::vector<Episode> out;
    for (const auto& e : j.at("episodes")) out.push_back(episode_from_json(e));
    return out;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

}  // namespace vmfmil
