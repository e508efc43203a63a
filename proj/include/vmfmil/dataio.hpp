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

/// \file dataio.hpp
///
/// On-disk dataset representation.
///
/// Proposal file (little-endian):
///
///     "VMF1" | u32 version=1 | u32 d | u64 image_count |
///     per image: u32 id_len | id bytes (UTF-8) | u32 P | u8 has_objectness |
///                P×4 f32 boxes | P×d f32 features | [P f32 objectness]
///
/// Manifest: JSON lines, one ImageRecord per line
/// (`image_id`, `width`, `height`, `labels`, `gt: [{label, box}]`).
/// Dataset index: JSON with `base_classes`, `novel_classes`,
/// `proposal_file` and `manifest` (paths relative to the index file).

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vmfmil/types.hpp"

namespace vmfmil {

/// One image's proposals. Row 0 is the full-image box and its feature.
struct ProposalSet {
  std::string image_id;
  std::vector<Box> boxes;
  Matrix features;                   // P×d, unit rows
  std::optional<Vector> objectness;  // length P, in [0, 1]

  int size() const { return static_cast<int>(boxes.size()); }
  int dim() const { return static_cast<int>(features.cols()); }

  /// Throws ValidationError naming the image and row on any invariant breach.
  void validate() const;

  /// Exact equality of every field, bit for bit.
  friend bool operator==(const ProposalSet& a, const ProposalSet& b);
};

struct GtBox {
  std::string label;
  Box box;

  friend bool operator==(const GtBox&, const GtBox&) = default;
};

struct ImageRecord {
  std::string image_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<std::string> labels;
  std::vector<GtBox> gt;

  bool has_label(std::string_view label) const;
  void validate() const;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetIndex {
  std::vector<ImageRecord> images;
  std::vector<std::string> base_classes;
  std::vector<std::string> novel_classes;
  std::string proposal_file;
  std::string manifest_file;

  /// Checks base ∩ novel = ∅, unique image ids, and every record.
  void validate() const;
  /// Rebuilds the id lookup table; call after editing `images`.
  void reindex();
  /// Record lookup; throws DataError for unknown ids.
  const ImageRecord& record(std::string_view image_id) const;
  bool contains(std::string_view image_id) const;

 private:
  const ImageRecord* find(std::string_view image_id) const;

  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Writes proposal sets in the binary format above. Every set must share d.
void write_proposals(std::span<const ProposalSet> sets, const std::filesystem::path& path);

/// Random access into a proposal file through an id → byte offset table.
/// Immutable after construction; load() opens its own stream so a reader
/// can be shared across threads.
class ProposalReader {
 public:
  explicit ProposalReader(std::filesystem::path path);

  int dim() const { return dim_; }
  std::size_t size() const { return order_.size(); }
  const std::vector<std::string>& image_ids() const { return order_; }
  bool contains(std::string_view image_id) const;
  std::uint64_t offset(std::string_view image_id) const;

  ProposalSet load(std::string_view image_id) const;
  std::vector<ProposalSet> load_all() const;

 private:
  std::filesystem::path path_;
  int dim_ = 0;
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::uint64_t> offsets_;
};

/// Reads every record, or only those in `image_ids` (in file order).
std::vector<ProposalSet> read_proposals(const std::filesystem::path& path,
                                        std::optional<std::span<const std::string>> image_ids = {});

/// In-memory id → ProposalSet map used by the algorithms.
class ProposalStore {
 public:
  ProposalStore() = default;
  explicit ProposalStore(std::vector<ProposalSet> sets);

  void insert(ProposalSet set);
  const ProposalSet& at(std::string_view image_id) const;
  bool contains(std::string_view image_id) const;
  std::size_t size() const { return sets_.size(); }
  int dim() const;

 private:
  std::map<std::string, ProposalSet, std::less<>> sets_;
};

void write_manifest(std::span<const ImageRecord> records, const std::filesystem::path& path);
std::vector<ImageRecord> read_manifest(const std::filesystem::path& path);

/// Writes `<dir>/index.json`, the manifest and nothing else; the proposal
/// file is written separately.
void write_index(const DatasetIndex& index, const std::filesystem::path& index_path);
/// Loads index.json and the manifest it points to. File paths in the result
/// are resolved against the index location.
DatasetIndex read_index(const std::filesystem::path& index_path);

struct SyntheticWorldSpec {
  int d = 16;
  int num_classes = 10;
  /// The first `num_base_classes` classes form the base split.
  int num_base_classes = 5;
  double kappa_class = 50.0;
  double kappa_background = 5.0;
  int proposals = 20;
  int positives_per_image = 1;
  double full_image_mix = 0.6;
  bool with_objectness = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlantedTruth {
  std::map<std::string, std::vector<int>> positives;  // image_id → positive rows
  std::map<std::string, Vector> class_directions;
  Vector background_direction;
};

struct SyntheticWorld {
  DatasetIndex index;
  std::vector<ProposalSet> proposals;
  PlantedTruth truth;
};

/// Planted world: per-class vMF positives among vMF background draws, with
/// boxes laid out so positives have IoU 1 with the ground truth and
/// background proposals IoU 0. All values are float-representable, so the
/// world round-trips through the proposal file exactly.
SyntheticWorld generate_synthetic(const SyntheticWorldSpec& spec, int images_per_class);

void write_truth(const PlantedTruth& truth, const std::filesystem::path& path);
PlantedTruth read_truth(const std::filesystem::path& path);

}  // namespace vmfmil
