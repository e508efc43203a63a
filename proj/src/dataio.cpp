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

#include "vmfmil/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vmfmil/directional.hpp"

namespace vmfmil {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "proposal files are little-endian; big-endian hosts need byte swapping");

namespace {

constexpr char kMagic[4] = {'V', 'M', 'F', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr double kNormTolerance = 1e-5;

// ---------------------------------------------------------------- binary io

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Cursor {
 public:
  Cursor(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  template <typename T>
  T get(std::string_view what) {
    T value;
    read(reinterpret_cast<char*>(&value), sizeof(T), what);
    return value;
  }

  void read(char* dst, std::size_t bytes, std::string_view what) {
    in_.read(dst, static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes) {
      throw DataError(fmt::format("{}: truncated record while reading {}", path_.string(), what));
    }
  }

  void skip(std::uint64_t bytes, std::string_view what) {
    const auto here = in_.tellg();
    in_.seekg(0, std::ios::end);
    const auto end = in_.tellg();
    if (here < 0 || end < 0 || static_cast<std::uint64_t>(end - here) < bytes) {
      throw DataError(fmt::format("{}: truncated record while skipping {}", path_.string(), what));
    }
    in_.seekg(here + static_cast<std::streamoff>(bytes));
  }

  std::uint64_t remaining() {
    const auto here = in_.tellg();
    in_.seekg(0, std::ios::end);
    const auto end = in_.tellg();
    in_.seekg(here);
    return static_cast<std::uint64_t>(end - here);
  }

  std::uint64_t position() { return static_cast<std::uint64_t>(in_.tellg()); }

 private:
  std::istream& in_;
  const std::filesystem::path& path_;
};

struct Header {
  std::uint32_t dim;
  std::uint64_t count;
};

Header read_header(Cursor& cursor, const std::filesystem::path& path) {
  char magic[4];
  cursor.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(fmt::format("{}: bad magic, not a proposal file", path.string()));
  }
  const auto version = cursor.get<std::uint32_t>("version");
  if (version != kVersion) {
    throw DataError(fmt::format("{}: unknown proposal file version {}", path.string(), version));
  }
  Header header;
  header.dim = cursor.get<std::uint32_t>("dimension");
  header.count = cursor.get<std::uint64_t>("image count");
  return header;
}

struct RecordShape {
  std::string id;
  std::uint32_t proposals;
  bool has_objectness;
};

RecordShape read_record_head(Cursor& cursor, const std::filesystem::path& path) {
  RecordShape shape;
  const auto id_len = cursor.get<std::uint32_t>("id length");
  if (id_len > cursor.remaining()) {
    throw DataError(fmt::format("{}: truncated record (id length {} exceeds file)", path.string(),
                                id_len));
  }
  shape.id.resize(id_len);
  cursor.read(shape.id.data(), id_len, "image id");
  shape.proposals = cursor.get<std::uint32_t>("proposal count");
  const auto flag = cursor.get<std::uint8_t>("objectness flag");
  if (flag > 1) {
    throw DataError(fmt::format("{}: record '{}' has invalid objectness flag {}", path.string(),
                                shape.id, flag));
  }
  shape.has_objectness = flag == 1;
  return shape;
}

std::uint64_t payload_bytes(const RecordShape& shape, std::uint32_t dim) {
  const std::uint64_t p = shape.proposals;
  return 4 * (p * 4 + p * dim + (shape.has_objectness ? p : 0));
}

ProposalSet read_record_body(Cursor& cursor, RecordShape shape, std::uint32_t dim,
                             const std::filesystem::path& path) {
  if (payload_bytes(shape, dim) > cursor.remaining()) {
    throw DataError(fmt::format("{}: truncated record '{}' ({} proposals declared)", path.string(),
                                shape.id, shape.proposals));
  }
  const Eigen::Index p = shape.proposals;
  ProposalSet set;
  set.image_id = std::move(shape.id);
  std::vector<float> buffer(static_cast<std::size_t>(p) * 4);
  cursor.read(reinterpret_cast<char*>(buffer.data()), buffer.size() * 4, "boxes");
  set.boxes.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    set.boxes[i] = {buffer[4 * i], buffer[4 * i + 1], buffer[4 * i + 2], buffer[4 * i + 3]};
  }
  buffer.resize(static_cast<std::size_t>(p) * dim);
  cursor.read(reinterpret_cast<char*>(buffer.data()), buffer.size() * 4, "features");
  set.features =
      Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          buffer.data(), p, dim)
          .cast<double>();
  if (shape.has_objectness) {
    buffer.resize(p);
    cursor.read(reinterpret_cast<char*>(buffer.data()), buffer.size() * 4, "objectness");
    set.objectness = Eigen::Map<const Eigen::VectorXf>(buffer.data(), p).cast<double>();
  }
  set.validate();
  return set;
}

// ---------------------------------------------------------------- json

json box_to_json(const Box& box) { return json::array({box.x_min, box.y_min, box.x_max, box.y_max}); }

Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be an array of 4 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json record_to_json(const ImageRecord& record) {
  json gt = json::array();
  for (const auto& g : record.gt) gt.push_back({{"label", g.label}, {"box", box_to_json(g.box)}});
  return {{"image_id", record.image_id},
          {"width", record.width},
          {"height", record.height},
          {"labels", record.labels},
          {"gt", gt}};
}

ImageRecord record_from_json(const json& j) {
  ImageRecord record;
  record.image_id = j.at("image_id").get<std::string>();
  record.width = j.at("width").get<double>();
  record.height = j.at("height").get<double>();
  record.labels = j.at("labels").get<std::vector<std::string>>();
  if (j.contains("gt")) {
    for (const auto& g : j.at("gt")) {
      record.gt.push_back({g.at("label").get<std::string>(), box_from_json(g.at("box"))});
      if (!record.has_label(record.gt.back().label)) {
        throw DataError(fmt::format("image '{}': gt class '{}' is not among its labels",
                                    record.image_id, record.gt.back().label));
      }
    }
  }
  return record;
}

float to_float(double x) { return static_cast<float>(x); }

}  // namespace

// ---------------------------------------------------------------- records

void ProposalSet::validate() const {
  const auto p = static_cast<Eigen::Index>(boxes.size());
  if (p < 1) throw ValidationError(fmt::format("image '{}' has no proposals", image_id));
  if (features.rows() != p) {
    throw ValidationError(fmt::format("image '{}' has {} boxes but {} feature rows", image_id, p,
                                      features.rows()));
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!boxes[i].valid()) {
      throw ValidationError(fmt::format("image '{}' row {}: degenerate box", image_id, i));
    }
    const double norm = features.row(i).norm();
    if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
      throw ValidationError(
          fmt::format("image '{}' row {}: feature norm {} is not 1", image_id, i, norm));
    }
  }
  if (objectness) {
    if (objectness->size() != p) {
      throw ValidationError(fmt::format("image '{}' objectness has length {}, expected {}",
                                        image_id, objectness->size(), p));
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      const double o = (*objectness)[i];
      if (!(o >= 0.0 && o <= 1.0)) {
        throw ValidationError(
            fmt::format("image '{}' row {}: objectness {} outside [0, 1]", image_id, i, o));
      }
    }
  }
}

bool operator==(const ProposalSet& a, const ProposalSet& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.array() == y.array()).all();
  };
  if (a.image_id != b.image_id || a.boxes != b.boxes || !same(a.features, b.features)) return false;
  if (a.objectness.has_value() != b.objectness.has_value()) return false;
  return !a.objectness || same(*a.objectness, *b.objectness);
}

bool ImageRecord::has_label(std::string_view label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void ImageRecord::validate() const {
  for (const auto& g : gt) {
    if (!has_label(g.label)) {
      throw ValidationError(
          fmt::format("image '{}': gt class '{}' missing from labels", image_id, g.label));
    }
    if (!g.box.valid()) {
      throw ValidationError(fmt::format("image '{}': degenerate gt box", image_id));
    }
  }
}

void DatasetIndex::validate() const {
  const std::set<std::string> base(base_classes.begin(), base_classes.end());
  for (const auto& c : novel_classes) {
    if (base.contains(c)) {
      throw ValidationError(fmt::format("class '{}' is both base and novel", c));
    }
  }
  std::set<std::string_view> seen;
  for (const auto& record : images) {
    if (!seen.insert(record.image_id).second) {
      throw ValidationError(fmt::format("duplicate image id '{}'", record.image_id));
    }
    record.validate();
  }
}

void DatasetIndex::reindex() {
  lookup_.clear();
  for (std::size_t i = 0; i < images.size(); ++i) lookup_.emplace(images[i].image_id, i);
}

const ImageRecord* DatasetIndex::find(std::string_view image_id) const {
  if (lookup_.size() == images.size()) {
    const auto it = lookup_.find(std::string(image_id));
    if (it != lookup_.end() && images[it->second].image_id == image_id) return &images[it->second];
    if (it == lookup_.end()) return nullptr;
  }
  // Stale table: fall back to a scan rather than mutating shared state.
  for (const auto& record : images) {
    if (record.image_id == image_id) return &record;
  }
  return nullptr;
}

const ImageRecord& DatasetIndex::record(std::string_view image_id) const {
  const ImageRecord* found = find(image_id);
  if (found == nullptr) throw DataError(fmt::format("unknown image id '{}'", image_id));
  return *found;
}

bool DatasetIndex::contains(std::string_view image_id) const { return find(image_id) != nullptr; }

// ---------------------------------------------------------------- proposals

void write_proposals(std::span<const ProposalSet> sets, const std::filesystem::path& path) {
  const int dim = sets.empty() ? 0 : sets.front().dim();
  for (const auto& set : sets) {
    if (set.dim() != dim) {
      throw DimensionMismatch(fmt::format("image '{}' has dimension {}, expected {}",
                                          set.image_id, set.dim(), dim));
    }
    set.validate();
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  put<std::uint64_t>(out, sets.size());
  for (const auto& set : sets) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(set.image_id.size()));
    out.write(set.image_id.data(), static_cast<std::streamsize>(set.image_id.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
    put<std::uint8_t>(out, set.objectness ? 1 : 0);
    for (const auto& b : set.boxes) {
      put(out, to_float(b.x_min));
      put(out, to_float(b.y_min));
      put(out, to_float(b.x_max));
      put(out, to_float(b.y_max));
    }
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> features =
        set.features.cast<float>();
    out.write(reinterpret_cast<const char*>(features.data()),
              static_cast<std::streamsize>(features.size() * sizeof(float)));
    if (set.objectness) {
      const Eigen::VectorXf obj = set.objectness->cast<float>();
      out.write(reinterpret_cast<const char*>(obj.data()),
                static_cast<std::streamsize>(obj.size() * sizeof(float)));
    }
  }
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

ProposalReader::ProposalReader(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open proposal file '{}'", path_.string()));
  Cursor cursor(in, path_);
  const Header header = read_header(cursor, path_);
  dim_ = static_cast<int>(header.dim);
  for (std::uint64_t i = 0; i < header.count; ++i) {
    const std::uint64_t offset = cursor.position();
    RecordShape shape = read_record_head(cursor, path_);
    cursor.skip(payload_bytes(shape, header.dim), fmt::format("record '{}'", shape.id));
    if (!offsets_.emplace(shape.id, offset).second) {
      throw DataError(fmt::format("{}: duplicate image id '{}'", path_.string(), shape.id));
    }
    order_.push_back(std::move(shape.id));
  }
}

bool ProposalReader::contains(std::string_view image_id) const {
  return offsets_.contains(std::string(image_id));
}

std::uint64_t ProposalReader::offset(std::string_view image_id) const {
  const auto it = offsets_.find(std::string(image_id));
  if (it == offsets_.end()) {
    throw DataError(fmt::format("{}: no record for image '{}'", path_.string(), image_id));
  }
  return it->second;
}

ProposalSet ProposalReader::load(std::string_view image_id) const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open proposal file '{}'", path_.string()));
  in.seekg(static_cast<std::streamoff>(offset(image_id)));
  Cursor cursor(in, path_);
  return read_record_body(cursor, read_record_head(cursor, path_), static_cast<std::uint32_t>(dim_),
                          path_);
}

std::vector<ProposalSet> ProposalReader::load_all() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open proposal file '{}'", path_.string()));
  Cursor cursor(in, path_);
  const Header header = read_header(cursor, path_);
  std::vector<ProposalSet> sets;
  sets.reserve(header.count);
  for (std::uint64_t i = 0; i < header.count; ++i) {
    sets.push_back(read_record_body(cursor, read_record_head(cursor, path_), header.dim, path_));
  }
  return sets;
}

std::vector<ProposalSet> read_proposals(const std::filesystem::path& path,
                                        std::optional<std::span<const std::string>> image_ids) {
  const ProposalReader reader(path);
  if (!image_ids) return reader.load_all();
  const std::set<std::string, std::less<>> wanted(image_ids->begin(), image_ids->end());
  std::vector<ProposalSet> sets;
  for (const auto& id : reader.image_ids()) {
    if (wanted.contains(id)) sets.push_back(reader.load(id));
  }
  for (const auto& id : wanted) {
    if (!reader.contains(id)) {
      throw DataError(fmt::format("{}: no record for image '{}'", path.string(), id));
    }
  }
  return sets;
}

ProposalStore::ProposalStore(std::vector<ProposalSet> sets) {
  for (auto& set : sets) insert(std::move(set));
}

void ProposalStore::insert(ProposalSet set) {
  if (!sets_.empty() && set.dim() != dim()) {
    throw DimensionMismatch(fmt::format("image '{}' has dimension {}, store has {}", set.image_id,
                                        set.dim(), dim()));
  }
  std::string key = set.image_id;
  sets_.insert_or_assign(std::move(key), std::move(set));
}

const ProposalSet& ProposalStore::at(std::string_view image_id) const {
  const auto it = sets_.find(image_id);
  if (it == sets_.end()) throw DataError(fmt::format("no proposals for image '{}'", image_id));
  return it->second;
}

bool ProposalStore::contains(std::string_view image_id) const {
  return sets_.find(image_id) != sets_.end();
}

int ProposalStore::dim() const { return sets_.empty() ? 0 : sets_.begin()->second.dim(); }

// ---------------------------------------------------------------- manifest

void write_manifest(std::span<const ImageRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  for (const auto& record : records) out << record_to_json(record).dump() << '\n';
}

std::vector<ImageRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open manifest '{}'", path.string()));
  std::vector<ImageRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return records;
}

void write_index(const DatasetIndex& index, const std::filesystem::path& index_path) {
  const auto dir = index_path.parent_path();
  const std::string manifest = index.manifest_file.empty() ? "manifest.jsonl" : index.manifest_file;
  const std::string proposals =
      index.proposal_file.empty() ? "proposals.bin" : index.proposal_file;
  write_manifest(index.images, dir / std::filesystem::path(manifest).filename());
  const json j = {{"base_classes", index.base_classes},
                  {"novel_classes", index.novel_classes},
                  {"proposal_file", std::filesystem::path(proposals).filename().string()},
                  {"manifest", std::filesystem::path(manifest).filename().string()}};
  std::ofstream out(index_path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", index_path.string()));
  out << j.dump(2) << '\n';
}

DatasetIndex read_index(const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  if (!in) throw DataError(fmt::format("cannot open dataset index '{}'", index_path.string()));
  DatasetIndex index;
  try {
    const json j = json::parse(in);
    index.base_classes = j.at("base_classes").get<std::vector<std::string>>();
    index.novel_classes = j.at("novel_classes").get<std::vector<std::string>>();
    const auto dir = index_path.parent_path();
    index.proposal_file = (dir / j.at("proposal_file").get<std::string>()).string();
    index.manifest_file = (dir / j.value("manifest", std::string("manifest.jsonl"))).string();
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", index_path.string(), e.what()));
  }
  index.images = read_manifest(index.manifest_file);
  index.validate();
  index.reindex();
  return index;
}

// ---------------------------------------------------------------- synthetic

void SyntheticWorldSpec::validate() const {
  if (d < 2) throw DomainError(fmt::format("synthetic dimension must be >= 2, got {}", d));
  if (num_classes < 1) throw DomainError("synthetic world needs at least one class");
  if (num_base_classes < 0 || num_base_classes > num_classes) {
    throw DomainError(fmt::format("num_base_classes {} outside [0, {}]", num_base_classes,
                                  num_classes));
  }
  if (!(kappa_class >= 0.0) || !(kappa_background >= 0.0)) {
    throw DomainError("synthetic concentrations must be >= 0");
  }
  if (positives_per_image < 1) throw DomainError("positives_per_image must be >= 1");
  if (positives_per_image >= proposals) {
    throw DomainError(fmt::format("positives_per_image ({}) must be below the proposal count ({})",
                                  positives_per_image, proposals));
  }
  if (!(full_image_mix >= 0.0 && full_image_mix <= 1.0)) {
    throw DomainError("full_image_mix must lie in [0, 1]");
  }
}

namespace {

// Image layout: the object occupies the left third, background proposals
// tile the remaining two thirds in vertical strips. The full-image box then
// has IoU 1/3 with the object.
constexpr double kImageWidth = 300.0;
constexpr double kImageHeight = 100.0;
constexpr Box kObjectBox{0.0, 0.0, 100.0, 100.0};

Vector normalized_float(const Vector& v) {
  Vector out = (v / v.norm()).cast<float>().cast<double>();
  return out;
}

}  // namespace

SyntheticWorld generate_synthetic(const SyntheticWorldSpec& spec, int images_per_class) {
  spec.validate();
  if (images_per_class < 0) throw DomainError("images_per_class must be >= 0");
  Rng rng(spec.seed);
  SyntheticWorld world;

  std::vector<std::string> classes;
  for (int c = 0; c < spec.num_classes; ++c) classes.push_back(fmt::format("c{:02d}", c));
  world.index.base_classes.assign(classes.begin(), classes.begin() + spec.num_base_classes);
  world.index.novel_classes.assign(classes.begin() + spec.num_base_classes, classes.end());
  world.index.proposal_file = "proposals.bin";
  world.index.manifest_file = "manifest.jsonl";

  world.truth.background_direction = sample_uniform_sphere(spec.d, rng);
  for (const auto& c : classes) world.truth.class_directions[c] = sample_uniform_sphere(spec.d, rng);
  const VmfParams background{world.truth.background_direction, spec.kappa_background};

  const int p = spec.proposals;
  const int num_background = p - 1 - spec.positives_per_image;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int serial = 0;
  for (const auto& c : classes) {
    const VmfParams foreground{world.truth.class_directions[c], spec.kappa_class};
    for (int n = 0; n < images_per_class; ++n) {
      ProposalSet set;
      set.image_id = fmt::format("img_{:06d}", serial++);
      set.features.resize(p, spec.d);
      set.boxes.resize(p);

      // Random rows 1..P-1 hold the positives.
      std::vector<int> rows(p - 1);
      for (int i = 0; i < p - 1; ++i) rows[i] = i + 1;
      std::shuffle(rows.begin(), rows.end(), rng);
      std::vector<int> positive_rows(rows.begin(), rows.begin() + spec.positives_per_image);
      std::sort(positive_rows.begin(), positive_rows.end());
      std::vector<int> background_rows(rows.begin() + spec.positives_per_image, rows.end());
      std::sort(background_rows.begin(), background_rows.end());

      const Matrix pos = sample_vmf(foreground, spec.positives_per_image, rng);
      const Matrix neg = num_background > 0 ? sample_vmf(background, num_background, rng)
                                            : Matrix(0, spec.d);
      Vector mix = spec.full_image_mix * pos.colwise().mean().transpose();
      if (num_background > 0) mix += (1.0 - spec.full_image_mix) * neg.colwise().mean().transpose();
      if (mix.norm() < 1e-12) mix = pos.row(0).transpose();

      set.boxes[0] = {0.0, 0.0, kImageWidth, kImageHeight};
      set.features.row(0) = normalized_float(mix).transpose();
      for (int k = 0; k < spec.positives_per_image; ++k) {
        set.boxes[positive_rows[k]] = kObjectBox;
        set.features.row(positive_rows[k]) = normalized_float(pos.row(k).transpose()).transpose();
      }
      const double strip = (kImageWidth - kObjectBox.x_max) / std::max(num_background, 1);
      for (int k = 0; k < num_background; ++k) {
        const double x0 = to_float(kObjectBox.x_max + k * strip);
        const double x1 = to_float(kObjectBox.x_max + (k + 1) * strip);
        set.boxes[background_rows[k]] = {x0, 0.0, x1, kImageHeight};
        set.features.row(background_rows[k]) = normalized_float(neg.row(k).transpose()).transpose();
      }
      if (spec.with_objectness) {
        Vector obj(p);
        obj[0] = to_float(0.3 + 0.4 * unit(rng));
        for (int r : positive_rows) obj[r] = to_float(0.5 + 0.5 * unit(rng));
        for (int r : background_rows) obj[r] = to_float(0.5 * unit(rng));
        set.objectness = obj;
      }

      ImageRecord record;
      record.image_id = set.image_id;
      record.width = kImageWidth;
      record.height = kImageHeight;
      record.labels = {c};
      record.gt = {{c, kObjectBox}};
      world.truth.positives[set.image_id] = positive_rows;
      world.index.images.push_back(std::move(record));
      world.proposals.push_back(std::move(set));
    }
  }
  world.index.reindex();
  return world;
}

void write_truth(const PlantedTruth& truth, const std::filesystem::path& path) {
  json j;
  j["background_direction"] = std::vector<double>(truth.background_direction.data(),
                                                  truth.background_direction.data() +
                                                      truth.background_direction.size());
  j["class_directions"] = json::object();
  for (const auto& [c, v] : truth.class_directions) {
    j["class_directions"][c] = std::vector<double>(v.data(), v.data() + v.size());
  }
  j["positives"] = truth.positives;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << j.dump(2) << '\n';
}

PlantedTruth read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    const json j = json::parse(in);
    PlantedTruth truth;
    const auto bg = j.at("background_direction").get<std::vector<double>>();
    truth.background_direction = Eigen::Map<const Vector>(bg.data(), bg.size());
    for (const auto& [c, v] : j.at("class_directions").items()) {
      const auto values = v.get<std::vector<double>>();
      truth.class_directions[c] = Eigen::Map<const Vector>(values.data(), values.size());
    }
    truth.positives = j.at("positives").get<std::map<std::string, std::vector<int>>>();
    return truth;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace vmfmil
