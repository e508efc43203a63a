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

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "vmfmil/dataio.hpp"
#include "vmfmil/eval.hpp"

namespace vmfmil {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vmfmil_dataio_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SyntheticWorld small_world(std::uint64_t seed = 0, bool objectness = false) {
  SyntheticWorldSpec spec;
  spec.d = 8;
  spec.num_classes = 4;
  spec.num_base_classes = 2;
  spec.proposals = 6;
  spec.with_objectness = objectness;
  spec.seed = seed;
  return generate_synthetic(spec, 3);
}

TEST_CASE("proposal file round-trips bit for bit") {
  const auto dir = scratch_dir("roundtrip");
  const SyntheticWorld world = small_world(1, true);
  write_proposals(world.proposals, dir / "p.bin");
  const auto back = read_proposals(dir / "p.bin");
  REQUIRE(back.size() == world.proposals.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == world.proposals[i]);
}

TEST_CASE("reader gives random access and filtered reads keep file order") {
  const auto dir = scratch_dir("reader");
  const SyntheticWorld world = small_world(2);
  write_proposals(world.proposals, dir / "p.bin");
  const ProposalReader reader(dir / "p.bin");
  CHECK(reader.dim() == 8);
  CHECK(reader.size() == world.proposals.size());
  CHECK(reader.load(world.proposals[5].image_id) == world.proposals[5]);
  CHECK_THROWS_AS(reader.load("missing"), DataError);

  const std::vector<std::string> ids = {world.proposals[7].image_id, world.proposals[2].image_id};
  const auto subset = read_proposals(dir / "p.bin", std::span<const std::string>(ids));
  REQUIRE(subset.size() == 2);
  CHECK(subset[0] == world.proposals[2]);
  CHECK(subset[1] == world.proposals[7]);
}

TEST_CASE("truncated or foreign proposal files are data errors") {
  const auto dir = scratch_dir("corrupt");
  const SyntheticWorld world = small_world(3);
  write_proposals(world.proposals, dir / "p.bin");
  auto bytes = read_bytes(dir / "p.bin");
  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(read_proposals(dir / "short.bin"), DataError);
  bytes[0] = 'X';
  {
    std::ofstream out(dir / "magic.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_proposals(dir / "magic.bin"), DataError);
  CHECK_THROWS_AS(read_proposals(dir / "absent.bin"), DataError);
}

TEST_CASE("writer rejects mixed dimensions and invalid sets") {
  const auto dir = scratch_dir("writer");
  Rng rng(0);
  std::vector<ProposalSet> sets = {testing::random_image("a", 3, 4, rng),
                                   testing::random_image("b", 3, 5, rng)};
  CHECK_THROWS_AS(write_proposals(sets, dir / "p.bin"), DimensionMismatch);
  ProposalSet bad = testing::random_image("c", 2, 4, rng);
  bad.features(1, 0) += 0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = testing::random_image("d", 2, 4, rng);
  bad.boxes[1] = {1.0, 1.0, 1.0, 2.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("index and manifest round-trip") {
  const auto dir = scratch_dir("index");
  const SyntheticWorld world = small_world(4);
  write_proposals(world.proposals, dir / "proposals.bin");
  write_index(world.index, dir / "index.json");
  const DatasetIndex back = read_index(dir / "index.json");
  CHECK(back.images == world.index.images);
  CHECK(back.base_classes == world.index.base_classes);
  CHECK(back.novel_classes == world.index.novel_classes);
  CHECK(fs::path(back.proposal_file) == dir / "proposals.bin");
  CHECK(back.record(world.index.images[3].image_id) == world.index.images[3]);
  CHECK_THROWS_AS(back.record("nope"), DataError);
}

TEST_CASE("manifest rejects gt classes missing from labels") {
  const auto dir = scratch_dir("manifest");
  {
    std::ofstream out(dir / "m.jsonl");
    out << R"({"image_id":"a","width":10,"height":10,"labels":["x"],)"
        << R"("gt":[{"label":"y","box":[0,0,1,1]}]})" << "\n";
  }
  CHECK_THROWS_AS(read_manifest(dir / "m.jsonl"), DataError);
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{not json\n";
  }
  CHECK_THROWS_AS(read_manifest(dir / "bad.jsonl"), DataError);
}

TEST_CASE("synthetic world geometry and labels") {
  const SyntheticWorld world = small_world(5, true);
  CHECK(world.proposals.size() == 12);
  CHECK(world.index.base_classes == std::vector<std::string>{"c00", "c01"});
  for (std::size_t i = 0; i < world.proposals.size(); ++i) {
    const ProposalSet& set = world.proposals[i];
    const ImageRecord& record = world.index.images[i];
    CHECK_NOTHROW(set.validate());
    REQUIRE(record.gt.size() == 1);
    const auto& positives = world.truth.positives.at(set.image_id);
    CHECK(iou(set.boxes[0], record.gt[0].box) == doctest::Approx(1.0 / 3.0));
    for (int j = 1; j < set.size(); ++j) {
      const bool positive = std::find(positives.begin(), positives.end(), j) != positives.end();
      CHECK(iou(set.boxes[j], record.gt[0].box) == (positive ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const auto a = small_world(7);
  const auto b = small_world(7);
  const auto c = small_world(8);
  CHECK(a.proposals == b.proposals);
  CHECK(a.index.images == b.index.images);
  CHECK_FALSE(a.proposals == c.proposals);
}

TEST_CASE("synthetic world settings are validated") {
  SyntheticWorldSpec spec;
  spec.d = 1;
  CHECK_THROWS_AS(spec.validate(), DomainError);
  spec = {};
  spec.positives_per_image = spec.proposals;
  CHECK_THROWS_AS(spec.validate(), DomainError);
  spec = {};
  spec.full_image_mix = 1.5;
  CHECK_THROWS_AS(spec.validate(), DomainError);
  spec = {};
  spec.num_base_classes = spec.num_classes + 1;
  CHECK_THROWS_AS(spec.validate(), DomainError);
}

TEST_CASE("planted truth round-trips") {
  const auto dir = scratch_dir("truth");
  const SyntheticWorld world = small_world(9);
  write_truth(world.truth, dir / "truth.json");
  const PlantedTruth back = read_truth(dir / "truth.json");
  CHECK(back.positives == world.truth.positives);
  CHECK((back.background_direction - world.truth.background_direction).norm() == 0.0);
  CHECK(back.class_directions.size() == world.truth.class_directions.size());
}

TEST_CASE("proposal store lookups") {
  const SyntheticWorld world = small_world(10);
  const ProposalStore store(world.proposals);
  CHECK(store.size() == world.proposals.size());
  CHECK(store.dim() == 8);
  CHECK(store.at(world.proposals[1].image_id) == world.proposals[1]);
  CHECK_THROWS_AS(store.at("missing"), DataError);
}

}  // namespace
}  // namespace vmfmil
