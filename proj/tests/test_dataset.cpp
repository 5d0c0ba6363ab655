// Copyright 2026 The bevmotion Authors
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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bevmotion/binary_io.hpp"
#include "bevmotion/dataset.hpp"
#include "bevmotion/errors.hpp"
#include "bevmotion/scene_sim.hpp"

namespace bevmotion {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "bevmotion_tests";
  fs::create_directories(dir);
  return dir / name;
}

sim::SceneConfig small_scene(std::uint64_t seed) {
  sim::SceneConfig c;
  c.grid.x_min = c.grid.y_min = -16;
  c.grid.x_max = c.grid.y_max = 16;
  c.grid.xy_resolution = 0.5;
  c.car.count = 2;
  c.pedestrian.count = 1;
  c.bike.count = 1;
  c.others.count = 1;
  c.rng_seed = seed;
  return c;
}

TEST(BinaryIo, LittleEndianScalars) {
  io::ByteWriter w;
  w.u32(0x01020304u);
  ASSERT_EQ(w.data().size(), 4u);
  EXPECT_EQ(w.data()[0], 0x04);
  io::ByteReader r(w.data());
  EXPECT_EQ(r.u32(), 0x01020304u);
  EXPECT_THROW(r.u8(), CorruptionError);
}

TEST(Pmds, SingleSequenceRoundTrip) {
  Dataset ds = sim::generate_split(small_scene(1), 1, 0);
  const auto p = temp_path("one.pmds");
  write_dataset(p, ds);
  EXPECT_EQ(read_dataset(p), ds);
}

TEST(Pmds, WrongMagicIsFormatError) {
  const auto p = temp_path("bad_magic.pmds");
  std::ofstream(p, std::ios::binary) << "NOPE0000000000000000";
  EXPECT_THROW(read_dataset(p), FormatError);
}

TEST(Pmds, TruncationAndBitFlipsAreDetected) {
  Dataset ds = sim::generate_split(small_scene(2), 2, 0);
  const auto p = temp_path("trunc.pmds");
  write_dataset(p, ds);
  const auto size = fs::file_size(p);
  fs::resize_file(p, size / 2);
  EXPECT_THROW(read_dataset(p), CorruptionError);

  write_dataset(p, ds);
  {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(size / 3));
    char c = 0;
    f.read(&c, 1);
    f.seekp(static_cast<std::streamoff>(size / 3));
    c = static_cast<char>(c ^ 0x10);
    f.write(&c, 1);
  }
  EXPECT_THROW(read_dataset(p), CorruptionError);
}

TEST(Pmds, HundredSequenceChecksums) {
  sim::SceneConfig c = small_scene(3);
  c.grid.xy_resolution = 1.0;
  Dataset ds = sim::generate_split(c, 100, 0);
  std::vector<std::uint64_t> before;
  for (const auto& s : ds.sequences) {
    before.push_back(sequence_checksum(s));
  }
  const auto p = temp_path("hundred.pmds");
  write_dataset(p, ds);
  const Dataset back = read_dataset(p);
  ASSERT_EQ(back.sequences.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(sequence_checksum(back.sequences[i]), before[i]);
  }
}

TEST(Pmdp, PredictionRoundTrip) {
  PredictionSet set;
  set.spec.x_min = set.spec.y_min = -2;
  set.spec.x_max = set.spec.y_max = 2;
  set.spec.xy_resolution = 1.0;
  Prediction p;
  p.steps = 5;
  p.height = p.width = 4;
  p.motion.assign(5 * 16 * 2, 0.25f);
  p.class_logits.assign(16 * 5, -1.0f);
  p.state_logits.assign(16, 3.0f);
  set.predictions = {p, p};
  const auto path = temp_path("preds.pmdp");
  write_predictions(path, set);
  EXPECT_EQ(read_predictions(path), set);
}

}  // namespace
}  // namespace bevmotion
