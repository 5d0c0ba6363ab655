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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bevmotion/grid_core.hpp"

namespace bevmotion {

struct Sequence {
  PointSequence points;
  SceneLabels labels;

  bool operator==(const Sequence&) const = default;
};

struct Dataset {
  GridSpec spec;
  std::vector<Sequence> sequences;

  bool operator==(const Dataset&) const = default;
};

/// PMDS container: magic "PMDS", u16 version, then a "GRID" chunk, one
/// "SEQN" chunk per sequence and a closing "DEND" chunk holding the sequence
/// count. Every multi-byte value is little-endian.
inline constexpr std::uint16_t kPmdsVersion = 1;

void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

/// Model outputs for one sequence, laid out like SceneLabels:
/// motion (tau, i, j, 2), class logits (i, j, class), state logits (i, j).
struct Prediction {
  int steps = 0;
  int height = 0;
  int width = 0;
  std::vector<float> motion;
  std::vector<float> class_logits;
  std::vector<float> state_logits;

  bool operator==(const Prediction&) const = default;
};

struct PredictionSet {
  GridSpec spec;
  std::vector<Prediction> predictions;

  bool operator==(const PredictionSet&) const = default;
};

/// PMDS-P container: magic "PMDP", same chunk layout with "PRED" records.
inline constexpr std::uint16_t kPmdpVersion = 1;

void write_predictions(const std::filesystem::path& path, const PredictionSet& set);
PredictionSet read_predictions(const std::filesystem::path& path);

/// FNV-1a over every label cell and point of a sequence.
std::uint64_t sequence_checksum(const Sequence& seq);

}  // namespace bevmotion
