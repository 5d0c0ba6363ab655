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

#include "bevmotion/dataset.hpp"

#include <array>
#include <bit>
#include <string>

#include "bevmotion/binary_io.hpp"
#include "bevmotion/errors.hpp"

namespace bevmotion {

namespace {

using io::ByteReader;
using io::ByteWriter;

void write_spec(ByteWriter& w, const GridSpec& s) {
  for (double v : {s.x_min, s.x_max, s.y_min, s.y_max, s.z_min, s.z_max, s.xy_resolution,
                   s.z_resolution, s.frame_interval}) {
    w.f64(v);
  }
  w.u32(static_cast<std::uint32_t>(s.input_frames));
  w.u32(static_cast<std::uint32_t>(s.output_steps));
}

GridSpec read_spec(ByteReader& r) {
  GridSpec s;
  for (double* v : {&s.x_min, &s.x_max, &s.y_min, &s.y_max, &s.z_min, &s.z_max,
                    &s.xy_resolution, &s.z_resolution, &s.frame_interval}) {
    *v = r.f64();
  }
  s.input_frames = static_cast<int>(r.u32());
  s.output_steps = static_cast<int>(r.u32());
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("grid header is invalid: ") + e.what());
  }
  return s;
}

void write_sequence(ByteWriter& w, const GridSpec& spec, const Sequence& seq) {
  if (static_cast<int>(seq.points.frames.size()) != spec.input_frames) {
    throw ContractError("write_dataset: sequence frame count differs from the grid header");
  }
  const SceneLabels& l = seq.labels;
  if (l.steps != spec.output_steps || l.height != spec.height() || l.width != spec.width()) {
    throw ContractError("write_dataset: label shape differs from the grid header");
  }
  w.u32(static_cast<std::uint32_t>(seq.points.frames.size()));
  for (const auto& frame : seq.points.frames) {
    w.u32(static_cast<std::uint32_t>(frame.size()));
    for (const Point& p : frame) {
      w.f32(p.x);
      w.f32(p.y);
      w.f32(p.z);
    }
  }
  const auto T = static_cast<std::uint32_t>(l.steps);
  const auto H = static_cast<std::uint32_t>(l.height);
  const auto W = static_cast<std::uint32_t>(l.width);
  const std::array<std::uint32_t, 4> motion_shape{T, H, W, 2};
  const std::array<std::uint32_t, 2> map_shape{H, W};
  io::write_tensor(w, motion_shape, std::span<const float>(l.motion));
  io::write_tensor(w, map_shape, std::span<const std::uint8_t>(l.category));
  io::write_tensor(w, map_shape, std::span<const std::uint8_t>(l.state));
  io::write_tensor(w, map_shape, std::span<const std::int32_t>(l.instance_id));
  io::write_tensor(w, map_shape, std::span<const std::uint8_t>(l.valid));
}

Sequence read_sequence(ByteReader& r, const GridSpec& spec) {
  Sequence seq;
  const std::uint32_t n_frames = r.u32();
  if (static_cast<int>(n_frames) != spec.input_frames) {
    throw CorruptionError("sequence frame count differs from the grid header");
  }
  seq.points.frames.resize(n_frames);
  for (auto& frame : seq.points.frames) {
    const std::uint32_t count = r.u32();
    if (static_cast<std::size_t>(count) * 12 > r.remaining()) {
      throw CorruptionError("point array is truncated");
    }
    frame.resize(count);
    for (Point& p : frame) {
      p.x = r.f32();
      p.y = r.f32();
      p.z = r.f32();
    }
  }
  SceneLabels& l = seq.labels;
  l.steps = spec.output_steps;
  l.height = spec.height();
  l.width = spec.width();
  const auto T = static_cast<std::uint32_t>(l.steps);
  const auto H = static_cast<std::uint32_t>(l.height);
  const auto W = static_cast<std::uint32_t>(l.width);
  const std::array<std::uint32_t, 4> motion_shape{T, H, W, 2};
  const std::array<std::uint32_t, 2> map_shape{H, W};
  io::read_tensor(r, motion_shape, l.motion);
  io::read_tensor(r, map_shape, l.category);
  io::read_tensor(r, map_shape, l.state);
  io::read_tensor(r, map_shape, l.instance_id);
  io::read_tensor(r, map_shape, l.valid);
  return seq;
}

template <typename Record, typename ReadFn>
std::pair<GridSpec, std::vector<Record>> read_container(const std::filesystem::path& path,
                                                        std::string_view magic,
                                                        std::uint16_t version,
                                                        std::string_view record_tag,
                                                        ReadFn read_record) {
  io::ContainerReader reader(path, magic, version);
  io::Chunk chunk;
  if (!reader.next(chunk) || chunk.tag != "GRID") {
    throw CorruptionError("'" + path.string() + "' has no grid header");
  }
  ByteReader gr(chunk.payload);
  const GridSpec spec = read_spec(gr);
  std::vector<Record> records;
  bool ended = false;
  while (reader.next(chunk)) {
    ByteReader r(chunk.payload);
    if (chunk.tag == record_tag) {
      if (ended) {
        throw CorruptionError("record after end marker");
      }
      records.push_back(read_record(r, spec));
    } else if (chunk.tag == "DEND") {
      if (r.u32() != records.size()) {
        throw CorruptionError("record count disagrees with end marker");
      }
      ended = true;
    } else {
      throw CorruptionError("unknown chunk '" + chunk.tag + "'");
    }
    if (!r.done()) {
      throw CorruptionError("chunk '" + chunk.tag + "' has trailing bytes");
    }
  }
  if (!ended) {
    throw CorruptionError("'" + path.string() + "' is truncated (no end marker)");
  }
  return {spec, std::move(records)};
}

void write_prediction(ByteWriter& w, const GridSpec& spec, const Prediction& p) {
  if (p.steps != spec.output_steps || p.height != spec.height() || p.width != spec.width()) {
    throw ContractError("write_predictions: prediction shape differs from the grid header");
  }
  const auto T = static_cast<std::uint32_t>(p.steps);
  const auto H = static_cast<std::uint32_t>(p.height);
  const auto W = static_cast<std::uint32_t>(p.width);
  const std::array<std::uint32_t, 4> motion_shape{T, H, W, 2};
  const std::array<std::uint32_t, 3> cls_shape{H, W, kNumCategories};
  const std::array<std::uint32_t, 2> map_shape{H, W};
  io::write_tensor(w, motion_shape, std::span<const float>(p.motion));
  io::write_tensor(w, cls_shape, std::span<const float>(p.class_logits));
  io::write_tensor(w, map_shape, std::span<const float>(p.state_logits));
}

Prediction read_prediction(ByteReader& r, const GridSpec& spec) {
  Prediction p;
  p.steps = spec.output_steps;
  p.height = spec.height();
  p.width = spec.width();
  const auto T = static_cast<std::uint32_t>(p.steps);
  const auto H = static_cast<std::uint32_t>(p.height);
  const auto W = static_cast<std::uint32_t>(p.width);
  const std::array<std::uint32_t, 4> motion_shape{T, H, W, 2};
  const std::array<std::uint32_t, 3> cls_shape{H, W, kNumCategories};
  const std::array<std::uint32_t, 2> map_shape{H, W};
  io::read_tensor(r, motion_shape, p.motion);
  io::read_tensor(r, cls_shape, p.class_logits);
  io::read_tensor(r, map_shape, p.state_logits);
  return p;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  dataset.spec.validate();
  io::ContainerWriter out("PMDS", kPmdsVersion);
  ByteWriter grid;
  write_spec(grid, dataset.spec);
  out.chunk("GRID", grid);
  for (const Sequence& seq : dataset.sequences) {
    ByteWriter w;
    write_sequence(w, dataset.spec, seq);
    out.chunk("SEQN", w);
  }
  ByteWriter end;
  end.u32(static_cast<std::uint32_t>(dataset.sequences.size()));
  out.chunk("DEND", end);
  out.save(path);
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto [spec, seqs] = read_container<Sequence>(path, "PMDS", kPmdsVersion, "SEQN", read_sequence);
  return Dataset{spec, std::move(seqs)};
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& set) {
  set.spec.validate();
  io::ContainerWriter out("PMDP", kPmdpVersion);
  ByteWriter grid;
  write_spec(grid, set.spec);
  out.chunk("GRID", grid);
  for (const Prediction& p : set.predictions) {
    ByteWriter w;
    write_prediction(w, set.spec, p);
    out.chunk("PRED", w);
  }
  ByteWriter end;
  end.u32(static_cast<std::uint32_t>(set.predictions.size()));
  out.chunk("DEND", end);
  out.save(path);
}

PredictionSet read_predictions(const std::filesystem::path& path) {
  auto [spec, preds] =
      read_container<Prediction>(path, "PMDP", kPmdpVersion, "PRED", read_prediction);
  return PredictionSet{spec, std::move(preds)};
}

std::uint64_t sequence_checksum(const Sequence& seq) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& frame : seq.points.frames) {
    mix(frame.size());
    for (const Point& p : frame) {
      mix(std::bit_cast<std::uint32_t>(p.x));
      mix(std::bit_cast<std::uint32_t>(p.y));
      mix(std::bit_cast<std::uint32_t>(p.z));
    }
  }
  const SceneLabels& l = seq.labels;
  for (float v : l.motion) {
    mix(std::bit_cast<std::uint32_t>(v));
  }
  for (std::size_t c = 0; c < l.cells(); ++c) {
    mix(l.category[c]);
    mix(l.state[c]);
    mix(static_cast<std::uint32_t>(l.instance_id[c]));
    mix(l.valid[c]);
  }
  return h;
}

}  // namespace bevmotion
