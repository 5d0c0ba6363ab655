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

#include "bevmotion/checkpoint.hpp"

#include <map>

#include "bevmotion/binary_io.hpp"
#include "bevmotion/errors.hpp"

namespace bevmotion {

namespace {

constexpr std::string_view kMagic = "PMCK";

void write_named(io::ByteWriter& w, const std::string& name, const torch::Tensor& t) {
  auto c = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  w.str(name);
  std::vector<std::uint32_t> shape;
  for (auto d : c.sizes()) {
    shape.push_back(static_cast<std::uint32_t>(d));
  }
  io::write_tensor(w, shape, std::span<const float>(c.data_ptr<float>(), c.numel()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config,
                     const torch::nn::Module& model, const TrainState* state) {
  io::ContainerWriter out(kMagic, kCheckpointVersion);
  io::ByteWriter cfg;
  cfg.u64(config_hash(config));
  cfg.str(config.to_json().dump());
  out.chunk("CONF", cfg);

  io::ByteWriter params;
  const auto named = model.named_parameters(true);
  const auto buffers = model.named_buffers(true);
  params.u32(static_cast<std::uint32_t>(named.size() + buffers.size()));
  for (const auto& item : named) {
    write_named(params, item.key(), item.value());
  }
  for (const auto& item : buffers) {
    write_named(params, item.key(), item.value());
  }
  out.chunk("TENS", params);

  if (state != nullptr) {
    io::ByteWriter st;
    st.i32(state->next_epoch);
    st.i64(state->step);
    st.u64(state->optimizer.size());
    st.bytes(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(state->optimizer.data()), state->optimizer.size()));
    out.chunk("TRST", st);
  }
  out.chunk("CEND", io::ByteWriter{});
  out.save(path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  io::ContainerReader in(path, kMagic, kCheckpointVersion);
  Checkpoint ck;
  bool have_config = false;
  bool have_tensors = false;
  bool ended = false;
  io::Chunk chunk;
  while (in.next(chunk)) {
    io::ByteReader r(chunk.payload);
    if (chunk.tag == "CONF") {
      ck.config_hash = r.u64();
      const std::string text = r.str();
      try {
        ck.config = ExperimentConfig::from_json(nlohmann::json::parse(text));
      } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(path.string() + ": bad config record: " + e.what());
      }
      if (config_hash(ck.config) != ck.config_hash) {
        throw CorruptionError(path.string() + ": config hash mismatch");
      }
      have_config = true;
    } else if (chunk.tag == "TENS") {
      const std::uint32_t n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        NamedTensor nt;
        nt.name = r.str();
        // Shape is read from the record header itself.
        const std::size_t mark = r.position();
        r.u8();  // dtype
        const std::uint8_t ndim = r.u8();
        std::vector<std::uint32_t> shape(ndim);
        std::vector<std::int64_t> sizes(ndim);
        for (std::uint8_t d = 0; d < ndim; ++d) {
          shape[d] = r.u32();
          sizes[d] = shape[d];
        }
        io::ByteReader again(chunk.payload.subspan(mark));
        std::vector<float> values;
        io::read_tensor(again, shape, values);
        r.bytes(again.position() - (r.position() - mark));
        nt.value = torch::from_blob(values.data(), sizes, torch::kFloat32).clone();
        ck.tensors.push_back(std::move(nt));
      }
      have_tensors = true;
    } else if (chunk.tag == "TRST") {
      TrainState st;
      st.next_epoch = r.i32();
      st.step = r.i64();
      const auto n = r.u64();
      auto bytes = r.bytes(n);
      st.optimizer.assign(bytes.begin(), bytes.end());
      ck.train_state = std::move(st);
    } else if (chunk.tag == "CEND") {
      ended = true;
      break;
    } else {
      throw FormatError(path.string() + ": unknown chunk " + chunk.tag);
    }
  }
  if (!ended || !have_config || !have_tensors) {
    throw CorruptionError(path.string() + ": checkpoint is truncated");
  }
  return ck;
}

void load_tensors(torch::nn::Module& model, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const torch::Tensor*> by_name;
  for (const auto& t : tensors) {
    by_name[t.name] = &t.value;
  }
  torch::NoGradGuard guard;
  auto assign = [&](const std::string& name, torch::Tensor& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw FormatError("checkpoint has no tensor " + name);
    }
    if (it->second->sizes() != dst.sizes()) {
      throw FormatError("checkpoint tensor " + name + " has the wrong shape");
    }
    dst.copy_(*it->second);
    by_name.erase(it);
  };
  for (auto& item : model.named_parameters(true)) {
    assign(item.key(), item.value());
  }
  for (auto& item : model.named_buffers(true)) {
    assign(item.key(), item.value());
  }
  if (!by_name.empty()) {
    throw FormatError("checkpoint tensor " + by_name.begin()->first + " does not fit the model");
  }
}

MotionModel load_model(const Checkpoint& ckpt) {
  MotionModel model(ckpt.config.model);
  load_tensors(*model, ckpt.tensors);
  model->eval();
  return model;
}

std::vector<char> serialize_optimizer(const torch::optim::Optimizer& optimizer) {
  torch::serialize::OutputArchive archive;
  optimizer.save(archive);
  std::vector<char> blob;
  archive.save_to([&blob](const void* data, size_t n) {
    const char* p = static_cast<const char*>(data);
    blob.insert(blob.end(), p, p + n);
    return n;
  });
  return blob;
}

void restore_optimizer(torch::optim::Optimizer& optimizer, const std::vector<char>& blob) {
  torch::serialize::InputArchive archive;
  archive.load_from(blob.data(), blob.size());
  optimizer.load(archive);
}

}  // namespace bevmotion
