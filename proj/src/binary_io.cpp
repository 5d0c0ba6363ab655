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

#include "bevmotion/binary_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <type_traits>
#include <iterator>

#include "bevmotion/errors.hpp"

namespace bevmotion::io {

namespace {

template <typename T>
void write_tensor_impl(ByteWriter& w, DType dtype, std::span<const std::uint32_t> shape,
                       std::span<const T> v) {
  std::size_t n = 1;
  for (auto d : shape) {
    n *= d;
  }
  if (n != v.size()) {
    throw ContractError("write_tensor: shape does not match element count");
  }
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) {
    w.u32(d);
  }
  if constexpr (std::is_same_v<T, float>) {
    w.f32s(v);
  } else if constexpr (std::is_same_v<T, std::int32_t>) {
    w.i32s(v);
  } else {
    w.bytes(v);
  }
}

std::size_t read_header(ByteReader& r, DType dtype, std::span<const std::uint32_t> shape) {
  const auto got = static_cast<DType>(r.u8());
  if (got != dtype) {
    throw CorruptionError("tensor record has unexpected dtype");
  }
  const std::uint8_t ndim = r.u8();
  if (ndim != shape.size()) {
    throw CorruptionError("tensor record has unexpected rank");
  }
  std::size_t n = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    const std::uint32_t dim = r.u32();
    if (dim != shape[d]) {
      throw CorruptionError("tensor record shape disagrees with the grid header");
    }
    n *= dim;
  }
  return n;
}

}  // namespace

void ByteWriter::tag(std::string_view t) {
  for (std::size_t i = 0; i < 4; ++i) {
    buf_.push_back(i < t.size() ? static_cast<std::uint8_t>(t[i]) : std::uint8_t{' '});
  }
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::f32s(std::span<const float> v) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
  } else {
    for (float x : v) {
      f32(x);
    }
  }
}

void ByteWriter::i32s(std::span<const std::int32_t> v) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
  } else {
    for (std::int32_t x : v) {
      i32(x);
    }
  }
}

void ByteReader::need(std::size_t n) const {
  if (n > data_.size() - pos_) {
    throw CorruptionError("unexpected end of data");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::string ByteReader::tag() {
  need(4);
  std::string t(reinterpret_cast<const char*>(data_.data() + pos_), 4);
  pos_ += 4;
  return t;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  need(n);
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::f32s(std::span<float> out) {
  need(out.size_bytes());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  } else {
    for (float& x : out) {
      x = f32();
    }
  }
}

void ByteReader::i32s(std::span<std::int32_t> out) {
  need(out.size_bytes());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  } else {
    for (std::int32_t& x : out) {
      x = i32();
    }
  }
}

void write_tensor(ByteWriter& w, std::span<const std::uint32_t> shape, std::span<const float> v) {
  write_tensor_impl(w, DType::kF32, shape, v);
}

void write_tensor(ByteWriter& w, std::span<const std::uint32_t> shape,
                  std::span<const std::uint8_t> v) {
  write_tensor_impl(w, DType::kU8, shape, v);
}

void write_tensor(ByteWriter& w, std::span<const std::uint32_t> shape,
                  std::span<const std::int32_t> v) {
  write_tensor_impl(w, DType::kI32, shape, v);
}

void read_tensor(ByteReader& r, std::span<const std::uint32_t> shape, std::vector<float>& out) {
  out.resize(read_header(r, DType::kF32, shape));
  r.f32s(out);
}

void read_tensor(ByteReader& r, std::span<const std::uint32_t> shape,
                 std::vector<std::uint8_t>& out) {
  const std::size_t n = read_header(r, DType::kU8, shape);
  auto b = r.bytes(n);
  out.assign(b.begin(), b.end());
}

void read_tensor(ByteReader& r, std::span<const std::uint32_t> shape,
                 std::vector<std::int32_t>& out) {
  out.resize(read_header(r, DType::kI32, shape));
  r.i32s(out);
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  constexpr std::size_t kBlock = 1u << 30;
  for (std::size_t off = 0; off < data.size(); off += kBlock) {
    const std::size_t n = std::min(kBlock, data.size() - off);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

ContainerWriter::ContainerWriter(std::string_view magic, std::uint16_t version) {
  out_.tag(magic);
  out_.u16(version);
}

void ContainerWriter::chunk(std::string_view tag, const ByteWriter& payload) {
  out_.tag(tag);
  out_.u64(payload.data().size());
  out_.bytes(payload.data());
  out_.u32(crc32(payload.data()));
}

void ContainerWriter::save(const std::filesystem::path& path) const {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw DataError("cannot open '" + tmp.string() + "' for writing");
    }
    f.write(reinterpret_cast<const char*>(out_.data().data()),
            static_cast<std::streamsize>(out_.data().size()));
    if (!f) {
      throw DataError("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

ContainerReader::ContainerReader(const std::filesystem::path& path, std::string_view magic,
                                 std::uint16_t max_version) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  bytes_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  if (bytes_.size() < 6 || std::string_view(reinterpret_cast<const char*>(bytes_.data()), 4) !=
                               magic.substr(0, 4)) {
    throw FormatError("'" + path.string() + "' is not a " + std::string(magic) + " file");
  }
  version_ = static_cast<std::uint16_t>(bytes_[4] | (bytes_[5] << 8));
  if (version_ == 0 || version_ > max_version) {
    throw FormatError("unsupported " + std::string(magic) + " version " +
                      std::to_string(version_));
  }
  pos_ = 6;
}

bool ContainerReader::next(Chunk& chunk) {
  if (pos_ == bytes_.size()) {
    return false;
  }
  ByteReader r(std::span<const std::uint8_t>(bytes_).subspan(pos_));
  chunk.tag = r.tag();
  const std::uint64_t len = r.u64();
  if (len > r.remaining() || r.remaining() - len < 4) {
    throw CorruptionError("chunk '" + chunk.tag + "' is truncated");
  }
  chunk.payload = r.bytes(static_cast<std::size_t>(len));
  const std::uint32_t crc = r.u32();
  if (crc != crc32(chunk.payload)) {
    throw CorruptionError("chunk '" + chunk.tag + "' fails its checksum");
  }
  pos_ += r.position();
  return true;
}

}  // namespace bevmotion::io
