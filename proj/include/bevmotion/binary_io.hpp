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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bevmotion::io {

/// Little-endian byte sink.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v)); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void tag(std::string_view t);
  /// u32 length prefix followed by the raw characters.
  void str(std::string_view s);

  void f32s(std::span<const float> v);
  void i32s(std::span<const std::int32_t> v);

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t>& data() { return buf_; }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  std::vector<std::uint8_t> buf_;
};

/// Little-endian byte source; every read past the end throws CorruptionError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::string tag();
  std::string str();
  std::span<const std::uint8_t> bytes(std::size_t n);

  void f32s(std::span<float> out);
  void i32s(std::span<std::int32_t> out);

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;

  template <typename U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Element types of tensors stored in the binary containers.
enum class DType : std::uint8_t { kF32 = 1, kU8 = 2, kI32 = 3 };

/// Tensor record: u8 dtype, u8 ndim, u32 dims, then the payload.
void write_tensor(ByteWriter& w, std::span<const std::uint32_t> shape, std::span<const float> v);
void write_tensor(ByteWriter& w, std::span<const std::uint32_t> shape,
                  std::span<const std::uint8_t> v);
void write_tensor(ByteWriter& w, std::span<const std::uint32_t> shape,
                  std::span<const std::int32_t> v);

/// Reads a tensor record, checking dtype and shape against the expectation.
void read_tensor(ByteReader& r, std::span<const std::uint32_t> shape, std::vector<float>& out);
void read_tensor(ByteReader& r, std::span<const std::uint32_t> shape,
                 std::vector<std::uint8_t>& out);
void read_tensor(ByteReader& r, std::span<const std::uint32_t> shape,
                 std::vector<std::int32_t>& out);

/// Chunked container: 4-byte magic, u16 version, then chunks of
/// (4-byte tag, u64 length, payload, u32 CRC-32 of payload).
class ContainerWriter {
 public:
  ContainerWriter(std::string_view magic, std::uint16_t version);
  void chunk(std::string_view tag, const ByteWriter& payload);
  /// Writes to `path` via a sibling temporary file and an atomic rename.
  void save(const std::filesystem::path& path) const;

 private:
  ByteWriter out_;
};

struct Chunk {
  std::string tag;
  std::span<const std::uint8_t> payload;
};

class ContainerReader {
 public:
  /// Throws FormatError on a magic or version mismatch, DataError when the
  /// file cannot be opened.
  ContainerReader(const std::filesystem::path& path, std::string_view magic,
                  std::uint16_t max_version);

  std::uint16_t version() const { return version_; }
  /// False at a clean end of file; throws CorruptionError on truncation or
  /// checksum mismatch.
  bool next(Chunk& chunk);

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint16_t version_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> data);

}  // namespace bevmotion::io
