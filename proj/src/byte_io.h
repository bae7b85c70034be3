/* Copyright 2026 The FilTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Little-endian encoding helpers shared by the binary formats.

#ifndef FILTAG_SRC_BYTE_IO_H_
#define FILTAG_SRC_BYTE_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>

#include "filtag/errors.h"

namespace filtag::internal {

inline void PutU8(std::string& out, uint8_t v) {
  out.push_back(static_cast<char>(v));
}

inline void PutU16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline void PutU32(std::string& out, uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xff));
  }
}

inline void PutF32(std::string& out, float v) {
  PutU32(out, std::bit_cast<uint32_t>(v));
}

// Bounds-checked cursor over a byte buffer.
class ByteReader {
 public:
  ByteReader(std::span<const char> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  size_t offset() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

  void Need(size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kParse, what_ + ": truncated at byte " +
                                         std::to_string(pos_) + " (need " +
                                         std::to_string(n) + ", have " +
                                         std::to_string(remaining()) + ")");
    }
  }

  uint8_t U8() {
    Need(1);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }

  uint16_t U16() {
    Need(2);
    uint16_t v = static_cast<uint8_t>(bytes_[pos_]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(bytes_[pos_ + 1]))
                  << 8);
    pos_ += 2;
    return v;
  }

  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float F32() { return std::bit_cast<float>(U32()); }

  std::span<const char> Take(size_t n) {
    Need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const char> bytes_;
  std::string what_;
  size_t pos_ = 0;
};

// Whole-file helpers; throw kIo.
std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const std::string& bytes);
uint32_t Crc32(std::span<const char> bytes);
uint32_t Crc32Update(uint32_t crc, std::span<const char> bytes);

}  // namespace filtag::internal

#endif  // FILTAG_SRC_BYTE_IO_H_
