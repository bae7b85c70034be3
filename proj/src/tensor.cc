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

#include "filtag/tensor.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "byte_io.h"
#include "filtag/errors.h"

namespace filtag {
namespace internal {

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for '" + path + "'");
  return bytes;
}

void WriteFileBytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

uint32_t Crc32(std::span<const char> bytes) { return Crc32Update(0, bytes); }

uint32_t Crc32Update(uint32_t crc_in, std::span<const char> bytes) {
  uLong crc = crc_in;
  // zlib takes uInt lengths; feed in chunks.
  constexpr size_t kChunk = size_t{1} << 30;
  for (size_t off = 0; off < bytes.size(); off += kChunk) {
    const size_t n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off),
                static_cast<uInt>(n));
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace internal

std::string Shape3::ToString() const {
  std::ostringstream os;
  os << channels << "x" << height << "x" << width;
  return os.str();
}

Tensor3::Tensor3(Shape3 shape) : shape_(shape), values_(shape.size(), 0.0f) {}

Tensor3::Tensor3(Shape3 shape, std::vector<float> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw Error(ErrorCode::kShape,
                "tensor " + shape_.ToString() + " needs " +
                    std::to_string(shape_.size()) + " values, got " +
                    std::to_string(values_.size()));
  }
  for (size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::kData,
                  "non-finite tensor value at flat index " + std::to_string(i));
    }
  }
}

std::span<const float> Tensor3::channel(uint32_t c) const {
  if (c >= shape_.channels) {
    throw Error(ErrorCode::kIndex, "channel " + std::to_string(c) +
                                       " out of range for tensor " +
                                       shape_.ToString());
  }
  return std::span<const float>(values_).subspan(c * shape_.plane(),
                                                  shape_.plane());
}

bool operator==(const Tensor3& a, const Tensor3& b) {
  return a.shape_ == b.shape_ && BitEqual(a.values_, b.values_);
}

std::vector<float> ChannelSlice(const Tensor3& t, uint32_t c) {
  auto view = t.channel(c);
  return std::vector<float>(view.begin(), view.end());
}

namespace {

template <typename T>
double MeanImpl(std::span<const T> values) {
  if (values.empty()) throw Error(ErrorCode::kDomain, "mean of empty sequence");
  double sum = 0.0;
  double lo = static_cast<double>(values[0]);
  double hi = lo;
  for (T v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kDomain, "mean of non-finite value");
    }
    const double d = static_cast<double>(v);
    sum += d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return std::clamp(sum / static_cast<double>(values.size()), lo, hi);
}

}  // namespace

double Mean(std::span<const float> values) { return MeanImpl(values); }
double Mean(std::span<const double> values) { return MeanImpl(values); }

bool BitEqual(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

size_t TensorBlockBytes(const Shape3& shape) {
  return kTensorHeaderBytes + shape.size() * 4;
}

void AppendTensorBlock(const Tensor3& t, std::string& out) {
  out.reserve(out.size() + TensorBlockBytes(t.shape()));
  out.append(kTensorMagic, 4);
  internal::PutU8(out, kTensorVersion);
  internal::PutU32(out, t.channels());
  internal::PutU32(out, t.height());
  internal::PutU32(out, t.width());
  for (float v : t.values()) internal::PutF32(out, v);
}

void WriteTensor(std::ostream& out, const Tensor3& t) {
  std::string bytes;
  AppendTensorBlock(t, bytes);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "tensor write failed");
}

Tensor3 ParseTensorBlock(std::span<const char> bytes, size_t* consumed) {
  internal::ByteReader reader(bytes, "tensor block");
  auto magic = reader.Take(4);
  if (!std::equal(magic.begin(), magic.end(), kTensorMagic)) {
    throw Error(ErrorCode::kParse, "tensor block: bad magic");
  }
  const uint8_t version = reader.U8();
  if (version != kTensorVersion) {
    throw Error(ErrorCode::kParse, "tensor block: unsupported version " +
                                       std::to_string(version));
  }
  Shape3 shape;
  shape.channels = reader.U32();
  shape.height = reader.U32();
  shape.width = reader.U32();
  // Check the payload fits before allocating.
  const unsigned __int128 count = static_cast<unsigned __int128>(
                                      shape.channels) *
                                  shape.height * shape.width;
  if (count * 4 > reader.remaining()) {
    throw Error(ErrorCode::kParse, "tensor block: truncated payload for " +
                                       shape.ToString());
  }
  std::vector<float> values(shape.size());
  for (float& v : values) v = reader.F32();
  if (consumed != nullptr) *consumed = reader.offset();
  return Tensor3(shape, std::move(values));
}

Tensor3 ReadTensor(std::istream& in) {
  std::string header(kTensorHeaderBytes, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header.size()));
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw Error(ErrorCode::kParse, "tensor block: truncated header");
  }
  internal::ByteReader reader(header, "tensor header");
  auto magic = reader.Take(4);
  if (!std::equal(magic.begin(), magic.end(), kTensorMagic)) {
    throw Error(ErrorCode::kParse, "tensor block: bad magic");
  }
  if (const uint8_t version = reader.U8(); version != kTensorVersion) {
    throw Error(ErrorCode::kParse, "tensor block: unsupported version " +
                                       std::to_string(version));
  }
  Shape3 shape{reader.U32(), reader.U32(), reader.U32()};
  std::string payload;
  const long double bytes = static_cast<long double>(shape.channels) *
                            shape.height * shape.width * 4;
  if (bytes > static_cast<long double>(uint64_t{1} << 40)) {
    throw Error(ErrorCode::kParse, "tensor block: implausible shape " +
                                       shape.ToString());
  }
  payload.resize(static_cast<size_t>(bytes));
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw Error(ErrorCode::kParse, "tensor block: truncated payload for " +
                                       shape.ToString());
  }
  return ParseTensorBlock(header + payload, nullptr);
}

void SaveTensor(const std::filesystem::path& path, const Tensor3& t) {
  std::string bytes;
  AppendTensorBlock(t, bytes);
  internal::WriteFileBytes(path.string(), bytes);
}

Tensor3 LoadTensor(const std::filesystem::path& path) {
  const std::string bytes = internal::ReadFileBytes(path.string());
  size_t consumed = 0;
  Tensor3 t = ParseTensorBlock(bytes, &consumed);
  if (consumed != bytes.size()) {
    throw Error(ErrorCode::kParse, "trailing bytes in tensor file '" +
                                       path.string() + "'");
  }
  return t;
}

}  // namespace filtag
