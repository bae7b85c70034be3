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

#ifndef FILTAG_TENSOR_H_
#define FILTAG_TENSOR_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace filtag {

struct Shape3 {
  uint32_t channels = 0;
  uint32_t height = 0;
  uint32_t width = 0;

  size_t size() const {
    return static_cast<size_t>(channels) * height * width;
  }
  size_t plane() const { return static_cast<size_t>(height) * width; }
  std::string ToString() const;

  friend bool operator==(const Shape3&, const Shape3&) = default;
};

// Dense channels x height x width volume of f32 values, row-major with the
// channel outermost: index = c*H*W + y*W + x. Values are finite and the
// tensor is immutable once constructed.
class Tensor3 {
 public:
  Tensor3() = default;
  // All-zero tensor.
  explicit Tensor3(Shape3 shape);
  // Throws kShape if values.size() != shape.size(), kData on NaN/Inf.
  Tensor3(Shape3 shape, std::vector<float> values);

  const Shape3& shape() const { return shape_; }
  uint32_t channels() const { return shape_.channels; }
  uint32_t height() const { return shape_.height; }
  uint32_t width() const { return shape_.width; }
  size_t size() const { return values_.size(); }

  std::span<const float> values() const { return values_; }
  float at(uint32_t c, uint32_t y, uint32_t x) const {
    return values_[(static_cast<size_t>(c) * shape_.height + y) *
                       shape_.width + x];
  }

  // View of the c-th feature map. Throws kIndex when c is out of range.
  std::span<const float> channel(uint32_t c) const;

  // Bitwise comparison of shape and values.
  friend bool operator==(const Tensor3& a, const Tensor3& b);

 private:
  Shape3 shape_;
  std::vector<float> values_;
};

// Copy of the c-th feature map (height*width floats).
std::vector<float> ChannelSlice(const Tensor3& t, uint32_t c);

// Arithmetic mean with a 64-bit accumulator, summed left to right. The result
// is clamped into [min, max] of the input. Throws kDomain on an empty
// sequence or a non-finite element.
double Mean(std::span<const float> values);
double Mean(std::span<const double> values);

// Bitwise equality of two float sequences.
bool BitEqual(std::span<const float> a, std::span<const float> b);

// Binary tensor block: "FT3\0", u8 version, u32 LE channels/height/width,
// then LE f32 values.
inline constexpr char kTensorMagic[4] = {'F', 'T', '3', '\0'};
inline constexpr uint8_t kTensorVersion = 1;
inline constexpr size_t kTensorHeaderBytes = 4 + 1 + 3 * 4;

size_t TensorBlockBytes(const Shape3& shape);
void AppendTensorBlock(const Tensor3& t, std::string& out);
void WriteTensor(std::ostream& out, const Tensor3& t);
// Throws kParse on bad magic/version or truncation, kData on non-finite
// payload values.
Tensor3 ReadTensor(std::istream& in);
Tensor3 ParseTensorBlock(std::span<const char> bytes, size_t* consumed);

void SaveTensor(const std::filesystem::path& path, const Tensor3& t);
Tensor3 LoadTensor(const std::filesystem::path& path);

// Identifies filter i of convolutional layer m.
struct FilterKey {
  uint32_t layer_id = 0;
  uint32_t filter_index = 0;

  friend auto operator<=>(const FilterKey&, const FilterKey&) = default;
};

}  // namespace filtag

#endif  // FILTAG_TENSOR_H_
