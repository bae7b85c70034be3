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

#ifndef FILTAG_INFER_H_
#define FILTAG_INFER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "filtag/tensor.h"

namespace filtag {

enum class Padding { kValid, kSameZero };
enum class Activation { kNone, kRelu };

const char* PaddingName(Padding p);
const char* ActivationName(Activation a);

struct ConvLayer {
  uint32_t out_channels = 0;
  uint32_t kernel_h = 0;
  uint32_t kernel_w = 0;
  uint32_t stride = 1;
  Padding padding = Padding::kValid;
  Activation activation = Activation::kRelu;
  // One in_channels x kernel_h x kernel_w tensor per output filter.
  std::vector<Tensor3> weights;
  std::vector<float> bias;
};

struct MaxPoolLayer {
  uint32_t size = 2;
  uint32_t stride = 2;
};

struct FlattenLayer {};

struct DenseLayer {
  uint32_t out_dim = 0;
  uint32_t in_dim = 0;
  // out_dim x in_dim, row-major.
  std::vector<float> weights;
  std::vector<float> bias;
  Activation activation = Activation::kNone;
};

struct SoftmaxLayer {};

using Layer =
    std::variant<ConvLayer, MaxPoolLayer, FlattenLayer, DenseLayer, SoftmaxLayer>;

const char* LayerKindName(const Layer& layer);

// Declarative model. Vectors flowing between dense layers are carried as
// n x 1 x 1 tensors.
struct ModelSpec {
  std::string name;
  Shape3 input_shape;
  std::vector<Layer> layers;
  std::vector<std::string> class_names;

  size_t conv_layer_count() const;
  // Output shape of every layer, in order. Throws kShape naming the first
  // inconsistent layer, or kSchema when the layer list is malformed (no conv
  // layer, softmax not last, class count mismatch).
  std::vector<Shape3> Validate() const;
  // Shapes of the conv layer outputs, i.e. the per-layer filter schema.
  std::vector<Shape3> ConvOutputShapes() const;
};

bool operator==(const ConvLayer& a, const ConvLayer& b);
bool operator==(const MaxPoolLayer& a, const MaxPoolLayer& b);
bool operator==(const DenseLayer& a, const DenseLayer& b);
inline bool operator==(const FlattenLayer&, const FlattenLayer&) { return true; }
inline bool operator==(const SoftmaxLayer&, const SoftmaxLayer&) { return true; }
// Bitwise on all weights.
bool operator==(const ModelSpec& a, const ModelSpec& b);

struct ForwardTrace {
  // Post-activation output of every conv layer.
  std::vector<Tensor3> conv_outputs;
  std::vector<float> probabilities;
  uint32_t predicted_class = 0;
};

// Output extent of a sliding window along one axis. Throws kShape when the
// kernel does not fit.
uint32_t ConvOutputExtent(uint32_t in, uint32_t kernel, uint32_t stride,
                          Padding padding);

// Cross-correlation (no kernel flip). Each filter must have
// input.channels() channels; biases has one entry per filter.
Tensor3 Conv2d(const Tensor3& input, std::span<const Tensor3> filters,
               std::span<const float> biases, uint32_t stride,
               Padding padding);

Tensor3 Relu(const Tensor3& t);

Tensor3 MaxPool2d(const Tensor3& t, uint32_t size, uint32_t stride);

// Numerically stable softmax (max-shifted, 64-bit accumulation).
std::vector<float> Softmax(std::span<const float> logits);

Tensor3 Dense(const DenseLayer& layer, const Tensor3& input);

// Deterministic single-threaded forward pass.
ForwardTrace Forward(const ModelSpec& model, const Tensor3& image);

// Model file: JSON manifest plus a sibling blob of concatenated tensor blocks
// ("<stem>.weights"), referenced by byte offsets from the manifest.
void SaveModel(const ModelSpec& model, const std::filesystem::path& path);
ModelSpec LoadModel(const std::filesystem::path& path);

}  // namespace filtag

#endif  // FILTAG_INFER_H_
