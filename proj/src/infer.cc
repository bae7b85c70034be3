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

#include <algorithm>
#include <cmath>
#include <string>

#include "filtag/errors.h"
#include "filtag/infer.h"

namespace filtag {

const char* PaddingName(Padding p) {
  return p == Padding::kValid ? "valid" : "same-zero";
}

const char* ActivationName(Activation a) {
  return a == Activation::kRelu ? "relu" : "none";
}

const char* LayerKindName(const Layer& layer) {
  struct Visitor {
    const char* operator()(const ConvLayer&) const { return "conv"; }
    const char* operator()(const MaxPoolLayer&) const { return "maxpool"; }
    const char* operator()(const FlattenLayer&) const { return "flatten"; }
    const char* operator()(const DenseLayer&) const { return "dense"; }
    const char* operator()(const SoftmaxLayer&) const { return "softmax"; }
  };
  return std::visit(Visitor{}, layer);
}

bool operator==(const ConvLayer& a, const ConvLayer& b) {
  return a.out_channels == b.out_channels && a.kernel_h == b.kernel_h &&
         a.kernel_w == b.kernel_w && a.stride == b.stride &&
         a.padding == b.padding && a.activation == b.activation &&
         a.weights == b.weights && BitEqual(a.bias, b.bias);
}

bool operator==(const MaxPoolLayer& a, const MaxPoolLayer& b) {
  return a.size == b.size && a.stride == b.stride;
}

bool operator==(const DenseLayer& a, const DenseLayer& b) {
  return a.out_dim == b.out_dim && a.in_dim == b.in_dim &&
         a.activation == b.activation && BitEqual(a.weights, b.weights) &&
         BitEqual(a.bias, b.bias);
}

bool operator==(const ModelSpec& a, const ModelSpec& b) {
  return a.name == b.name && a.input_shape == b.input_shape &&
         a.class_names == b.class_names && a.layers == b.layers;
}

size_t ModelSpec::conv_layer_count() const {
  return static_cast<size_t>(std::count_if(
      layers.begin(), layers.end(),
      [](const Layer& l) { return std::holds_alternative<ConvLayer>(l); }));
}

uint32_t ConvOutputExtent(uint32_t in, uint32_t kernel, uint32_t stride,
                          Padding padding) {
  if (stride == 0) throw Error(ErrorCode::kShape, "stride must be >= 1");
  if (kernel == 0) throw Error(ErrorCode::kShape, "kernel extent must be >= 1");
  if (padding == Padding::kSameZero) {
    if (in == 0) throw Error(ErrorCode::kShape, "empty input extent");
    return (in + stride - 1) / stride;
  }
  if (kernel > in) {
    throw Error(ErrorCode::kShape, "kernel extent " + std::to_string(kernel) +
                                       " exceeds input extent " +
                                       std::to_string(in));
  }
  return (in - kernel) / stride + 1;
}

namespace {

// Leading zero padding for "same-zero" (TensorFlow SAME convention).
uint32_t PadBefore(uint32_t in, uint32_t out, uint32_t kernel, uint32_t stride,
                   Padding padding) {
  if (padding == Padding::kValid) return 0;
  const int64_t total = std::max<int64_t>(
      0, static_cast<int64_t>(out - 1) * stride + kernel - in);
  return static_cast<uint32_t>(total / 2);
}

std::string LayerLabel(size_t index, const Layer& layer) {
  return "layer " + std::to_string(index) + " (" + LayerKindName(layer) + ")";
}

}  // namespace

std::vector<Shape3> ModelSpec::Validate() const {
  if (input_shape.size() == 0) {
    throw Error(ErrorCode::kShape, "model input shape is empty");
  }
  if (conv_layer_count() == 0) {
    throw Error(ErrorCode::kSchema, "model has no conv layer");
  }
  if (layers.empty() || !std::holds_alternative<SoftmaxLayer>(layers.back())) {
    throw Error(ErrorCode::kSchema, "model must end with a softmax layer");
  }
  std::vector<Shape3> shapes;
  shapes.reserve(layers.size());
  Shape3 cur = input_shape;
  for (size_t li = 0; li < layers.size(); ++li) {
    const Layer& layer = layers[li];
    const std::string label = LayerLabel(li, layer);
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorCode::kShape, label + ": " + msg);
    };
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      if (conv->out_channels == 0) fail("out_channels must be >= 1");
      if (conv->weights.size() != conv->out_channels) {
        fail("declares " + std::to_string(conv->out_channels) +
             " filters but has " + std::to_string(conv->weights.size()));
      }
      if (conv->bias.size() != conv->out_channels) {
        fail("bias has " + std::to_string(conv->bias.size()) +
             " entries, expected " + std::to_string(conv->out_channels));
      }
      const Shape3 kernel{cur.channels, conv->kernel_h, conv->kernel_w};
      for (size_t f = 0; f < conv->weights.size(); ++f) {
        if (conv->weights[f].shape() != kernel) {
          fail("filter " + std::to_string(f) + " has shape " +
               conv->weights[f].shape().ToString() + ", expected " +
               kernel.ToString());
        }
      }
      try {
        cur = Shape3{conv->out_channels,
                     ConvOutputExtent(cur.height, conv->kernel_h, conv->stride,
                                      conv->padding),
                     ConvOutputExtent(cur.width, conv->kernel_w, conv->stride,
                                      conv->padding)};
      } catch (const Error& e) {
        fail(e.what());
      }
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      if (pool->size == 0 || pool->stride == 0) fail("size/stride must be >= 1");
      if (pool->size > cur.height || pool->size > cur.width) {
        fail("window " + std::to_string(pool->size) + " exceeds input " +
             cur.ToString());
      }
      cur = Shape3{cur.channels, (cur.height - pool->size) / pool->stride + 1,
                   (cur.width - pool->size) / pool->stride + 1};
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      cur = Shape3{static_cast<uint32_t>(cur.size()), 1, 1};
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      if (cur.height != 1 || cur.width != 1) {
        fail("input " + cur.ToString() + " is not a vector; add a flatten");
      }
      if (dense->in_dim != cur.channels) {
        fail("in_dim " + std::to_string(dense->in_dim) +
             " does not match predecessor output " +
             std::to_string(cur.channels));
      }
      if (dense->weights.size() !=
          static_cast<size_t>(dense->out_dim) * dense->in_dim) {
        fail("weight matrix has " + std::to_string(dense->weights.size()) +
             " entries, expected " +
             std::to_string(static_cast<size_t>(dense->out_dim) *
                            dense->in_dim));
      }
      if (dense->bias.size() != dense->out_dim) fail("bias size mismatch");
      cur = Shape3{dense->out_dim, 1, 1};
    } else {  // softmax
      if (li + 1 != layers.size()) {
        throw Error(ErrorCode::kSchema, label + ": softmax must be last");
      }
      if (cur.height != 1 || cur.width != 1) fail("softmax input not a vector");
      if (cur.channels != class_names.size()) {
        throw Error(ErrorCode::kSchema,
                    label + ": softmax width " + std::to_string(cur.channels) +
                        " != class count " +
                        std::to_string(class_names.size()));
      }
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::vector<Shape3> ModelSpec::ConvOutputShapes() const {
  const auto shapes = Validate();
  std::vector<Shape3> out;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (std::holds_alternative<ConvLayer>(layers[i])) out.push_back(shapes[i]);
  }
  return out;
}

Tensor3 Conv2d(const Tensor3& input, std::span<const Tensor3> filters,
               std::span<const float> biases, uint32_t stride,
               Padding padding) {
  if (filters.empty()) throw Error(ErrorCode::kShape, "conv2d: no filters");
  if (biases.size() != filters.size()) {
    throw Error(ErrorCode::kShape, "conv2d: bias count != filter count");
  }
  const Shape3 kshape = filters[0].shape();
  for (const Tensor3& f : filters) {
    if (f.shape() != kshape || f.channels() != input.channels()) {
      throw Error(ErrorCode::kShape,
                  "conv2d: filter " + f.shape().ToString() +
                      " incompatible with input " + input.shape().ToString());
    }
  }
  const uint32_t kh = kshape.height;
  const uint32_t kw = kshape.width;
  const uint32_t out_h = ConvOutputExtent(input.height(), kh, stride, padding);
  const uint32_t out_w = ConvOutputExtent(input.width(), kw, stride, padding);
  const uint32_t pad_top = PadBefore(input.height(), out_h, kh, stride, padding);
  const uint32_t pad_left = PadBefore(input.width(), out_w, kw, stride, padding);

  // im2col: one row per (channel, ky, kx), one column per output position.
  const size_t rows = kshape.size();
  const size_t cols = static_cast<size_t>(out_h) * out_w;
  std::vector<float> columns(rows * cols, 0.0f);
  const auto in = input.values();
  size_t row = 0;
  for (uint32_t c = 0; c < input.channels(); ++c) {
    for (uint32_t ky = 0; ky < kh; ++ky) {
      for (uint32_t kx = 0; kx < kw; ++kx, ++row) {
        float* dst = columns.data() + row * cols;
        for (uint32_t oy = 0; oy < out_h; ++oy) {
          const int64_t iy = static_cast<int64_t>(oy) * stride + ky - pad_top;
          if (iy < 0 || iy >= input.height()) continue;
          for (uint32_t ox = 0; ox < out_w; ++ox) {
            const int64_t ix =
                static_cast<int64_t>(ox) * stride + kx - pad_left;
            if (ix < 0 || ix >= input.width()) continue;
            dst[static_cast<size_t>(oy) * out_w + ox] =
                in[(static_cast<size_t>(c) * input.height() + iy) *
                       input.width() +
                   ix];
          }
        }
      }
    }
  }

  std::vector<float> out(filters.size() * cols);
  std::vector<double> acc(cols);
  for (size_t f = 0; f < filters.size(); ++f) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(biases[f]));
    const auto w = filters[f].values();
    for (size_t r = 0; r < rows; ++r) {
      const double wr = w[r];
      const float* src = columns.data() + r * cols;
      for (size_t p = 0; p < cols; ++p) acc[p] += wr * src[p];
    }
    std::transform(acc.begin(), acc.end(), out.begin() + f * cols,
                   [](double v) { return static_cast<float>(v); });
  }
  return Tensor3(Shape3{static_cast<uint32_t>(filters.size()), out_h, out_w},
                 std::move(out));
}

Tensor3 Relu(const Tensor3& t) {
  std::vector<float> out(t.values().begin(), t.values().end());
  for (float& v : out) v = v > 0.0f ? v : 0.0f;
  return Tensor3(t.shape(), std::move(out));
}

Tensor3 MaxPool2d(const Tensor3& t, uint32_t size, uint32_t stride) {
  if (size == 0 || stride == 0) {
    throw Error(ErrorCode::kShape, "maxpool: size and stride must be >= 1");
  }
  if (size > t.height() || size > t.width()) {
    throw Error(ErrorCode::kShape, "maxpool: window " + std::to_string(size) +
                                       " exceeds input " +
                                       t.shape().ToString());
  }
  const uint32_t out_h = (t.height() - size) / stride + 1;
  const uint32_t out_w = (t.width() - size) / stride + 1;
  std::vector<float> out;
  out.reserve(static_cast<size_t>(t.channels()) * out_h * out_w);
  for (uint32_t c = 0; c < t.channels(); ++c) {
    for (uint32_t oy = 0; oy < out_h; ++oy) {
      for (uint32_t ox = 0; ox < out_w; ++ox) {
        float best = t.at(c, oy * stride, ox * stride);
        for (uint32_t dy = 0; dy < size; ++dy) {
          for (uint32_t dx = 0; dx < size; ++dx) {
            best = std::max(best, t.at(c, oy * stride + dy, ox * stride + dx));
          }
        }
        out.push_back(best);
      }
    }
  }
  return Tensor3(Shape3{t.channels(), out_h, out_w}, std::move(out));
}

std::vector<float> Softmax(std::span<const float> logits) {
  if (logits.empty()) throw Error(ErrorCode::kShape, "softmax of empty vector");
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - shift);
    total += e[i];
  }
  std::vector<float> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<float>(e[i] / total);
  }
  return out;
}

Tensor3 Dense(const DenseLayer& layer, const Tensor3& input) {
  if (input.size() != layer.in_dim) {
    throw Error(ErrorCode::kShape, "dense: input has " +
                                       std::to_string(input.size()) +
                                       " values, expected " +
                                       std::to_string(layer.in_dim));
  }
  const auto x = input.values();
  std::vector<float> out(layer.out_dim);
  for (uint32_t o = 0; o < layer.out_dim; ++o) {
    double acc = layer.bias[o];
    const float* row = layer.weights.data() + static_cast<size_t>(o) * layer.in_dim;
    for (uint32_t i = 0; i < layer.in_dim; ++i) {
      acc += static_cast<double>(row[i]) * x[i];
    }
    float v = static_cast<float>(acc);
    if (layer.activation == Activation::kRelu && v < 0.0f) v = 0.0f;
    out[o] = v;
  }
  return Tensor3(Shape3{layer.out_dim, 1, 1}, std::move(out));
}

ForwardTrace Forward(const ModelSpec& model, const Tensor3& image) {
  model.Validate();
  if (image.shape() != model.input_shape) {
    throw Error(ErrorCode::kShape, "image shape " + image.shape().ToString() +
                                       " does not match model input " +
                                       model.input_shape.ToString());
  }
  ForwardTrace trace;
  Tensor3 cur = image;
  for (const Layer& layer : model.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      cur = Conv2d(cur, conv->weights, conv->bias, conv->stride, conv->padding);
      if (conv->activation == Activation::kRelu) cur = Relu(cur);
      trace.conv_outputs.push_back(cur);
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      cur = MaxPool2d(cur, pool->size, pool->stride);
    } else if (std::holds_alternative<FlattenLayer>(layer)) {
      cur = Tensor3(Shape3{static_cast<uint32_t>(cur.size()), 1, 1},
                    std::vector<float>(cur.values().begin(), cur.values().end()));
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      cur = Dense(*dense, cur);
    } else {
      trace.probabilities = Softmax(cur.values());
    }
  }
  const auto best = std::max_element(trace.probabilities.begin(),
                                     trace.probabilities.end());
  trace.predicted_class =
      static_cast<uint32_t>(best - trace.probabilities.begin());
  return trace;
}

}  // namespace filtag
