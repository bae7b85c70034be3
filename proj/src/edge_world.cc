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

#include "filtag/edge_world.h"

#include "filtag/errors.h"

namespace filtag {
namespace {

// Uniform double in [0, 1) from the top 53 bits.
double Unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

const char* StripeName(Stripe s) {
  switch (s) {
    case Stripe::kVertical: return "vertical";
    case Stripe::kHorizontal: return "horizontal";
    case Stripe::kDiagonal: return "diagonal";
    case Stripe::kAntiDiagonal: return "anti-diagonal";
  }
  return "unknown";
}

ModelSpec MakeEdgeWorldModel(const EdgeWorldOptions& options) {
  ModelSpec model;
  model.name = "edge-world";
  model.input_shape = Shape3{1, options.size, options.size};
  model.class_names = {"vertical", "horizontal"};

  const Shape3 k{1, 3, 3};
  ConvLayer conv;
  conv.out_channels = 2;
  conv.kernel_h = 3;
  conv.kernel_w = 3;
  conv.stride = 1;
  conv.padding = Padding::kValid;
  conv.activation = Activation::kRelu;
  conv.weights = {
      Tensor3(k, {-1, 0, 1, -2, 0, 2, -1, 0, 1}),   // d/dx: vertical edges
      Tensor3(k, {-1, -2, -1, 0, 0, 0, 1, 2, 1}),   // d/dy: horizontal edges
  };
  conv.bias = {0.0f, 0.0f};
  model.layers.emplace_back(std::move(conv));
  model.layers.emplace_back(MaxPoolLayer{2, 2});
  model.layers.emplace_back(FlattenLayer{});

  const uint32_t conv_extent = options.size - 2;
  const uint32_t pooled = (conv_extent - 2) / 2 + 1;
  const uint32_t plane = pooled * pooled;
  DenseLayer dense;
  dense.in_dim = 2 * plane;
  dense.out_dim = 2;
  dense.activation = Activation::kNone;
  dense.weights.assign(static_cast<size_t>(dense.out_dim) * dense.in_dim, 0.0f);
  const float w = 1.0f / static_cast<float>(plane);
  for (uint32_t j = 0; j < plane; ++j) {
    dense.weights[j] = w;                       // vertical: +ch0
    dense.weights[plane + j] = -w;              //           -ch1
    dense.weights[dense.in_dim + j] = -w;       // horizontal: -ch0
    dense.weights[dense.in_dim + plane + j] = w;  //             +ch1
  }
  dense.bias = {0.0f, 0.0f};
  model.layers.emplace_back(std::move(dense));
  model.layers.emplace_back(SoftmaxLayer{});
  return model;
}

Tensor3 MakeStripeImage(Stripe stripe, uint32_t phase, std::mt19937_64& rng,
                        const EdgeWorldOptions& options) {
  if (options.period < 2) {
    throw Error(ErrorCode::kDomain, "stripe period must be >= 2");
  }
  const uint32_t n = options.size;
  std::vector<float> values(static_cast<size_t>(n) * n);
  for (uint32_t y = 0; y < n; ++y) {
    for (uint32_t x = 0; x < n; ++x) {
      uint32_t coord = 0;
      switch (stripe) {
        case Stripe::kVertical: coord = x; break;
        case Stripe::kHorizontal: coord = y; break;
        case Stripe::kDiagonal: coord = x + y; break;
        case Stripe::kAntiDiagonal: coord = x + n - y; break;
      }
      const bool on = (coord + phase) % options.period < options.period / 2;
      const double noise = (2.0 * Unit(rng) - 1.0) * options.noise;
      values[static_cast<size_t>(y) * n + x] =
          static_cast<float>((on ? 1.0 : 0.0) + noise);
    }
  }
  return Tensor3(Shape3{1, n, n}, std::move(values));
}

std::vector<LabeledTensor> MakeEdgeWorldImages(std::span<const Stripe> classes,
                                               uint32_t per_class,
                                               uint64_t seed,
                                               const EdgeWorldOptions& options,
                                               double label_noise) {
  std::mt19937_64 rng(seed);
  std::vector<LabeledTensor> out;
  uint32_t next_id = 0;
  for (uint32_t i = 0; i < per_class; ++i) {
    for (size_t c = 0; c < classes.size(); ++c) {
      LabeledTensor img;
      img.image_id = next_id++;
      const auto phase = static_cast<uint32_t>(rng() % options.period);
      img.image = MakeStripeImage(classes[c], phase, rng, options);
      size_t label = c;
      if (label_noise > 0.0 && classes.size() > 1 && Unit(rng) < label_noise) {
        label = (c + 1 + rng() % (classes.size() - 1)) % classes.size();
      }
      img.label = StripeName(classes[label]);
      out.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace filtag
