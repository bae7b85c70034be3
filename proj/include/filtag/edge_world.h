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

// A small constructed scenario with known ground truth: stripe images whose
// orientation is detected by two hand-written edge filters.

#ifndef FILTAG_EDGE_WORLD_H_
#define FILTAG_EDGE_WORLD_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "filtag/image_set.h"
#include "filtag/infer.h"
#include "filtag/tensor.h"

namespace filtag {

enum class Stripe { kVertical, kHorizontal, kDiagonal, kAntiDiagonal };

// "vertical", "horizontal", "diagonal", "anti-diagonal".
const char* StripeName(Stripe s);

struct EdgeWorldOptions {
  uint32_t size = 12;
  uint32_t period = 4;
  // Uniform noise amplitude added to every pixel.
  float noise = 0.1f;
};

// conv(2 filters, 3x3 valid, relu) -> maxpool 2 -> flatten -> dense(2) ->
// softmax over {vertical, horizontal}. Filter 0 responds to vertical edges,
// filter 1 to horizontal edges.
ModelSpec MakeEdgeWorldModel(const EdgeWorldOptions& options = {});

Tensor3 MakeStripeImage(Stripe stripe, uint32_t phase, std::mt19937_64& rng,
                        const EdgeWorldOptions& options = {});

// `per_class` images of each stripe kind, ids assigned sequentially. With
// label_noise > 0 each label is replaced, with that probability, by a
// different class drawn uniformly.
std::vector<LabeledTensor> MakeEdgeWorldImages(
    std::span<const Stripe> classes, uint32_t per_class, uint64_t seed,
    const EdgeWorldOptions& options = {}, double label_noise = 0.0);

}  // namespace filtag

#endif  // FILTAG_EDGE_WORLD_H_
