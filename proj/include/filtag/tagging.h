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

#ifndef FILTAG_TAGGING_H_
#define FILTAG_TAGGING_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "filtag/ingest.h"
#include "filtag/tensor.h"

namespace filtag {

// One image's layer output min-max scaled into [0, 1], pooled over all
// filters of the layer.
struct ScaledLayerActivations {
  uint32_t image_id = 0;
  uint32_t layer_id = 0;
  Tensor3 values;
};

// Mean scaled activation of one filter's feature map for one image.
struct FilterImageScore {
  uint32_t image_id = 0;
  FilterKey key;
  double score = 0.0;
};

// (x - min) / (max - min) over all values jointly; a constant input maps to
// all zeros. Throws kData on NaN/Inf.
std::vector<float> ScaleValues(std::span<const float> raw);
ScaledLayerActivations ScaleLayer(const Tensor3& raw, uint32_t image_id = 0,
                                  uint32_t layer_id = 0);

// Throws kIndex for a bad filter index, kDomain for an empty feature map.
FilterImageScore FeatureMapScore(const ScaledLayerActivations& scaled,
                                 uint32_t filter_index);

// Per-filter sums of a layer's scaled activations in units of 2^-64. Every
// f32 value at or above 2^-41 is represented exactly, so maps whose scaled
// values add up to the same number get identical sums.
struct LayerActivationSums {
  uint64_t map_size = 0;
  std::vector<unsigned __int128> sums;

  // Feature-map means, one per filter.
  std::vector<double> Means() const;
};

LayerActivationSums LayerFilterSums(const Tensor3& raw);

// ScaleLayer followed by FeatureMapScore for every filter.
std::vector<double> LayerFilterScores(const Tensor3& raw);

// Per-layer matrix of class means: rows are the classes that contributed at
// least one image (ascending id), columns the layer's filters.
struct ClassActivationMatrix {
  uint32_t layer_id = 0;
  uint32_t filter_count = 0;
  std::vector<uint32_t> class_ids;
  std::vector<uint64_t> image_counts;
  // class_ids.size() x filter_count, row-major.
  std::vector<double> values;

  std::span<const double> row(size_t r) const {
    return std::span<const double>(values).subspan(r * filter_count,
                                                   filter_count);
  }
  double at(size_t r, uint32_t filter) const {
    return values[r * filter_count + filter];
  }
};

// Streaming class-mean fold. Activation sums are accumulated as 64-bit
// fraction fixed point in 128-bit integers, so the fold is exact, commutative
// and associative: the result does not depend on image order or on how
// partial folds are merged.
class ClassMeanAccumulator {
 public:
  explicit ClassMeanAccumulator(std::vector<LayerSchema> layers);

  // All filter sums of one image at one layer. Class means built only from
  // sums are exact, so equal true means compare equal.
  void AddImageLayer(uint32_t class_label, uint32_t layer_id,
                     const LayerActivationSums& sums);
  // All filter scores of one image at one layer; each score is rounded to
  // 2^-64 before it is added.
  void AddImageLayer(uint32_t class_label, uint32_t layer_id,
                     std::span<const double> filter_scores);
  void Add(const FilterImageScore& score, uint32_t class_label);
  void Merge(const ClassMeanAccumulator& other);

  std::vector<ClassActivationMatrix> Finish() const;

 private:
  // Sum of scaled activations over images and map positions, in units of
  // 2^-64, and the number of images.
  struct Cell {
    unsigned __int128 sum = 0;
    uint64_t count = 0;
  };
  size_t LayerIndex(uint32_t layer_id) const;
  std::vector<Cell>& Row(size_t li, uint32_t class_label);
  uint64_t MapSize(size_t li) const;

  std::vector<LayerSchema> layers_;
  // Per layer: class -> per-filter cells.
  std::vector<std::map<uint32_t, std::vector<Cell>>> cells_;
};

// Throws kData when a score's image has no label.
std::vector<ClassActivationMatrix> AccumulateClassMeans(
    std::span<const FilterImageScore> scores,
    const std::map<uint32_t, uint32_t>& labels,
    const std::vector<LayerSchema>& layers);

// How many feature maps are chosen per class and layer.
struct SelectionMethod {
  enum class Kind { kKBest, kQQuantile };

  Kind kind = Kind::kKBest;
  uint32_t k = 1;
  double q = 0.0;

  // Throw kDomain for k < 1 or q outside (0, 1].
  static SelectionMethod KBest(int64_t k);
  static SelectionMethod QQuantile(double q);

  size_t CountFor(size_t filter_count) const;
  // "k_best" / "q_quantile".
  std::string KindName() const;
  // Shortest decimal form of k or q.
  std::string ParamString() const;
  std::string ToString() const { return KindName() + "=" + ParamString(); }

  friend bool operator==(const SelectionMethod& a, const SelectionMethod& b) {
    return a.kind == b.kind &&
           (a.kind == Kind::kKBest ? a.k == b.k : a.q == b.q);
  }
};

// ceil(q * filter_count), tolerant of representation error (0.3 * 10 is 3),
// clamped to [1, filter_count].
size_t QuantileCount(double q, size_t filter_count);

// Indices of the `count` highest scores, ordered by score descending then
// index ascending.
std::vector<uint32_t> TopFilters(std::span<const double> scores, size_t count);

// Per matrix row, the chosen filter indices in rank order.
std::vector<std::vector<uint32_t>> SelectKBest(
    const ClassActivationMatrix& matrix, int64_t k);
std::vector<std::vector<uint32_t>> SelectQQuantile(
    const ClassActivationMatrix& matrix, double q);
std::vector<std::vector<uint32_t>> Select(const ClassActivationMatrix& matrix,
                                          const SelectionMethod& method);

}  // namespace filtag

#endif  // FILTAG_TAGGING_H_
