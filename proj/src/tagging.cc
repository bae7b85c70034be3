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

#include "filtag/tagging.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "filtag/errors.h"

namespace filtag {
namespace {

constexpr int kFixedBits = 64;

unsigned __int128 ToFixed(double v) {
  return static_cast<unsigned __int128>(std::nearbyint(std::ldexp(v, kFixedBits)));
}

// sum / (denom * 2^64) rounded to double.
double FixedQuotient(unsigned __int128 sum, unsigned __int128 denom) {
  const unsigned __int128 q = sum / denom;
  const unsigned __int128 r = sum % denom;
  return std::ldexp(static_cast<double>(q), -kFixedBits) +
         std::ldexp(static_cast<double>(r) / static_cast<double>(denom),
                    -kFixedBits);
}

}  // namespace

std::vector<float> ScaleValues(std::span<const float> raw) {
  if (raw.empty()) return {};
  float lo = raw[0];
  float hi = raw[0];
  for (float v : raw) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kData, "cannot scale non-finite activation");
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<float> out(raw.size(), 0.0f);
  if (hi == lo) return out;
  const double range = static_cast<double>(hi) - lo;
  for (size_t j = 0; j < raw.size(); ++j) {
    out[j] = static_cast<float>((static_cast<double>(raw[j]) - lo) / range);
  }
  return out;
}

ScaledLayerActivations ScaleLayer(const Tensor3& raw, uint32_t image_id,
                                  uint32_t layer_id) {
  return ScaledLayerActivations{image_id, layer_id,
                                Tensor3(raw.shape(), ScaleValues(raw.values()))};
}

FilterImageScore FeatureMapScore(const ScaledLayerActivations& scaled,
                                 uint32_t filter_index) {
  const auto map = scaled.values.channel(filter_index);
  if (map.empty()) throw Error(ErrorCode::kDomain, "empty feature map");
  unsigned __int128 sum = 0;
  for (float v : map) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kDomain, "scaled activation outside [0, 1]");
    }
    sum += ToFixed(v);
  }
  return FilterImageScore{scaled.image_id,
                          FilterKey{scaled.layer_id, filter_index},
                          FixedQuotient(sum, map.size())};
}

std::vector<double> LayerActivationSums::Means() const {
  std::vector<double> out;
  out.reserve(sums.size());
  for (unsigned __int128 s : sums) {
    out.push_back(map_size == 0 ? 0.0 : FixedQuotient(s, map_size));
  }
  return out;
}

LayerActivationSums LayerFilterSums(const Tensor3& raw) {
  const ScaledLayerActivations scaled = ScaleLayer(raw);
  LayerActivationSums out;
  out.map_size = raw.shape().plane();
  if (out.map_size == 0) throw Error(ErrorCode::kDomain, "empty feature map");
  out.sums.resize(raw.channels());
  for (uint32_t i = 0; i < raw.channels(); ++i) {
    unsigned __int128 sum = 0;
    for (float v : scaled.values.channel(i)) sum += ToFixed(v);
    out.sums[i] = sum;
  }
  return out;
}

std::vector<double> LayerFilterScores(const Tensor3& raw) {
  return LayerFilterSums(raw).Means();
}

ClassMeanAccumulator::ClassMeanAccumulator(std::vector<LayerSchema> layers)
    : layers_(std::move(layers)), cells_(layers_.size()) {
  for (const LayerSchema& l : layers_) {
    if (l.height == 0 || l.width == 0) {
      throw Error(ErrorCode::kSchema, "layer " + std::to_string(l.layer_id) +
                                          " has empty feature maps");
    }
  }
}

size_t ClassMeanAccumulator::LayerIndex(uint32_t layer_id) const {
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].layer_id == layer_id) return i;
  }
  throw Error(ErrorCode::kSchema,
              "unknown layer " + std::to_string(layer_id));
}

std::vector<ClassMeanAccumulator::Cell>& ClassMeanAccumulator::Row(
    size_t li, uint32_t class_label) {
  auto& row = cells_[li][class_label];
  row.resize(layers_[li].filter_count);
  return row;
}

uint64_t ClassMeanAccumulator::MapSize(size_t li) const {
  return static_cast<uint64_t>(layers_[li].height) * layers_[li].width;
}

void ClassMeanAccumulator::AddImageLayer(uint32_t class_label,
                                         uint32_t layer_id,
                                         const LayerActivationSums& sums) {
  const size_t li = LayerIndex(layer_id);
  if (sums.sums.size() != layers_[li].filter_count ||
      sums.map_size != MapSize(li)) {
    throw Error(ErrorCode::kSchema,
                "layer " + std::to_string(layer_id) + " expects " +
                    std::to_string(layers_[li].filter_count) +
                    " maps of " + std::to_string(MapSize(li)) +
                    " values, got " + std::to_string(sums.sums.size()) +
                    " of " + std::to_string(sums.map_size));
  }
  auto& row = Row(li, class_label);
  for (size_t i = 0; i < sums.sums.size(); ++i) {
    row[i].sum += sums.sums[i];
    row[i].count += 1;
  }
}

void ClassMeanAccumulator::AddImageLayer(uint32_t class_label,
                                         uint32_t layer_id,
                                         std::span<const double> filter_scores) {
  const size_t li = LayerIndex(layer_id);
  if (filter_scores.size() != layers_[li].filter_count) {
    throw Error(ErrorCode::kSchema,
                "layer " + std::to_string(layer_id) + " expects " +
                    std::to_string(layers_[li].filter_count) +
                    " filter scores, got " +
                    std::to_string(filter_scores.size()));
  }
  for (uint32_t i = 0; i < filter_scores.size(); ++i) {
    Add(FilterImageScore{0, FilterKey{layer_id, i}, filter_scores[i]},
        class_label);
  }
}

void ClassMeanAccumulator::Add(const FilterImageScore& score,
                               uint32_t class_label) {
  const size_t li = LayerIndex(score.key.layer_id);
  if (score.key.filter_index >= layers_[li].filter_count) {
    throw Error(ErrorCode::kIndex,
                "filter " + std::to_string(score.key.filter_index) +
                    " out of range for layer " +
                    std::to_string(score.key.layer_id));
  }
  if (!(score.score >= 0.0 && score.score <= 1.0)) {
    throw Error(ErrorCode::kDomain, "filter score " +
                                        std::to_string(score.score) +
                                        " outside [0, 1]");
  }
  Cell& cell = Row(li, class_label)[score.key.filter_index];
  cell.sum += ToFixed(score.score) * MapSize(li);
  cell.count += 1;
}

void ClassMeanAccumulator::Merge(const ClassMeanAccumulator& other) {
  if (other.layers_ != layers_) {
    throw Error(ErrorCode::kSchema, "cannot merge folds over different layers");
  }
  for (size_t li = 0; li < cells_.size(); ++li) {
    for (const auto& [label, cells] : other.cells_[li]) {
      auto& row = cells_[li][label];
      row.resize(layers_[li].filter_count);
      for (size_t i = 0; i < cells.size(); ++i) {
        row[i].sum += cells[i].sum;
        row[i].count += cells[i].count;
      }
    }
  }
}

std::vector<ClassActivationMatrix> ClassMeanAccumulator::Finish() const {
  std::vector<ClassActivationMatrix> out;
  for (size_t li = 0; li < layers_.size(); ++li) {
    ClassActivationMatrix m;
    m.layer_id = layers_[li].layer_id;
    m.filter_count = layers_[li].filter_count;
    for (const auto& [label, cells] : cells_[li]) {
      uint64_t images = 0;
      for (const Cell& cell : cells) images = std::max(images, cell.count);
      if (images == 0) continue;
      m.class_ids.push_back(label);
      m.image_counts.push_back(images);
      for (const Cell& cell : cells) {
        double z = 0.0;
        if (cell.count > 0) {
          z = FixedQuotient(cell.sum, static_cast<unsigned __int128>(
                                          cell.count) * MapSize(li));
        }
        m.values.push_back(std::clamp(z, 0.0, 1.0));
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ClassActivationMatrix> AccumulateClassMeans(
    std::span<const FilterImageScore> scores,
    const std::map<uint32_t, uint32_t>& labels,
    const std::vector<LayerSchema>& layers) {
  ClassMeanAccumulator acc(layers);
  for (const FilterImageScore& s : scores) {
    auto it = labels.find(s.image_id);
    if (it == labels.end()) {
      throw Error(ErrorCode::kData,
                  "image " + std::to_string(s.image_id) + " has no label");
    }
    acc.Add(s, it->second);
  }
  return acc.Finish();
}

SelectionMethod SelectionMethod::KBest(int64_t k) {
  if (k < 1 || k > std::numeric_limits<uint32_t>::max()) {
    throw Error(ErrorCode::kDomain, "k must be >= 1, got " + std::to_string(k));
  }
  SelectionMethod m;
  m.kind = Kind::kKBest;
  m.k = static_cast<uint32_t>(k);
  return m;
}

SelectionMethod SelectionMethod::QQuantile(double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::kDomain,
                "q must lie in (0, 1], got " + std::to_string(q));
  }
  SelectionMethod m;
  m.kind = Kind::kQQuantile;
  m.q = q;
  return m;
}

size_t SelectionMethod::CountFor(size_t filter_count) const {
  if (kind == Kind::kKBest) return std::min<size_t>(k, filter_count);
  return QuantileCount(q, filter_count);
}

std::string SelectionMethod::KindName() const {
  return kind == Kind::kKBest ? "k_best" : "q_quantile";
}

std::string SelectionMethod::ParamString() const {
  if (kind == Kind::kKBest) return std::to_string(k);
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), q);
  return std::string(buf, res.ptr);
}

size_t QuantileCount(double q, size_t filter_count) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::kDomain,
                "q must lie in (0, 1], got " + std::to_string(q));
  }
  if (filter_count == 0) return 0;
  const double x = q * static_cast<double>(filter_count);
  const double nearest = std::round(x);
  const double count =
      std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return std::clamp<size_t>(static_cast<size_t>(count), 1, filter_count);
}

std::vector<uint32_t> TopFilters(std::span<const double> scores,
                                 size_t count) {
  count = std::min(count, scores.size());
  std::vector<uint32_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(),
                    [&](uint32_t a, uint32_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  idx.resize(count);
  return idx;
}

std::vector<std::vector<uint32_t>> Select(const ClassActivationMatrix& matrix,
                                          const SelectionMethod& method) {
  const size_t count = method.CountFor(matrix.filter_count);
  std::vector<std::vector<uint32_t>> out;
  out.reserve(matrix.class_ids.size());
  for (size_t r = 0; r < matrix.class_ids.size(); ++r) {
    out.push_back(TopFilters(matrix.row(r), count));
  }
  return out;
}

std::vector<std::vector<uint32_t>> SelectKBest(
    const ClassActivationMatrix& matrix, int64_t k) {
  return Select(matrix, SelectionMethod::KBest(k));
}

std::vector<std::vector<uint32_t>> SelectQQuantile(
    const ClassActivationMatrix& matrix, double q) {
  return Select(matrix, SelectionMethod::QQuantile(q));
}

}  // namespace filtag
