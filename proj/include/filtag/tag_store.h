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

#ifndef FILTAG_TAG_STORE_H_
#define FILTAG_TAG_STORE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "filtag/ingest.h"
#include "filtag/tagging.h"
#include "filtag/tensor.h"

namespace filtag {

struct Tag {
  uint32_t class_id = 0;
  // z_c for this (class, filter), stored as f32.
  float score = 0.0f;

  friend bool operator==(const Tag& a, const Tag& b) {
    return a.class_id == b.class_id && BitEqual(std::span(&a.score, 1),
                                                std::span(&b.score, 1));
  }
};

struct FilterTags {
  uint32_t filter_index = 0;
  // Score descending, then class id ascending.
  std::vector<Tag> tags;

  friend bool operator==(const FilterTags&, const FilterTags&) = default;
};

struct LayerTags {
  uint32_t layer_id = 0;
  // Every filter of the layer, indexed by filter_index; untagged filters
  // have empty tag lists.
  std::vector<FilterTags> filters;

  friend bool operator==(const LayerTags&, const LayerTags&) = default;
};

struct Provenance {
  std::string dump_id;
  uint64_t seed = 0;
  double split_fraction = 0.8;
  std::string model_name;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

inline constexpr int kTagStoreFormatVersion = 1;

// Filter -> tagged classes, the persisted product of tagging.
struct TagStore {
  SelectionMethod method;
  Provenance provenance;
  std::vector<std::string> classes;
  // Ascending layer_id.
  std::vector<LayerTags> layers;

  const LayerTags* FindLayer(uint32_t layer_id) const;
  // nullptr when the key is outside the store's schema.
  const FilterTags* Find(const FilterKey& key) const;
  // Filters carrying a tag for the class, ascending key order.
  std::vector<FilterKey> FiltersTaggedWith(uint32_t class_id) const;
  size_t TagCount() const;

  // Deterministic JSON; scores use the shortest decimal that round-trips the
  // f32 value.
  std::string ToJson() const;
  static TagStore FromJson(const std::string& text);
  void Save(const std::filesystem::path& path) const;
  static TagStore Load(const std::filesystem::path& path);

  friend bool operator==(const TagStore&, const TagStore&) = default;
};

// Inverts per-class selections into filter tags.
TagStore BuildTagStoreFromMatrices(
    const std::vector<ClassActivationMatrix>& matrices,
    const SelectionMethod& method, const std::vector<LayerSchema>& layers,
    std::vector<std::string> classes, Provenance provenance);

// Scale -> feature-map means -> class means over the split's tagging images
// -> selection. Throws kIncompleteDump when a tagging image lacks a layer.
TagStore BuildTagStore(DumpReader& reader, const DatasetSplit& split,
                       const SelectionMethod& method, int threads = 1);

// Class-mean matrices over the given images (all of which must be present
// and complete in the dump).
std::vector<ClassActivationMatrix> ComputeClassMeans(
    DumpReader& reader, const std::vector<uint32_t>& image_ids, int threads);

}  // namespace filtag

#endif  // FILTAG_TAG_STORE_H_
