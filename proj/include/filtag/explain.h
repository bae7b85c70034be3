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

#ifndef FILTAG_EXPLAIN_H_
#define FILTAG_EXPLAIN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "filtag/ingest.h"
#include "filtag/tag_store.h"
#include "filtag/tagging.h"

namespace filtag {

struct ActivatedFilter {
  uint32_t filter_index = 0;
  double score = 0.0;

  friend bool operator==(const ActivatedFilter&,
                         const ActivatedFilter&) = default;
};

struct LayerActivation {
  uint32_t layer_id = 0;
  // Rank order: score descending, then filter index ascending.
  std::vector<ActivatedFilter> filters;

  friend bool operator==(const LayerActivation&,
                         const LayerActivation&) = default;
};

using ActivatedFilters = std::vector<LayerActivation>;

// Most activated filters of one image, per layer. `layer_scores` holds the
// feature-map means of every layer in `layers` order.
ActivatedFilters SelectActivatedFilters(
    const std::vector<std::vector<double>>& layer_scores,
    const std::vector<LayerSchema>& layers, const SelectionMethod& method);
// Same, from raw records. Throws kIncompleteDump when a layer is missing.
ActivatedFilters SelectActivatedFilters(const ImageRecords& records,
                                        const std::vector<LayerSchema>& layers,
                                        const SelectionMethod& method);

// Feature-map means of every layer; throws kIncompleteDump on a gap.
// Per-layer filter sums of one image, in schema layer order.
std::vector<LayerActivationSums> ImageLayerSums(
    const ImageRecords& records, const std::vector<LayerSchema>& layers);
std::vector<std::vector<double>> ImageLayerScores(
    const ImageRecords& records, const std::vector<LayerSchema>& layers);

struct RankedTag {
  uint32_t class_id = 0;
  // Number of activated filters carrying the tag.
  uint32_t frequency = 0;
  // Sum of the stored tag scores over those filters.
  double summed_score = 0.0;

  friend bool operator==(const RankedTag&, const RankedTag&) = default;
};

struct Explanation {
  uint32_t image_id = 0;
  uint32_t true_class = 0;
  std::optional<uint32_t> predicted_class;
  ActivatedFilters activated;
  // Frequency descending, summed score descending, class id ascending.
  std::vector<RankedTag> ranked_tags;

  // 1-based rank of a class, nullopt when absent.
  std::optional<size_t> RankOf(uint32_t class_id) const;

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

// Multiset union of the activated filters' tags across all layers. Throws
// kSchemaMismatch when an activated filter is not in the store.
Explanation ExplainImage(uint32_t image_id, uint32_t true_class,
                         std::optional<uint32_t> predicted_class,
                         const ActivatedFilters& activated,
                         const TagStore& store);

// True iff the true class is among the first n ranked tags. Throws kDomain
// for n < 1.
bool HitsAtN(const Explanation& e, uint32_t n);

std::string ExplanationToJson(const Explanation& e,
                              const std::vector<std::string>& classes);
Explanation ExplanationFromJson(const std::string& text,
                                const std::vector<std::string>& classes);
std::string RenderExplanationText(const Explanation& e,
                                  const std::vector<std::string>& classes,
                                  size_t max_tags = 10);

}  // namespace filtag

#endif  // FILTAG_EXPLAIN_H_
