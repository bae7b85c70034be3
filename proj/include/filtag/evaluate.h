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

#ifndef FILTAG_EVALUATE_H_
#define FILTAG_EVALUATE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "filtag/explain.h"
#include "filtag/ingest.h"
#include "filtag/tag_store.h"
#include "filtag/tagging.h"

namespace filtag {

struct HitCount {
  uint64_t hits = 0;
  uint64_t total = 0;

  double rate() const {
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
  friend bool operator==(const HitCount&, const HitCount&) = default;
};

struct ClassHits {
  uint32_t class_id = 0;
  // Parallel to HitsReport::n_values.
  std::vector<HitCount> per_n;
  // Test images of this class that carry a model prediction, and how many of
  // those predictions were correct.
  uint64_t predicted = 0;
  uint64_t correct = 0;

  std::optional<double> accuracy() const {
    if (predicted == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(predicted);
  }
  friend bool operator==(const ClassHits&, const ClassHits&) = default;
};

struct HitsReport {
  SelectionMethod selection;
  // Ascending, unique.
  std::vector<uint32_t> n_values;
  std::vector<HitCount> overall;
  // Ascending class id; only classes with at least one test image.
  std::vector<ClassHits> per_class;
  // Between per-class hit rate at the largest n and per-class accuracy.
  std::optional<double> spearman;
  uint64_t image_count = 0;
  bool empty = true;

  friend bool operator==(const HitsReport&, const HitsReport&) = default;
};

// Throws kContamination when any test image took part in building the store
// (same dump, tagging side of the store's recorded split).
void CheckNotContaminated(const DumpReader& reader, const TagStore& store,
                          std::span<const uint32_t> test_ids);

// Test images for evaluating `store` against `reader`. For the dump the
// store was built from, the test side of the split with the given (or the
// store's) seed and fraction; for any other dump, every image.
std::vector<uint32_t> ResolveTestImages(const DumpReader& reader,
                                        const TagStore& store,
                                        std::optional<uint64_t> seed,
                                        std::optional<double> fraction);

// Throws kSchemaMismatch when the store's layers differ from the dump's.
void CheckStoreMatchesDump(const DumpReader& reader, const TagStore& store);

// Hits@n over the test images. Predictions stored in the dump feed the
// per-class accuracy and the rank correlation. Throws kDomain for n < 1.
HitsReport Evaluate(DumpReader& reader, const TagStore& store,
                    std::span<const uint32_t> test_ids,
                    const SelectionMethod& selection,
                    std::vector<uint32_t> n_values, int threads = 1);

std::string HitsReportToJson(const HitsReport& report,
                             const std::vector<std::string>& classes);
// Columns method,param,n,class,hits,total,rate; the overall row uses class
// "all".
std::string HitsReportToCsv(const HitsReport& report,
                            const std::vector<std::string>& classes,
                            bool header = true);
std::string RenderHitsReportText(const HitsReport& report,
                                 const std::vector<std::string>& classes);

// Feature-map means of every layer for a set of images, computed once.
struct ScoreCache {
  std::vector<LayerSchema> layers;
  std::map<uint32_t, std::vector<std::vector<double>>> scores;
  std::map<uint32_t, std::vector<LayerActivationSums>> sums;
};

ScoreCache ComputeScoreCache(DumpReader& reader,
                             const std::vector<uint32_t>& image_ids,
                             int threads = 1);

struct SweepTable {
  // One report per grid point, in grid order.
  std::vector<HitsReport> reports;
};

// Builds one store per grid point from the split's tagging side and
// evaluates it on the test side with the same method. Scaling and class
// means are computed once.
SweepTable Sweep(DumpReader& reader, const DatasetSplit& split,
                 std::span<const SelectionMethod> grid,
                 std::vector<uint32_t> n_values, int threads = 1);

std::string SweepToCsv(const SweepTable& table,
                       const std::vector<std::string>& classes);
std::string SweepToJson(const SweepTable& table,
                        const std::vector<std::string>& classes);

}  // namespace filtag

#endif  // FILTAG_EVALUATE_H_
