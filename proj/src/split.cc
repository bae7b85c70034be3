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
#include <random>

#include "filtag/errors.h"
#include "filtag/ingest.h"
#include "filtag/logging.h"

namespace filtag {
namespace {

// Uniform draw in [0, bound) by rejection; std::uniform_int_distribution is
// not reproducible across standard library implementations.
uint64_t UniformBelow(std::mt19937_64& rng, uint64_t bound) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

size_t TaggingCount(double fraction, size_t n) {
  const double x = fraction * static_cast<double>(n);
  // Half-up, tolerant of representation error such as 0.7 * 5.
  size_t count = static_cast<size_t>(std::floor(x + 0.5 + 1e-9));
  if (n >= 2) count = std::clamp<size_t>(count, 1, n - 1);
  else count = n;
  return count;
}

std::vector<uint32_t> Flatten(
    const std::map<uint32_t, std::vector<uint32_t>>& by_class) {
  std::vector<uint32_t> out;
  for (const auto& [c, ids] : by_class) out.insert(out.end(), ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

bool Contains(const std::map<uint32_t, std::vector<uint32_t>>& by_class,
              uint32_t id) {
  for (const auto& [c, ids] : by_class) {
    if (std::binary_search(ids.begin(), ids.end(), id)) return true;
  }
  return false;
}

}  // namespace

std::vector<uint32_t> DatasetSplit::TaggingIds() const { return Flatten(tagging); }
std::vector<uint32_t> DatasetSplit::TestIds() const { return Flatten(test); }
bool DatasetSplit::IsTagging(uint32_t id) const { return Contains(tagging, id); }
bool DatasetSplit::IsTest(uint32_t id) const { return Contains(test, id); }

DatasetSplit SplitDataset(std::span<const LabeledImage> images,
                          double fraction, uint64_t seed,
                          uint32_t num_classes) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kDomain, "split fraction must lie in (0, 1), got " +
                                        std::to_string(fraction));
  }
  std::map<uint32_t, std::vector<uint32_t>> by_class;
  std::vector<uint32_t> all_ids;
  for (const LabeledImage& img : images) {
    by_class[img.class_label].push_back(img.image_id);
    all_ids.push_back(img.image_id);
  }
  std::sort(all_ids.begin(), all_ids.end());
  if (std::adjacent_find(all_ids.begin(), all_ids.end()) != all_ids.end()) {
    throw Error(ErrorCode::kData,
                "image id listed more than once; each image needs exactly one "
                "label");
  }

  DatasetSplit split;
  split.fraction = fraction;
  split.seed = seed;
  for (uint32_t c = 0; c < num_classes; ++c) {
    if (!by_class.contains(c)) {
      split.warnings.push_back("class " + std::to_string(c) +
                               " has no images; ignored");
    }
  }
  for (auto& [label, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      label};
    std::mt19937_64 rng(seq);
    for (size_t i = ids.size(); i > 1; --i) {
      std::swap(ids[i - 1], ids[UniformBelow(rng, i)]);
    }
    const size_t n_tag = TaggingCount(fraction, ids.size());
    std::vector<uint32_t> tag(ids.begin(), ids.begin() + n_tag);
    std::vector<uint32_t> test(ids.begin() + n_tag, ids.end());
    std::sort(tag.begin(), tag.end());
    std::sort(test.begin(), test.end());
    if (ids.size() == 1) {
      split.warnings.push_back("class " + std::to_string(label) +
                               " has a single image; test side is empty");
    }
    split.tagging[label] = std::move(tag);
    if (!test.empty()) split.test[label] = std::move(test);
  }
  for (const std::string& w : split.warnings) Log(LogLevel::kWarning, w);
  return split;
}

}  // namespace filtag
