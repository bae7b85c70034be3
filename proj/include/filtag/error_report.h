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

#ifndef FILTAG_ERROR_REPORT_H_
#define FILTAG_ERROR_REPORT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "filtag/explain.h"
#include "filtag/tag_store.h"

namespace filtag {

// How one class shows up in a misclassified image's explanation.
struct ClassEvidence {
  uint32_t class_id = 0;
  std::optional<size_t> rank;
  uint32_t frequency = 0;
  double summed_score = 0.0;
  std::optional<float> probability;
  // Activated filters whose tags include this class.
  std::vector<FilterKey> filters;
  // (n, class within the top n ranked tags).
  std::vector<std::pair<uint32_t, bool>> hits;
};

// A class tagged both on activated filters typical of the true class and on
// activated filters typical of the predicted class.
struct SharedTag {
  uint32_t class_id = 0;
  uint32_t true_side_filters = 0;
  uint32_t predicted_side_filters = 0;
};

struct ErrorReport {
  uint32_t image_id = 0;
  ClassEvidence true_class;
  ClassEvidence predicted_class;
  // Activated filters tagged with both the true and the predicted class.
  std::vector<FilterKey> shared_filters;
  std::vector<SharedTag> shared_tags;
  std::vector<RankedTag> ranked_tags;
};

// Throws kUsage when the explanation has no prediction or the prediction is
// correct.
ErrorReport BuildErrorReport(const Explanation& e, const TagStore& store,
                             std::span<const uint32_t> n_values,
                             std::span<const float> probabilities = {});

std::string ErrorReportToJson(const ErrorReport& report,
                              const std::vector<std::string>& classes);
std::string RenderErrorReportText(const ErrorReport& report,
                                  const std::vector<std::string>& classes);

}  // namespace filtag

#endif  // FILTAG_ERROR_REPORT_H_
