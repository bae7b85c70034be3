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

#ifndef FILTAG_STATS_H_
#define FILTAG_STATS_H_

#include <optional>
#include <span>
#include <vector>

namespace filtag {

// 1-based ranks; tied values share the average of their positions.
std::vector<double> AverageRanks(std::span<const double> values);

// Spearman rank correlation (Pearson on average ranks). nullopt when fewer
// than two points or either side has no rank variance. Throws kDomain when
// the lengths differ.
std::optional<double> SpearmanCorrelation(std::span<const double> x,
                                          std::span<const double> y);

}  // namespace filtag

#endif  // FILTAG_STATS_H_
