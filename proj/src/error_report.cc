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

#include "filtag/error_report.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "filtag/errors.h"
#include "json.hpp"

namespace filtag {
namespace {

using nlohmann::json;

bool HasTag(const FilterTags& tags, uint32_t class_id) {
  return std::any_of(tags.tags.begin(), tags.tags.end(),
                     [&](const Tag& t) { return t.class_id == class_id; });
}

ClassEvidence Evidence(const Explanation& e, const TagStore& store,
                       uint32_t class_id, std::span<const uint32_t> n_values,
                       std::span<const float> probabilities) {
  ClassEvidence ev;
  ev.class_id = class_id;
  ev.rank = e.RankOf(class_id);
  if (ev.rank) {
    const RankedTag& t = e.ranked_tags[*ev.rank - 1];
    ev.frequency = t.frequency;
    ev.summed_score = t.summed_score;
  }
  if (class_id < probabilities.size()) ev.probability = probabilities[class_id];
  for (const LayerActivation& l : e.activated) {
    for (const ActivatedFilter& f : l.filters) {
      const FilterKey key{l.layer_id, f.filter_index};
      const FilterTags* tags = store.Find(key);
      if (tags != nullptr && HasTag(*tags, class_id)) ev.filters.push_back(key);
    }
  }
  std::sort(ev.filters.begin(), ev.filters.end());
  for (uint32_t n : n_values) {
    ev.hits.emplace_back(n, ev.rank.has_value() && *ev.rank <= n);
  }
  return ev;
}

json KeysJson(const std::vector<FilterKey>& keys) {
  json out = json::array();
  for (const FilterKey& k : keys) {
    out.push_back({{"layer_id", k.layer_id}, {"filter_index", k.filter_index}});
  }
  return out;
}

json EvidenceJson(const ClassEvidence& ev,
                  const std::vector<std::string>& classes) {
  json hits = json::array();
  for (const auto& [n, hit] : ev.hits) hits.push_back({{"n", n}, {"hit", hit}});
  json j = {{"class", classes.at(ev.class_id)},
            {"rank", nullptr},
            {"frequency", ev.frequency},
            {"summed_score", ev.summed_score},
            {"probability", nullptr},
            {"filters", KeysJson(ev.filters)},
            {"hits", hits}};
  if (ev.rank) j["rank"] = *ev.rank;
  if (ev.probability) j["probability"] = *ev.probability;
  return j;
}

void RenderEvidence(std::ostringstream& os, const char* role,
                    const ClassEvidence& ev,
                    const std::vector<std::string>& classes) {
  os << role << ": " << classes.at(ev.class_id);
  if (ev.probability) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " (p=%.3f)", *ev.probability);
    os << buf;
  }
  os << "\n  rank: ";
  if (ev.rank) os << *ev.rank; else os << "absent";
  os << ", frequency " << ev.frequency << ", on " << ev.filters.size()
     << " activated filter(s)";
  for (const auto& [n, hit] : ev.hits) {
    os << ", @" << n << "=" << (hit ? "hit" : "miss");
  }
  os << "\n";
}

}  // namespace

ErrorReport BuildErrorReport(const Explanation& e, const TagStore& store,
                             std::span<const uint32_t> n_values,
                             std::span<const float> probabilities) {
  if (!e.predicted_class) {
    throw Error(ErrorCode::kUsage, "image " + std::to_string(e.image_id) +
                                       " has no model prediction");
  }
  if (*e.predicted_class == e.true_class) {
    throw Error(ErrorCode::kUsage, "image " + std::to_string(e.image_id) +
                                       " is classified correctly");
  }
  ErrorReport report;
  report.image_id = e.image_id;
  report.true_class = Evidence(e, store, e.true_class, n_values, probabilities);
  report.predicted_class =
      Evidence(e, store, *e.predicted_class, n_values, probabilities);
  report.ranked_tags = e.ranked_tags;

  std::set_intersection(
      report.true_class.filters.begin(), report.true_class.filters.end(),
      report.predicted_class.filters.begin(),
      report.predicted_class.filters.end(),
      std::back_inserter(report.shared_filters));

  std::map<uint32_t, std::pair<uint32_t, uint32_t>> sides;
  for (const FilterKey& k : report.true_class.filters) {
    for (const Tag& t : store.Find(k)->tags) sides[t.class_id].first += 1;
  }
  for (const FilterKey& k : report.predicted_class.filters) {
    for (const Tag& t : store.Find(k)->tags) sides[t.class_id].second += 1;
  }
  for (const auto& [c, counts] : sides) {
    if (counts.first > 0 && counts.second > 0) {
      report.shared_tags.push_back(SharedTag{c, counts.first, counts.second});
    }
  }
  std::sort(report.shared_tags.begin(), report.shared_tags.end(),
            [](const SharedTag& a, const SharedTag& b) {
              const uint32_t wa = a.true_side_filters + a.predicted_side_filters;
              const uint32_t wb = b.true_side_filters + b.predicted_side_filters;
              if (wa != wb) return wa > wb;
              return a.class_id < b.class_id;
            });
  return report;
}

std::string ErrorReportToJson(const ErrorReport& report,
                              const std::vector<std::string>& classes) {
  json shared = json::array();
  for (const SharedTag& s : report.shared_tags) {
    shared.push_back({{"class", classes.at(s.class_id)},
                      {"true_side_filters", s.true_side_filters},
                      {"predicted_side_filters", s.predicted_side_filters}});
  }
  json tags = json::array();
  for (const RankedTag& t : report.ranked_tags) {
    tags.push_back({{"class", classes.at(t.class_id)},
                    {"frequency", t.frequency},
                    {"summed_score", t.summed_score}});
  }
  const json doc = {
      {"image_id", report.image_id},
      {"true_class", EvidenceJson(report.true_class, classes)},
      {"predicted_class", EvidenceJson(report.predicted_class, classes)},
      {"shared_filters", KeysJson(report.shared_filters)},
      {"shared_tags", shared},
      {"ranked_tags", tags},
  };
  return doc.dump(2) + "\n";
}

std::string RenderErrorReportText(const ErrorReport& report,
                                  const std::vector<std::string>& classes) {
  std::ostringstream os;
  os << "misclassified image " << report.image_id << "\n";
  RenderEvidence(os, "true class", report.true_class, classes);
  RenderEvidence(os, "predicted class", report.predicted_class, classes);
  os << "filters tagged with both: " << report.shared_filters.size() << "\n";
  if (!report.shared_tags.empty()) {
    os << "tags shared by both classes' activated filters:\n";
    for (const SharedTag& s : report.shared_tags) {
      os << "  " << classes.at(s.class_id) << " (true side "
         << s.true_side_filters << ", predicted side "
         << s.predicted_side_filters << ")\n";
    }
  }
  os << "activated filters' tags:";
  for (const RankedTag& t : report.ranked_tags) {
    os << " " << classes.at(t.class_id) << "(" << t.frequency << ")";
  }
  os << "\n";
  return os.str();
}

}  // namespace filtag
