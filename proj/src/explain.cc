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

#include "filtag/explain.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "filtag/errors.h"
#include "json.hpp"

namespace filtag {

using nlohmann::json;

std::vector<LayerActivationSums> ImageLayerSums(
    const ImageRecords& records, const std::vector<LayerSchema>& layers) {
  std::vector<LayerActivationSums> out;
  out.reserve(layers.size());
  for (const LayerSchema& layer : layers) {
    const ActivationRecord* rec = records.FindLayer(layer.layer_id);
    if (rec == nullptr) {
      throw Error(ErrorCode::kIncompleteDump,
                  "image " + std::to_string(records.image_id) +
                      " has no records for layer " +
                      std::to_string(layer.layer_id));
    }
    out.push_back(LayerFilterSums(rec->feature_maps));
  }
  return out;
}

std::vector<std::vector<double>> ImageLayerScores(
    const ImageRecords& records, const std::vector<LayerSchema>& layers) {
  std::vector<std::vector<double>> out;
  for (const LayerActivationSums& sums : ImageLayerSums(records, layers)) {
    out.push_back(sums.Means());
  }
  return out;
}

ActivatedFilters SelectActivatedFilters(
    const std::vector<std::vector<double>>& layer_scores,
    const std::vector<LayerSchema>& layers, const SelectionMethod& method) {
  if (layer_scores.size() != layers.size()) {
    throw Error(ErrorCode::kIncompleteDump,
                "scores cover " + std::to_string(layer_scores.size()) +
                    " layers, expected " + std::to_string(layers.size()));
  }
  ActivatedFilters out;
  for (size_t li = 0; li < layers.size(); ++li) {
    const auto& scores = layer_scores[li];
    LayerActivation la;
    la.layer_id = layers[li].layer_id;
    for (uint32_t f : TopFilters(scores, method.CountFor(scores.size()))) {
      la.filters.push_back(ActivatedFilter{f, scores[f]});
    }
    out.push_back(std::move(la));
  }
  return out;
}

ActivatedFilters SelectActivatedFilters(const ImageRecords& records,
                                        const std::vector<LayerSchema>& layers,
                                        const SelectionMethod& method) {
  return SelectActivatedFilters(ImageLayerScores(records, layers), layers,
                                method);
}

std::optional<size_t> Explanation::RankOf(uint32_t class_id) const {
  for (size_t i = 0; i < ranked_tags.size(); ++i) {
    if (ranked_tags[i].class_id == class_id) return i + 1;
  }
  return std::nullopt;
}

Explanation ExplainImage(uint32_t image_id, uint32_t true_class,
                         std::optional<uint32_t> predicted_class,
                         const ActivatedFilters& activated,
                         const TagStore& store) {
  std::map<uint32_t, RankedTag> tally;
  for (const LayerActivation& layer : activated) {
    for (const ActivatedFilter& f : layer.filters) {
      const FilterTags* tags = store.Find(FilterKey{layer.layer_id, f.filter_index});
      if (tags == nullptr) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "activated filter (layer " + std::to_string(layer.layer_id) +
                        ", filter " + std::to_string(f.filter_index) +
                        ") is not in the tag store");
      }
      for (const Tag& t : tags->tags) {
        RankedTag& r = tally[t.class_id];
        r.class_id = t.class_id;
        r.frequency += 1;
        r.summed_score += t.score;
      }
    }
  }
  Explanation e;
  e.image_id = image_id;
  e.true_class = true_class;
  e.predicted_class = predicted_class;
  e.activated = activated;
  for (const auto& [c, r] : tally) e.ranked_tags.push_back(r);
  std::sort(e.ranked_tags.begin(), e.ranked_tags.end(),
            [](const RankedTag& a, const RankedTag& b) {
              if (a.frequency != b.frequency) return a.frequency > b.frequency;
              if (a.summed_score != b.summed_score) {
                return a.summed_score > b.summed_score;
              }
              return a.class_id < b.class_id;
            });
  return e;
}

bool HitsAtN(const Explanation& e, uint32_t n) {
  if (n < 1) throw Error(ErrorCode::kDomain, "Hits@n needs n >= 1");
  const size_t limit = std::min<size_t>(n, e.ranked_tags.size());
  for (size_t i = 0; i < limit; ++i) {
    if (e.ranked_tags[i].class_id == e.true_class) return true;
  }
  return false;
}

namespace {

uint32_t ClassIdByName(const std::vector<std::string>& classes,
                       const std::string& name) {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) {
    throw Error(ErrorCode::kParse, "unknown class '" + name + "'");
  }
  return static_cast<uint32_t>(it - classes.begin());
}

}  // namespace

std::string ExplanationToJson(const Explanation& e,
                              const std::vector<std::string>& classes) {
  json activated = json::array();
  for (const LayerActivation& l : e.activated) {
    json filters = json::array();
    for (const ActivatedFilter& f : l.filters) {
      filters.push_back({{"filter_index", f.filter_index}, {"score", f.score}});
    }
    activated.push_back({{"layer_id", l.layer_id}, {"filters", filters}});
  }
  json tags = json::array();
  for (const RankedTag& t : e.ranked_tags) {
    tags.push_back({{"class", classes.at(t.class_id)},
                    {"frequency", t.frequency},
                    {"summed_score", t.summed_score}});
  }
  json doc = {{"image_id", e.image_id},
              {"true_class", classes.at(e.true_class)},
              {"predicted_class", nullptr},
              {"activated", activated},
              {"ranked_tags", tags}};
  if (e.predicted_class) doc["predicted_class"] = classes.at(*e.predicted_class);
  return doc.dump(2) + "\n";
}

Explanation ExplanationFromJson(const std::string& text,
                                const std::vector<std::string>& classes) {
  try {
    const json doc = json::parse(text);
    Explanation e;
    e.image_id = doc.at("image_id").get<uint32_t>();
    e.true_class = ClassIdByName(classes, doc.at("true_class").get<std::string>());
    if (!doc.at("predicted_class").is_null()) {
      e.predicted_class =
          ClassIdByName(classes, doc["predicted_class"].get<std::string>());
    }
    for (const json& l : doc.at("activated")) {
      LayerActivation la;
      la.layer_id = l.at("layer_id").get<uint32_t>();
      for (const json& f : l.at("filters")) {
        la.filters.push_back(ActivatedFilter{f.at("filter_index").get<uint32_t>(),
                                             f.at("score").get<double>()});
      }
      e.activated.push_back(std::move(la));
    }
    for (const json& t : doc.at("ranked_tags")) {
      e.ranked_tags.push_back(
          RankedTag{ClassIdByName(classes, t.at("class").get<std::string>()),
                    t.at("frequency").get<uint32_t>(),
                    t.at("summed_score").get<double>()});
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("explanation: ") + ex.what());
  }
}

std::string RenderExplanationText(const Explanation& e,
                                  const std::vector<std::string>& classes,
                                  size_t max_tags) {
  std::ostringstream os;
  os << "image " << e.image_id << "  true: " << classes.at(e.true_class);
  if (e.predicted_class) os << "  predicted: " << classes.at(*e.predicted_class);
  os << "\n";
  size_t filters = 0;
  for (const LayerActivation& l : e.activated) filters += l.filters.size();
  os << "activated filters: " << filters << " across " << e.activated.size()
     << " layer(s)\n";
  os << "ranked tags:\n";
  for (size_t i = 0; i < e.ranked_tags.size() && i < max_tags; ++i) {
    const RankedTag& t = e.ranked_tags[i];
    char line[160];
    std::snprintf(line, sizeof(line), "  %2zu. %-24s freq %-4u score %.4f\n",
                  i + 1, classes.at(t.class_id).c_str(), t.frequency,
                  t.summed_score);
    os << line;
  }
  if (e.ranked_tags.size() > max_tags) {
    os << "  ... " << e.ranked_tags.size() - max_tags << " more\n";
  }
  return os.str();
}

}  // namespace filtag
