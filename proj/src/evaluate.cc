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

#include "filtag/evaluate.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "filtag/errors.h"
#include "filtag/parallel.h"
#include "filtag/stats.h"
#include "json.hpp"

namespace filtag {
namespace {

using nlohmann::json;

std::string Shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<uint32_t> NormalizeN(std::vector<uint32_t> n_values) {
  if (n_values.empty()) throw Error(ErrorCode::kDomain, "no n values given");
  for (uint32_t n : n_values) {
    if (n < 1) throw Error(ErrorCode::kDomain, "Hits@n needs n >= 1");
  }
  std::sort(n_values.begin(), n_values.end());
  n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
  return n_values;
}

// Integer hit counters; merging is exact so image order is irrelevant.
class HitsTally {
 public:
  HitsTally(SelectionMethod selection, std::vector<uint32_t> n_values) {
    report_.selection = selection;
    report_.n_values = std::move(n_values);
    report_.overall.resize(report_.n_values.size());
  }

  void Add(const Explanation& e) {
    ClassHits& ch = per_class_[e.true_class];
    ch.class_id = e.true_class;
    ch.per_n.resize(report_.n_values.size());
    for (size_t i = 0; i < report_.n_values.size(); ++i) {
      const bool hit = HitsAtN(e, report_.n_values[i]);
      ch.per_n[i].total += 1;
      report_.overall[i].total += 1;
      if (hit) {
        ch.per_n[i].hits += 1;
        report_.overall[i].hits += 1;
      }
    }
    if (e.predicted_class) {
      ch.predicted += 1;
      if (*e.predicted_class == e.true_class) ch.correct += 1;
    }
    report_.image_count += 1;
  }

  HitsReport Finish() {
    HitsReport out = report_;
    out.empty = out.image_count == 0;
    std::vector<double> rates;
    std::vector<double> accuracies;
    for (const auto& [c, ch] : per_class_) {
      out.per_class.push_back(ch);
      if (auto acc = ch.accuracy()) {
        rates.push_back(ch.per_n.back().rate());
        accuracies.push_back(*acc);
      }
    }
    out.spearman = SpearmanCorrelation(rates, accuracies);
    return out;
  }

 private:
  HitsReport report_;
  std::map<uint32_t, ClassHits> per_class_;
};

json ReportJson(const HitsReport& report,
                const std::vector<std::string>& classes) {
  json overall = json::array();
  for (size_t i = 0; i < report.n_values.size(); ++i) {
    overall.push_back({{"n", report.n_values[i]},
                       {"hits", report.overall[i].hits},
                       {"total", report.overall[i].total},
                       {"rate", report.overall[i].rate()}});
  }
  json per_class = json::array();
  for (const ClassHits& ch : report.per_class) {
    json rows = json::array();
    for (size_t i = 0; i < report.n_values.size(); ++i) {
      rows.push_back({{"n", report.n_values[i]},
                      {"hits", ch.per_n[i].hits},
                      {"total", ch.per_n[i].total},
                      {"rate", ch.per_n[i].rate()}});
    }
    json j = {{"class", classes.at(ch.class_id)},
              {"hits", rows},
              {"predicted", ch.predicted},
              {"correct", ch.correct},
              {"accuracy", nullptr}};
    if (auto acc = ch.accuracy()) j["accuracy"] = *acc;
    per_class.push_back(std::move(j));
  }
  json doc = {{"method", report.selection.KindName()},
              {"param", report.selection.ParamString()},
              {"n_values", report.n_values},
              {"image_count", report.image_count},
              {"empty", report.empty},
              {"overall", overall},
              {"per_class", per_class},
              {"spearman", nullptr}};
  if (report.spearman) doc["spearman"] = *report.spearman;
  return doc;
}

void AppendCsvRows(const HitsReport& report,
                   const std::vector<std::string>& classes, std::string& out) {
  const std::string prefix =
      report.selection.KindName() + "," + report.selection.ParamString() + ",";
  for (size_t i = 0; i < report.n_values.size(); ++i) {
    const std::string n = std::to_string(report.n_values[i]);
    const HitCount& o = report.overall[i];
    out += prefix + n + ",all," + std::to_string(o.hits) + "," +
           std::to_string(o.total) + "," + Shortest(o.rate()) + "\n";
    for (const ClassHits& ch : report.per_class) {
      const HitCount& h = ch.per_n[i];
      out += prefix + n + "," + classes.at(ch.class_id) + "," +
             std::to_string(h.hits) + "," + std::to_string(h.total) + "," +
             Shortest(h.rate()) + "\n";
    }
  }
}

constexpr char kCsvHeader[] = "method,param,n,class,hits,total,rate\n";

}  // namespace

void CheckNotContaminated(const DumpReader& reader, const TagStore& store,
                          std::span<const uint32_t> test_ids) {
  if (reader.dump_id() != store.provenance.dump_id) return;
  const DatasetSplit tagging_split =
      SplitDataset(LabeledImages(reader), store.provenance.split_fraction,
                   store.provenance.seed);
  size_t overlap = 0;
  std::optional<uint32_t> first;
  for (uint32_t id : test_ids) {
    if (tagging_split.IsTagging(id)) {
      ++overlap;
      if (!first) first = id;
    }
  }
  if (overlap > 0) {
    throw Error(ErrorCode::kContamination,
                std::to_string(overlap) +
                    " test image(s) were used to build the tag store (first: "
                    "image " +
                    std::to_string(*first) + "; store split seed " +
                    std::to_string(store.provenance.seed) + ")");
  }
}

std::vector<uint32_t> ResolveTestImages(const DumpReader& reader,
                                        const TagStore& store,
                                        std::optional<uint64_t> seed,
                                        std::optional<double> fraction) {
  if (reader.dump_id() != store.provenance.dump_id) {
    std::vector<uint32_t> all;
    for (const ImageEntry& e : reader.images()) all.push_back(e.image_id);
    return all;
  }
  return SplitDataset(LabeledImages(reader),
                      fraction.value_or(store.provenance.split_fraction),
                      seed.value_or(store.provenance.seed))
      .TestIds();
}

void CheckStoreMatchesDump(const DumpReader& reader, const TagStore& store) {
  const auto& layers = reader.schema().layers;
  bool ok = layers.size() == store.layers.size();
  for (size_t i = 0; ok && i < layers.size(); ++i) {
    ok = layers[i].layer_id == store.layers[i].layer_id &&
         layers[i].filter_count == store.layers[i].filters.size();
  }
  if (!ok) {
    throw Error(ErrorCode::kSchemaMismatch,
                "tag store layers do not match the dump's layer schema");
  }
  if (store.classes != reader.schema().classes) {
    throw Error(ErrorCode::kSchemaMismatch,
                "tag store classes do not match the dump's classes");
  }
}

HitsReport Evaluate(DumpReader& reader, const TagStore& store,
                    std::span<const uint32_t> test_ids,
                    const SelectionMethod& selection,
                    std::vector<uint32_t> n_values, int threads) {
  n_values = NormalizeN(std::move(n_values));
  CheckStoreMatchesDump(reader, store);
  CheckNotContaminated(reader, store, test_ids);
  const auto& layers = reader.schema().layers;
  std::vector<uint32_t> ids(test_ids.begin(), test_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<Explanation> explanations(ids.size());
  ParallelFor(ids.size(), threads, [&](size_t i) {
    const ImageRecords records = reader.ReadImage(ids[i]);
    const ImageEntry* entry = reader.FindImage(ids[i]);
    explanations[i] = ExplainImage(
        ids[i], entry->class_label, entry->predicted_label,
        SelectActivatedFilters(records, layers, selection), store);
  });
  HitsTally tally(selection, n_values);
  for (const Explanation& e : explanations) tally.Add(e);
  return tally.Finish();
}

ScoreCache ComputeScoreCache(DumpReader& reader,
                             const std::vector<uint32_t>& image_ids,
                             int threads) {
  ScoreCache cache;
  cache.layers = reader.schema().layers;
  std::vector<uint32_t> ids(image_ids.begin(), image_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::vector<LayerActivationSums>> sums(ids.size());
  ParallelFor(ids.size(), threads, [&](size_t i) {
    if (reader.FindImage(ids[i]) == nullptr) {
      throw Error(ErrorCode::kIncompleteDump,
                  "image " + std::to_string(ids[i]) + " is missing from the dump");
    }
    sums[i] = ImageLayerSums(reader.ReadImage(ids[i]), cache.layers);
  });
  for (size_t i = 0; i < ids.size(); ++i) {
    std::vector<std::vector<double>> scores;
    for (const LayerActivationSums& s : sums[i]) scores.push_back(s.Means());
    cache.scores.emplace(ids[i], std::move(scores));
    cache.sums.emplace(ids[i], std::move(sums[i]));
  }
  return cache;
}

SweepTable Sweep(DumpReader& reader, const DatasetSplit& split,
                 std::span<const SelectionMethod> grid,
                 std::vector<uint32_t> n_values, int threads) {
  if (grid.empty()) throw Error(ErrorCode::kUsage, "sweep grid is empty");
  n_values = NormalizeN(std::move(n_values));
  const DumpSchema& schema = reader.schema();
  const std::vector<uint32_t> tagging = split.TaggingIds();
  const std::vector<uint32_t> test = split.TestIds();
  std::vector<uint32_t> all = tagging;
  all.insert(all.end(), test.begin(), test.end());
  const ScoreCache cache = ComputeScoreCache(reader, all, threads);

  ClassMeanAccumulator acc(schema.layers);
  for (uint32_t id : tagging) {
    const auto& sums = cache.sums.at(id);
    const uint32_t label = reader.FindImage(id)->class_label;
    for (size_t li = 0; li < schema.layers.size(); ++li) {
      acc.AddImageLayer(label, schema.layers[li].layer_id, sums[li]);
    }
  }
  const auto matrices = acc.Finish();
  const Provenance provenance{reader.dump_id(), split.seed, split.fraction,
                              schema.model_name};

  SweepTable table;
  for (const SelectionMethod& method : grid) {
    const TagStore store = BuildTagStoreFromMatrices(
        matrices, method, schema.layers, schema.classes, provenance);
    HitsTally tally(method, n_values);
    for (uint32_t id : test) {
      const ImageEntry* entry = reader.FindImage(id);
      tally.Add(ExplainImage(
          id, entry->class_label, entry->predicted_label,
          SelectActivatedFilters(cache.scores.at(id), schema.layers, method),
          store));
    }
    table.reports.push_back(tally.Finish());
  }
  return table;
}

std::string HitsReportToJson(const HitsReport& report,
                             const std::vector<std::string>& classes) {
  return ReportJson(report, classes).dump(2) + "\n";
}

std::string HitsReportToCsv(const HitsReport& report,
                            const std::vector<std::string>& classes,
                            bool header) {
  std::string out = header ? kCsvHeader : "";
  AppendCsvRows(report, classes, out);
  return out;
}

std::string RenderHitsReportText(const HitsReport& report,
                                 const std::vector<std::string>& classes) {
  std::ostringstream os;
  os << "selection " << report.selection.ToString() << ", "
     << report.image_count << " test image(s)\n";
  if (report.empty) {
    os << "empty test set: no rates computed\n";
    return os.str();
  }
  for (size_t i = 0; i < report.n_values.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof(line), "Hits@%-4u %6.4f  (%llu/%llu)\n",
                  report.n_values[i], report.overall[i].rate(),
                  static_cast<unsigned long long>(report.overall[i].hits),
                  static_cast<unsigned long long>(report.overall[i].total));
    os << line;
  }
  for (const ClassHits& ch : report.per_class) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %-24s Hits@%u %6.4f", 
                  classes.at(ch.class_id).c_str(), report.n_values.back(),
                  ch.per_n.back().rate());
    os << line;
    if (auto acc = ch.accuracy()) {
      std::snprintf(line, sizeof(line), "  accuracy %6.4f", *acc);
      os << line;
    }
    os << "\n";
  }
  if (report.spearman) {
    os << "spearman(hit rate, accuracy) = " << Shortest(*report.spearman) << "\n";
  }
  return os.str();
}

std::string SweepToCsv(const SweepTable& table,
                       const std::vector<std::string>& classes) {
  std::string out = kCsvHeader;
  for (const HitsReport& r : table.reports) AppendCsvRows(r, classes, out);
  return out;
}

std::string SweepToJson(const SweepTable& table,
                        const std::vector<std::string>& classes) {
  json rows = json::array();
  for (const HitsReport& r : table.reports) rows.push_back(ReportJson(r, classes));
  return json{{"grid", rows}}.dump(2) + "\n";
}

}  // namespace filtag
