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

#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <map>

#include "../byte_io.h"
#include "filtag/edge_world.h"
#include "filtag/error_report.h"
#include "filtag/errors.h"
#include "filtag/evaluate.h"
#include "filtag/explain.h"
#include "filtag/image_set.h"
#include "filtag/infer.h"
#include "filtag/ingest.h"
#include "filtag/logging.h"
#include "filtag/tag_store.h"
#include "json.hpp"

namespace filtag::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDefaultSplitFraction = 0.8;

std::string Hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

fs::path EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());
  }
  return fs::path(dir);
}

uint64_t RequireSeed(const RunConfig& cfg) {
  if (!cfg.seed) {
    throw Error(ErrorCode::kUsage, cfg.subcommand + " performs a split and "
                                                    "needs --seed");
  }
  return *cfg.seed;
}

Stripe StripeFromName(const std::string& name) {
  for (Stripe s : {Stripe::kVertical, Stripe::kHorizontal, Stripe::kDiagonal,
                   Stripe::kAntiDiagonal}) {
    if (name == StripeName(s)) return s;
  }
  throw Error(ErrorCode::kUsage, "unknown stripe class '" + name + "'");
}

// Opens the dump and store and checks they describe the same layers.
struct DumpAndStore {
  DumpReader reader;
  TagStore store;
};

DumpAndStore OpenDumpAndStore(const RunConfig& cfg) {
  DumpAndStore ds{DumpReader::Open(cfg.dump), TagStore::Load(cfg.store)};
  CheckStoreMatchesDump(ds.reader, ds.store);
  return ds;
}

void WriteText(const fs::path& path, const std::string& text) {
  internal::WriteFileBytes(path.string(), text);
}

}  // namespace

SelectionMethod RunConfig::SingleMethod() const {
  if (!k.empty() && !q.empty()) {
    throw Error(ErrorCode::kUsage, "give either --k or --q, not both");
  }
  if (k.size() + q.size() != 1) {
    throw Error(ErrorCode::kUsage, "give exactly one of --k or --q");
  }
  try {
    return k.empty() ? SelectionMethod::QQuantile(q[0])
                     : SelectionMethod::KBest(k[0]);
  } catch (const Error& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
}

std::optional<SelectionMethod> RunConfig::OptionalMethod() const {
  if (k.empty() && q.empty()) return std::nullopt;
  return SingleMethod();
}

std::string RunConfig::CanonicalJson() const {
  json j = {{"subcommand", subcommand}, {"model", model},   {"images", images},
            {"dump", dump},             {"store", store},   {"k", k},
            {"q", q},                   {"n", n},           {"format", format},
            {"per_class", per_class},   {"classes", stripe_classes},
            {"label_noise", label_noise}, {"noise", noise},
            {"split_fraction", nullptr}, {"seed", nullptr}, {"image", nullptr}};
  if (split_fraction) j["split_fraction"] = *split_fraction;
  if (seed) j["seed"] = *seed;
  if (image) j["image"] = *image;
  return j.dump();
}

std::string RunConfig::ResolveOutDir() const {
  if (!out_dir.empty()) return out_dir;
  return (fs::path("runs") /
          (subcommand + "-" + Hex32(internal::Crc32(CanonicalJson()))))
      .string();
}

int CmdMakeEdgeWorld(const RunConfig& cfg, Streams io) {
  const fs::path out = EnsureDir(cfg.ResolveOutDir());
  std::vector<Stripe> classes;
  for (const std::string& name : cfg.stripe_classes) {
    classes.push_back(StripeFromName(name));
  }
  EdgeWorldOptions options;
  options.noise = cfg.noise;
  const ModelSpec model = MakeEdgeWorldModel(options);
  SaveModel(model, out / "model.json");
  const auto images = MakeEdgeWorldImages(classes, cfg.per_class,
                                          cfg.seed.value_or(0), options,
                                          cfg.label_noise);
  WriteImageSet(out / "images", images);
  io.out << "model: " << (out / "model.json").string() << "\n"
         << "images: " << (out / "images").string() << " (" << images.size()
         << " images)\n";
  return 0;
}

int CmdDumpActivations(const RunConfig& cfg, Streams io) {
  const ModelSpec model = LoadModel(cfg.model);
  const auto images = ReadImageSet(cfg.images);
  const std::string dir =
      cfg.dump.empty() ? (fs::path(cfg.ResolveOutDir()) / "dump").string()
                       : cfg.dump;
  const DumpSummary summary = DumpActivations(model, images, dir, cfg.threads);
  io.out << "dump " << summary.dump_id << " -> " << dir << "\n"
         << summary.image_count << " images x " << summary.layer_count
         << " layers, " << summary.record_count << " records in "
         << summary.shards.size() << " shard(s)\n";
  return 0;
}

int CmdTag(const RunConfig& cfg, Streams io) {
  const SelectionMethod method = cfg.SingleMethod();
  const uint64_t seed = RequireSeed(cfg);
  DumpReader reader = DumpReader::Open(cfg.dump);
  const DatasetSplit split =
      SplitDataset(LabeledImages(reader),
                   cfg.split_fraction.value_or(kDefaultSplitFraction), seed,
                   static_cast<uint32_t>(reader.schema().classes.size()));
  for (const std::string& w : split.warnings) io.err << "warning: " << w << "\n";
  const TagStore store = BuildTagStore(reader, split, method, cfg.threads);
  fs::path path;
  if (!cfg.store.empty()) {
    path = cfg.store;
    if (path.has_parent_path()) EnsureDir(path.parent_path().string());
  } else {
    path = EnsureDir(cfg.ResolveOutDir()) / "tagstore.json";
  }
  store.Save(path);

  io.out << "tag store (" << method.ToString() << ", seed " << seed
         << ", " << split.TaggingIds().size() << " tagging images) -> "
         << path.string() << "\n";
  bool all_full = true;
  const size_t num_classes = store.classes.size();
  for (const LayerTags& layer : store.layers) {
    size_t tagged = 0;
    size_t tags = 0;
    for (const FilterTags& f : layer.filters) {
      tagged += f.tags.empty() ? 0 : 1;
      tags += f.tags.size();
      all_full = all_full && f.tags.size() == split.tagging.size();
    }
    io.out << "layer " << layer.layer_id << ": " << layer.filters.size()
           << " filters, " << tagged << " tagged, " << tags << " tags\n";
  }
  if (all_full && split.tagging.size() == num_classes) {
    io.out << "every filter is tagged with every class\n";
  }
  return 0;
}

int CmdExplain(const RunConfig& cfg, Streams io) {
  auto [reader, store] = OpenDumpAndStore(cfg);
  const SelectionMethod selection = cfg.OptionalMethod().value_or(store.method);
  const ImageRecords records = reader.ReadImage(*cfg.image);
  const ImageEntry* entry = reader.FindImage(*cfg.image);
  const Explanation e = ExplainImage(
      entry->image_id, entry->class_label, entry->predicted_label,
      SelectActivatedFilters(records, reader.schema().layers, selection), store);
  const std::string json_text = ExplanationToJson(e, store.classes);
  if (cfg.format == "json") {
    io.out << json_text;
  } else {
    io.out << RenderExplanationText(e, store.classes);
    for (uint32_t n : cfg.n) {
      io.out << "Hits@" << n << ": " << (HitsAtN(e, n) ? "hit" : "miss") << "\n";
    }
  }
  if (!cfg.out_dir.empty()) {
    WriteText(EnsureDir(cfg.out_dir) /
                  ("explanation-" + std::to_string(e.image_id) + ".json"),
              json_text);
  }
  return 0;
}

int CmdEvaluate(const RunConfig& cfg, Streams io) {
  auto [reader, store] = OpenDumpAndStore(cfg);
  const SelectionMethod selection = cfg.OptionalMethod().value_or(store.method);
  const auto test_ids =
      ResolveTestImages(reader, store, cfg.seed, cfg.split_fraction);
  const HitsReport report =
      Evaluate(reader, store, test_ids, selection, cfg.n, cfg.threads);
  const fs::path out = EnsureDir(cfg.ResolveOutDir());
  const std::string json_text = HitsReportToJson(report, store.classes);
  const std::string csv_text = HitsReportToCsv(report, store.classes);
  WriteText(out / "hits_report.json", json_text);
  WriteText(out / "hits_report.csv", csv_text);
  if (cfg.format == "json") {
    io.out << json_text;
  } else if (cfg.format == "csv") {
    io.out << csv_text;
  } else {
    io.out << RenderHitsReportText(report, store.classes);
    io.out << "report -> " << (out / "hits_report.json").string() << "\n";
  }
  return 0;
}

int CmdSweep(const RunConfig& cfg, Streams io) {
  const uint64_t seed = RequireSeed(cfg);
  std::vector<SelectionMethod> grid;
  try {
    for (int64_t k : cfg.k) grid.push_back(SelectionMethod::KBest(k));
    for (double q : cfg.q) grid.push_back(SelectionMethod::QQuantile(q));
  } catch (const Error& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
  if (grid.empty()) throw Error(ErrorCode::kUsage, "sweep needs --k and/or --q values");
  DumpReader reader = DumpReader::Open(cfg.dump);
  const DatasetSplit split = SplitDataset(
      LabeledImages(reader), cfg.split_fraction.value_or(kDefaultSplitFraction),
      seed);
  const SweepTable table = Sweep(reader, split, grid, cfg.n, cfg.threads);
  const fs::path out = EnsureDir(cfg.ResolveOutDir());
  const auto& classes = reader.schema().classes;
  const std::string csv_text = SweepToCsv(table, classes);
  const std::string json_text = SweepToJson(table, classes);
  WriteText(out / "sweep.csv", csv_text);
  WriteText(out / "sweep.json", json_text);
  io.out << (cfg.format == "json" ? json_text : csv_text);
  return 0;
}

int CmdAnalyzeErrors(const RunConfig& cfg, Streams io) {
  auto [reader, store] = OpenDumpAndStore(cfg);
  const SelectionMethod selection = cfg.OptionalMethod().value_or(store.method);
  std::vector<uint32_t> ids;
  if (cfg.image) {
    ids.push_back(*cfg.image);
  } else {
    for (uint32_t id :
         ResolveTestImages(reader, store, cfg.seed, cfg.split_fraction)) {
      const ImageEntry* e = reader.FindImage(id);
      if (e->predicted_label && *e->predicted_label != e->class_label) {
        ids.push_back(id);
      }
    }
    CheckNotContaminated(reader, store, ids);
  }
  json reports = json::array();
  std::string text;
  for (uint32_t id : ids) {
    const ImageRecords records = reader.ReadImage(id);
    const ImageEntry* entry = reader.FindImage(id);
    const Explanation e = ExplainImage(
        id, entry->class_label, entry->predicted_label,
        SelectActivatedFilters(records, reader.schema().layers, selection),
        store);
    const ErrorReport report =
        BuildErrorReport(e, store, cfg.n, entry->probabilities);
    reports.push_back(json::parse(ErrorReportToJson(report, store.classes)));
    text += RenderErrorReportText(report, store.classes) + "\n";
  }
  const fs::path out = EnsureDir(cfg.ResolveOutDir());
  const std::string json_text = reports.dump(2) + "\n";
  WriteText(out / "error_reports.json", json_text);
  WriteText(out / "error_reports.txt", text);
  if (cfg.format == "json") {
    io.out << json_text;
  } else {
    io.out << text << ids.size() << " misclassified image(s) reported -> "
           << (out / "error_reports.json").string() << "\n";
  }
  return 0;
}

}  // namespace filtag::cli
