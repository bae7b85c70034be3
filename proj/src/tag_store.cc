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

#include "filtag/tag_store.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <map>
#include <set>

#include "byte_io.h"
#include "filtag/errors.h"
#include "filtag/parallel.h"
#include "json.hpp"

namespace filtag {
namespace {

using nlohmann::json;

// The f32 value as the double nearest its shortest round-trip decimal, so the
// JSON writer emits that short decimal.
double ShortestF32(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf) - 1, v);
  *res.ptr = '\0';
  return std::strtod(buf, nullptr);
}

}  // namespace

const LayerTags* TagStore::FindLayer(uint32_t layer_id) const {
  for (const LayerTags& l : layers) {
    if (l.layer_id == layer_id) return &l;
  }
  return nullptr;
}

const FilterTags* TagStore::Find(const FilterKey& key) const {
  const LayerTags* layer = FindLayer(key.layer_id);
  if (layer == nullptr || key.filter_index >= layer->filters.size()) {
    return nullptr;
  }
  return &layer->filters[key.filter_index];
}

std::vector<FilterKey> TagStore::FiltersTaggedWith(uint32_t class_id) const {
  std::vector<FilterKey> out;
  for (const LayerTags& l : layers) {
    for (const FilterTags& f : l.filters) {
      for (const Tag& t : f.tags) {
        if (t.class_id == class_id) {
          out.push_back(FilterKey{l.layer_id, f.filter_index});
          break;
        }
      }
    }
  }
  return out;
}

size_t TagStore::TagCount() const {
  size_t n = 0;
  for (const LayerTags& l : layers) {
    for (const FilterTags& f : l.filters) n += f.tags.size();
  }
  return n;
}

std::string TagStore::ToJson() const {
  json j_method = {{"kind", method.KindName()}};
  if (method.kind == SelectionMethod::Kind::kKBest) {
    j_method["k"] = method.k;
  } else {
    j_method["q"] = method.q;
  }
  json j_layers = json::array();
  for (const LayerTags& l : layers) {
    json filters = json::array();
    for (const FilterTags& f : l.filters) {
      json tags = json::array();
      for (const Tag& t : f.tags) {
        tags.push_back({{"class", classes.at(t.class_id)},
                        {"score", ShortestF32(t.score)}});
      }
      filters.push_back(
          {{"filter_index", f.filter_index}, {"tags", std::move(tags)}});
    }
    j_layers.push_back({{"layer_id", l.layer_id},
                        {"filter_count", l.filters.size()},
                        {"filters", std::move(filters)}});
  }
  const json doc = {
      {"format_version", kTagStoreFormatVersion},
      {"method", std::move(j_method)},
      {"provenance",
       {{"dump_id", provenance.dump_id},
        {"seed", provenance.seed},
        {"split_fraction", provenance.split_fraction},
        {"model_name", provenance.model_name}}},
      {"classes", classes},
      {"layers", std::move(j_layers)},
  };
  return doc.dump(2) + "\n";
}

TagStore TagStore::FromJson(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format_version", -1) != kTagStoreFormatVersion) {
      throw Error(ErrorCode::kParse, "tag store: unsupported format_version");
    }
    TagStore store;
    const json& m = doc.at("method");
    const std::string kind = m.at("kind").get<std::string>();
    if (kind == "k_best") {
      store.method = SelectionMethod::KBest(m.at("k").get<int64_t>());
    } else if (kind == "q_quantile") {
      store.method = SelectionMethod::QQuantile(m.at("q").get<double>());
    } else {
      throw Error(ErrorCode::kParse, "tag store: unknown method '" + kind + "'");
    }
    const json& p = doc.at("provenance");
    store.provenance.dump_id = p.at("dump_id").get<std::string>();
    store.provenance.seed = p.at("seed").get<uint64_t>();
    store.provenance.split_fraction = p.value("split_fraction", 0.8);
    store.provenance.model_name = p.at("model_name").get<std::string>();
    store.classes = doc.at("classes").get<std::vector<std::string>>();
    std::map<std::string, uint32_t> class_ids;
    for (uint32_t c = 0; c < store.classes.size(); ++c) {
      if (!class_ids.emplace(store.classes[c], c).second) {
        throw Error(ErrorCode::kParse,
                    "tag store: duplicate class '" + store.classes[c] + "'");
      }
    }
    for (const json& jl : doc.at("layers")) {
      LayerTags layer;
      layer.layer_id = jl.at("layer_id").get<uint32_t>();
      const auto filter_count = jl.at("filter_count").get<uint32_t>();
      layer.filters.resize(filter_count);
      for (uint32_t i = 0; i < filter_count; ++i) layer.filters[i].filter_index = i;
      for (const json& jf : jl.at("filters")) {
        const auto index = jf.at("filter_index").get<uint32_t>();
        if (index >= filter_count) {
          throw Error(ErrorCode::kParse,
                      "tag store: filter " + std::to_string(index) +
                          " out of range in layer " +
                          std::to_string(layer.layer_id));
        }
        for (const json& jt : jf.at("tags")) {
          const std::string name = jt.at("class").get<std::string>();
          auto it = class_ids.find(name);
          if (it == class_ids.end()) {
            throw Error(ErrorCode::kParse,
                        "tag store: tag names unknown class '" + name + "'");
          }
          layer.filters[index].tags.push_back(
              Tag{it->second, static_cast<float>(jt.at("score").get<double>())});
        }
      }
      store.layers.push_back(std::move(layer));
    }
    return store;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("tag store: ") + e.what());
  }
}

void TagStore::Save(const std::filesystem::path& path) const {
  internal::WriteFileBytes(path.string(), ToJson());
}

TagStore TagStore::Load(const std::filesystem::path& path) {
  return FromJson(internal::ReadFileBytes(path.string()));
}

TagStore BuildTagStoreFromMatrices(
    const std::vector<ClassActivationMatrix>& matrices,
    const SelectionMethod& method, const std::vector<LayerSchema>& layers,
    std::vector<std::string> classes, Provenance provenance) {
  TagStore store;
  store.method = method;
  store.provenance = std::move(provenance);
  store.classes = std::move(classes);
  for (const LayerSchema& schema : layers) {
    LayerTags lt;
    lt.layer_id = schema.layer_id;
    lt.filters.resize(schema.filter_count);
    for (uint32_t i = 0; i < schema.filter_count; ++i) lt.filters[i].filter_index = i;
    const auto m = std::find_if(
        matrices.begin(), matrices.end(),
        [&](const ClassActivationMatrix& x) { return x.layer_id == schema.layer_id; });
    if (m != matrices.end()) {
      if (m->filter_count != schema.filter_count) {
        throw Error(ErrorCode::kSchema, "class-mean matrix for layer " +
                                            std::to_string(schema.layer_id) +
                                            " has the wrong filter count");
      }
      const auto selection = Select(*m, method);
      for (size_t r = 0; r < m->class_ids.size(); ++r) {
        for (uint32_t filter : selection[r]) {
          lt.filters[filter].tags.push_back(
              Tag{m->class_ids[r], static_cast<float>(m->at(r, filter))});
        }
      }
    }
    for (FilterTags& f : lt.filters) {
      std::sort(f.tags.begin(), f.tags.end(), [](const Tag& a, const Tag& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.class_id < b.class_id;
      });
    }
    store.layers.push_back(std::move(lt));
  }
  return store;
}

std::vector<ClassActivationMatrix> ComputeClassMeans(
    DumpReader& reader, const std::vector<uint32_t>& image_ids, int threads) {
  const DumpSchema& schema = reader.schema();
  const std::set<uint32_t> wanted(image_ids.begin(), image_ids.end());
  for (uint32_t id : wanted) {
    if (reader.FindImage(id) == nullptr) {
      throw Error(ErrorCode::kIncompleteDump,
                  "image " + std::to_string(id) + " is missing from the dump");
    }
  }
  ClassMeanAccumulator acc(schema.layers);
  const size_t batch_size = static_cast<size_t>(std::max(threads, 1));
  std::vector<ImageRecords> batch;
  std::vector<std::vector<LayerActivationSums>> scores;
  auto flush = [&] {
    scores.assign(batch.size(), {});
    ParallelFor(batch.size(), threads, [&](size_t b) {
      const ImageRecords& img = batch[b];
      auto& out = scores[b];
      for (const LayerSchema& layer : schema.layers) {
        const ActivationRecord* rec = img.FindLayer(layer.layer_id);
        if (rec == nullptr) {
          throw Error(ErrorCode::kIncompleteDump,
                      "image " + std::to_string(img.image_id) +
                          " has no records for layer " +
                          std::to_string(layer.layer_id));
        }
        out.push_back(LayerFilterSums(rec->feature_maps));
      }
    });
    for (size_t b = 0; b < batch.size(); ++b) {
      for (size_t li = 0; li < schema.layers.size(); ++li) {
        acc.AddImageLayer(batch[b].class_label, schema.layers[li].layer_id,
                          scores[b][li]);
      }
    }
    batch.clear();
  };
  reader.Rewind();
  ImageRecords img;
  while (reader.Next(img)) {
    if (!wanted.contains(img.image_id)) continue;
    batch.push_back(std::move(img));
    if (batch.size() >= batch_size) flush();
  }
  flush();
  reader.Rewind();
  return acc.Finish();
}

TagStore BuildTagStore(DumpReader& reader, const DatasetSplit& split,
                       const SelectionMethod& method, int threads) {
  const auto matrices = ComputeClassMeans(reader, split.TaggingIds(), threads);
  return BuildTagStoreFromMatrices(
      matrices, method, reader.schema().layers, reader.schema().classes,
      Provenance{reader.dump_id(), split.seed, split.fraction,
                 reader.schema().model_name});
}

}  // namespace filtag
