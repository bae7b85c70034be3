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

#include "filtag/image_set.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "byte_io.h"
#include "filtag/errors.h"
#include "filtag/parallel.h"
#include "json.hpp"

namespace filtag {

using nlohmann::json;

void WriteImageSet(const std::filesystem::path& dir,
                   const std::vector<LabeledTensor>& images) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "'");
  }
  json list = json::array();
  for (const LabeledTensor& img : images) {
    char name[32];
    std::snprintf(name, sizeof(name), "img-%05u.ft3", img.image_id);
    SaveTensor(dir / name, img.image);
    list.push_back(
        {{"image_id", img.image_id}, {"label", img.label}, {"file", name}});
  }
  internal::WriteFileBytes((dir / kImageManifestName).string(),
                           json{{"images", list}}.dump(2) + "\n");
}

std::vector<LabeledTensor> ReadImageSet(const std::filesystem::path& dir) {
  const std::filesystem::path path = dir / kImageManifestName;
  json doc;
  try {
    doc = json::parse(internal::ReadFileBytes(path.string()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse,
                "image manifest '" + path.string() + "': " + e.what());
  }
  std::vector<LabeledTensor> out;
  std::set<uint32_t> ids;
  try {
    for (const json& j : doc.at("images")) {
      LabeledTensor img;
      img.image_id = j.at("image_id").get<uint32_t>();
      if (!j.contains("label") || !j["label"].is_string() ||
          j["label"].get<std::string>().empty()) {
        throw Error(ErrorCode::kUsage, "image " + std::to_string(img.image_id) +
                                           " has no label in '" +
                                           path.string() + "'");
      }
      if (!ids.insert(img.image_id).second) {
        throw Error(ErrorCode::kUsage, "image " + std::to_string(img.image_id) +
                                           " is listed twice");
      }
      img.label = j["label"].get<std::string>();
      img.image = LoadTensor(dir / j.at("file").get<std::string>());
      out.push_back(std::move(img));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse,
                "image manifest '" + path.string() + "': " + e.what());
  }
  return out;
}

std::vector<std::string> DumpClassesFor(const ModelSpec& model,
                                        const std::vector<LabeledTensor>& images) {
  std::vector<std::string> classes = model.class_names;
  std::set<std::string> extra;
  for (const LabeledTensor& img : images) {
    if (std::find(classes.begin(), classes.end(), img.label) == classes.end()) {
      extra.insert(img.label);
    }
  }
  classes.insert(classes.end(), extra.begin(), extra.end());
  return classes;
}

DumpSummary DumpActivations(const ModelSpec& model,
                            const std::vector<LabeledTensor>& images,
                            const std::filesystem::path& dir, int threads,
                            size_t records_per_shard) {
  const std::vector<Shape3> conv_shapes = model.ConvOutputShapes();
  DumpSchema schema;
  schema.model_name = model.name;
  schema.classes = DumpClassesFor(model, images);
  for (uint32_t m = 0; m < conv_shapes.size(); ++m) {
    schema.layers.push_back(LayerSchema{m, conv_shapes[m].channels,
                                        conv_shapes[m].height,
                                        conv_shapes[m].width});
  }
  std::map<std::string, uint32_t> class_ids;
  for (uint32_t c = 0; c < schema.classes.size(); ++c) {
    class_ids[schema.classes[c]] = c;
  }

  std::vector<const LabeledTensor*> ordered;
  for (const LabeledTensor& img : images) ordered.push_back(&img);
  std::sort(ordered.begin(), ordered.end(),
            [](const LabeledTensor* a, const LabeledTensor* b) {
              return a->image_id < b->image_id;
            });

  DumpWriter writer(dir, schema, records_per_shard);
  const size_t batch = static_cast<size_t>(std::max(threads, 1)) * 8;
  std::vector<ForwardTrace> traces;
  for (size_t start = 0; start < ordered.size(); start += batch) {
    const size_t count = std::min(batch, ordered.size() - start);
    traces.assign(count, {});
    ParallelFor(count, threads, [&](size_t i) {
      const LabeledTensor& img = *ordered[start + i];
      try {
        traces[i] = Forward(model, img.image);
      } catch (const Error& e) {
        throw Error(e.code(), "image " + std::to_string(img.image_id) + ": " +
                                  e.what());
      }
    });
    for (size_t i = 0; i < count; ++i) {
      const LabeledTensor& img = *ordered[start + i];
      const uint32_t label = class_ids.at(img.label);
      for (uint32_t m = 0; m < traces[i].conv_outputs.size(); ++m) {
        writer.Add(ActivationRecord{img.image_id, label, m,
                                    std::move(traces[i].conv_outputs[m])});
      }
      writer.SetPrediction(img.image_id, traces[i].predicted_class,
                           std::move(traces[i].probabilities));
    }
  }
  return writer.Finish();
}

}  // namespace filtag
