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

#ifndef FILTAG_TESTS_EDGE_FIXTURE_H_
#define FILTAG_TESTS_EDGE_FIXTURE_H_

#include <memory>
#include <vector>

#include "filtag/edge_world.h"
#include "filtag/image_set.h"
#include "filtag/infer.h"
#include "filtag/ingest.h"
#include "filtag/tag_store.h"
#include "oracles.h"

namespace filtag::testing {

inline constexpr uint64_t kEdgeSplitSeed = 7;

// A generated stripe dataset pushed through the edge-detector model.
struct EdgeWorld {
  std::unique_ptr<TempDir> dir;
  ModelSpec model;
  std::vector<LabeledTensor> images;
  std::filesystem::path dump_dir;
  DumpSummary summary;

  DumpReader Open() const { return DumpReader::Open(dump_dir); }
  uint32_t ClassId(const std::string& name) const {
    DumpReader r = Open();
    const auto& c = r.schema().classes;
    return static_cast<uint32_t>(std::find(c.begin(), c.end(), name) - c.begin());
  }
};

inline EdgeWorld MakeEdgeWorld(std::vector<Stripe> classes,
                               uint32_t per_class = 40, uint64_t seed = 1,
                               double label_noise = 0.0, int threads = 1) {
  EdgeWorld w;
  w.dir = std::make_unique<TempDir>("edge");
  w.model = MakeEdgeWorldModel();
  w.images = MakeEdgeWorldImages(classes, per_class, seed, {}, label_noise);
  w.dump_dir = *w.dir / "dump";
  w.summary = DumpActivations(w.model, w.images, w.dump_dir, threads);
  return w;
}

inline DatasetSplit EdgeSplit(const DumpReader& reader,
                              uint64_t seed = kEdgeSplitSeed) {
  return SplitDataset(LabeledImages(reader), 0.8, seed,
                      static_cast<uint32_t>(reader.schema().classes.size()));
}

}  // namespace filtag::testing

#endif  // FILTAG_TESTS_EDGE_FIXTURE_H_
