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

#ifndef FILTAG_IMAGE_SET_H_
#define FILTAG_IMAGE_SET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "filtag/infer.h"
#include "filtag/ingest.h"
#include "filtag/tensor.h"

namespace filtag {

struct LabeledTensor {
  uint32_t image_id = 0;
  std::string label;
  Tensor3 image;
};

inline constexpr char kImageManifestName[] = "images.json";

// images.json: {"images": [{"image_id", "label", "file"}]} next to one
// tensor file per image.
void WriteImageSet(const std::filesystem::path& dir,
                   const std::vector<LabeledTensor>& images);
// Throws kUsage naming the image when a label is missing or empty.
std::vector<LabeledTensor> ReadImageSet(const std::filesystem::path& dir);

// Dump class list: the model's classes first, then any other labels in
// lexicographic order.
std::vector<std::string> DumpClassesFor(const ModelSpec& model,
                                        const std::vector<LabeledTensor>& images);

// Runs the model over every image and writes all conv-layer feature maps,
// labels and predictions as a dump. Output bytes do not depend on `threads`.
DumpSummary DumpActivations(const ModelSpec& model,
                            const std::vector<LabeledTensor>& images,
                            const std::filesystem::path& dir, int threads = 1,
                            size_t records_per_shard = 4096);

}  // namespace filtag

#endif  // FILTAG_IMAGE_SET_H_
