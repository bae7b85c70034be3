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

#ifndef FILTAG_INGEST_H_
#define FILTAG_INGEST_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "filtag/tensor.h"

namespace filtag {

// One image's feature maps at one conv layer (channels = filter count).
struct ActivationRecord {
  uint32_t image_id = 0;
  uint32_t class_label = 0;
  uint32_t layer_id = 0;
  Tensor3 feature_maps;

  friend bool operator==(const ActivationRecord&,
                         const ActivationRecord&) = default;
};

struct LayerSchema {
  uint32_t layer_id = 0;
  uint32_t filter_count = 0;
  uint32_t height = 0;
  uint32_t width = 0;

  Shape3 shape() const { return Shape3{filter_count, height, width}; }
  friend bool operator==(const LayerSchema&, const LayerSchema&) = default;
};

struct DumpSchema {
  std::string model_name;
  std::vector<std::string> classes;
  // Ascending layer_id.
  std::vector<LayerSchema> layers;

  const LayerSchema* FindLayer(uint32_t layer_id) const;
  friend bool operator==(const DumpSchema&, const DumpSchema&) = default;
};

struct ImageEntry {
  uint32_t image_id = 0;
  uint32_t class_label = 0;
  // Present when the dump was produced by running a model.
  std::optional<uint32_t> predicted_label;
  std::vector<float> probabilities;
  std::string shard;
  uint64_t offset = 0;
};

struct ShardInfo {
  std::string file;
  uint32_t crc32 = 0;
  uint64_t record_count = 0;
};

struct DumpSummary {
  std::string dump_id;
  size_t image_count = 0;
  size_t layer_count = 0;
  size_t record_count = 0;
  std::vector<ShardInfo> shards;
};

inline constexpr int kDumpFormatVersion = 1;
inline constexpr char kDumpManifestName[] = "manifest.json";

// Writes a dump directory: manifest.json plus shard files. Records may arrive
// in any order; each image's records are written contiguously, sorted by
// layer, once all of its layers have arrived (or at Finish).
class DumpWriter {
 public:
  DumpWriter(std::filesystem::path dir, DumpSchema schema,
             size_t records_per_shard = 4096);
  ~DumpWriter();

  DumpWriter(const DumpWriter&) = delete;
  DumpWriter& operator=(const DumpWriter&) = delete;

  // Throws kDuplicateRecord, kSchema (unknown layer, shape drift, label
  // conflict) or kNegativeActivation.
  void Add(ActivationRecord record);
  void SetPrediction(uint32_t image_id, uint32_t predicted_label,
                     std::vector<float> probabilities);
  DumpSummary Finish();

 private:
  void FlushImage(uint32_t image_id);
  void CloseShard();

  std::filesystem::path dir_;
  DumpSchema schema_;
  size_t records_per_shard_;
  std::set<std::pair<uint32_t, uint32_t>> seen_;
  std::map<uint32_t, std::vector<ActivationRecord>> pending_;
  std::map<uint32_t, ImageEntry> images_;
  std::vector<ShardInfo> shards_;
  std::ofstream shard_out_;
  uint64_t shard_offset_ = 0;
  uint64_t shard_records_ = 0;
  uint32_t shard_crc_ = 0;
  size_t total_records_ = 0;
  bool finished_ = false;
};

DumpSummary WriteDump(std::span<const ActivationRecord> records,
                      const std::filesystem::path& dir,
                      const DumpSchema& schema,
                      size_t records_per_shard = 4096);

// All layers of one image, ascending layer_id.
struct ImageRecords {
  uint32_t image_id = 0;
  uint32_t class_label = 0;
  std::vector<ActivationRecord> layers;

  const ActivationRecord* FindLayer(uint32_t layer_id) const;
};

// Streaming reader. Open() validates the manifest, the presence of every
// shard and the shard checksums; records are decoded lazily one image at a
// time.
class DumpReader {
 public:
  // Throws kParse, kMissingShard or kChecksum.
  static DumpReader Open(const std::filesystem::path& dir);

  const DumpSchema& schema() const { return schema_; }
  const std::string& dump_id() const { return dump_id_; }
  // Sorted by image_id.
  const std::vector<ImageEntry>& images() const { return images_; }
  const ImageEntry* FindImage(uint32_t image_id) const;

  // Next image in file order; false at the end. Throws kNegativeActivation or
  // kParse on bad records.
  bool Next(ImageRecords& out);
  void Rewind() { cursor_ = 0; }
  // Random access by id; throws kIndex when absent.
  ImageRecords ReadImage(uint32_t image_id) const;

  // Largest number of records held by one Next()/ReadImage() result so far.
  size_t peak_live_records() const { return peak_live_->load(); }

 private:
  ImageRecords Load(const ImageEntry& entry, uint64_t end) const;

  std::filesystem::path dir_;
  DumpSchema schema_;
  std::string dump_id_;
  std::vector<ImageEntry> images_;
  std::vector<ShardInfo> shards_;
  // Indices into images_ in (shard, offset) order, with each image's end
  // offset inside its shard.
  std::vector<std::pair<size_t, uint64_t>> file_order_;
  std::map<uint32_t, uint64_t> end_offsets_;
  size_t cursor_ = 0;
  std::unique_ptr<std::atomic<size_t>> peak_live_ =
      std::make_unique<std::atomic<size_t>>(0);
};

struct LabeledImage {
  uint32_t image_id = 0;
  uint32_t class_label = 0;
};

// Per-class stratified holdout split.
struct DatasetSplit {
  double fraction = 0.8;
  uint64_t seed = 0;
  // class -> image ids, each list ascending.
  std::map<uint32_t, std::vector<uint32_t>> tagging;
  std::map<uint32_t, std::vector<uint32_t>> test;
  std::vector<std::string> warnings;

  std::vector<uint32_t> TaggingIds() const;
  std::vector<uint32_t> TestIds() const;
  bool IsTagging(uint32_t image_id) const;
  bool IsTest(uint32_t image_id) const;
};

// Tagging count per class is round-half-up(fraction * n_c), clamped to
// [1, n_c - 1] when n_c >= 2; a single-image class goes to tagging with a
// warning. Classes in [0, num_classes) without images are reported as
// warnings. Throws kDomain for fraction outside (0, 1) and kData for a
// duplicated image id.
DatasetSplit SplitDataset(std::span<const LabeledImage> images,
                          double fraction, uint64_t seed,
                          uint32_t num_classes = 0);

std::vector<LabeledImage> LabeledImages(const DumpReader& reader);

}  // namespace filtag

#endif  // FILTAG_INGEST_H_
