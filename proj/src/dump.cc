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

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "byte_io.h"
#include "filtag/errors.h"
#include "filtag/ingest.h"
#include "json.hpp"

namespace filtag {
namespace {

using nlohmann::json;

constexpr size_t kRecordHeaderBytes = 4 + 2;

std::string ShardName(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%05zu.bin", index);
  return buf;
}

std::string Hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

void CheckNonNegative(const Tensor3& t, uint32_t image_id, uint32_t layer_id) {
  for (float v : t.values()) {
    if (v < 0.0f) {
      throw Error(ErrorCode::kNegativeActivation,
                  "image " + std::to_string(image_id) + " layer " +
                      std::to_string(layer_id) + ": negative activation " +
                      std::to_string(v));
    }
  }
}

json SchemaToJson(const DumpSchema& schema) {
  json layers = json::array();
  for (const LayerSchema& l : schema.layers) {
    layers.push_back({{"layer_id", l.layer_id},
                      {"filter_count", l.filter_count},
                      {"height", l.height},
                      {"width", l.width}});
  }
  return {{"model_name", schema.model_name},
          {"classes", schema.classes},
          {"layers", std::move(layers)}};
}

// Content id of a manifest: CRC32 of its canonical serialization without the
// id field itself.
std::string ComputeDumpId(json manifest) {
  manifest.erase("dump_id");
  return "dump-" + Hex32(internal::Crc32(manifest.dump()));
}

void ValidateSchema(const DumpSchema& schema) {
  for (size_t i = 0; i < schema.layers.size(); ++i) {
    const LayerSchema& l = schema.layers[i];
    if (l.layer_id > 0xffff) {
      throw Error(ErrorCode::kSchema, "layer_id " + std::to_string(l.layer_id) +
                                          " does not fit the u16 wire field");
    }
    if (i > 0 && l.layer_id <= schema.layers[i - 1].layer_id) {
      throw Error(ErrorCode::kSchema, "layers must have ascending unique ids");
    }
    if (l.shape().size() == 0) {
      throw Error(ErrorCode::kSchema,
                  "layer " + std::to_string(l.layer_id) + " has an empty shape");
    }
  }
}

}  // namespace

const LayerSchema* DumpSchema::FindLayer(uint32_t layer_id) const {
  auto it = std::lower_bound(
      layers.begin(), layers.end(), layer_id,
      [](const LayerSchema& l, uint32_t id) { return l.layer_id < id; });
  return it != layers.end() && it->layer_id == layer_id ? &*it : nullptr;
}

const ActivationRecord* ImageRecords::FindLayer(uint32_t layer_id) const {
  for (const ActivationRecord& r : layers) {
    if (r.layer_id == layer_id) return &r;
  }
  return nullptr;
}

DumpWriter::DumpWriter(std::filesystem::path dir, DumpSchema schema,
                       size_t records_per_shard)
    : dir_(std::move(dir)),
      schema_(std::move(schema)),
      records_per_shard_(std::max<size_t>(1, records_per_shard)) {
  ValidateSchema(schema_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create dump directory '" +
                                    dir_.string() + "': " + ec.message());
  }
}

DumpWriter::~DumpWriter() {
  if (shard_out_.is_open()) shard_out_.close();
}

void DumpWriter::Add(ActivationRecord record) {
  if (finished_) throw Error(ErrorCode::kUsage, "dump writer already finished");
  const LayerSchema* layer = schema_.FindLayer(record.layer_id);
  if (layer == nullptr) {
    throw Error(ErrorCode::kSchema,
                "record for image " + std::to_string(record.image_id) +
                    " names unknown layer " + std::to_string(record.layer_id));
  }
  if (record.feature_maps.shape() != layer->shape()) {
    throw Error(ErrorCode::kSchema,
                "image " + std::to_string(record.image_id) + " layer " +
                    std::to_string(record.layer_id) + ": shape " +
                    record.feature_maps.shape().ToString() +
                    " drifts from schema " + layer->shape().ToString());
  }
  if (record.class_label >= schema_.classes.size()) {
    throw Error(ErrorCode::kSchema,
                "image " + std::to_string(record.image_id) + ": class label " +
                    std::to_string(record.class_label) + " out of range");
  }
  CheckNonNegative(record.feature_maps, record.image_id, record.layer_id);
  if (!seen_.emplace(record.image_id, record.layer_id).second) {
    throw Error(ErrorCode::kDuplicateRecord,
                "duplicate record (image " + std::to_string(record.image_id) +
                    ", layer " + std::to_string(record.layer_id) + ")");
  }
  auto [it, inserted] = images_.try_emplace(record.image_id);
  if (inserted) {
    it->second.image_id = record.image_id;
    it->second.class_label = record.class_label;
  } else if (it->second.class_label != record.class_label) {
    throw Error(ErrorCode::kSchema,
                "image " + std::to_string(record.image_id) +
                    " has conflicting class labels across layers");
  }
  const uint32_t id = record.image_id;
  auto& pending = pending_[id];
  pending.push_back(std::move(record));
  if (pending.size() == schema_.layers.size()) FlushImage(id);
}

void DumpWriter::SetPrediction(uint32_t image_id, uint32_t predicted_label,
                               std::vector<float> probabilities) {
  auto it = images_.find(image_id);
  if (it == images_.end()) {
    throw Error(ErrorCode::kUsage, "prediction for unknown image " +
                                       std::to_string(image_id));
  }
  it->second.predicted_label = predicted_label;
  it->second.probabilities = std::move(probabilities);
}

void DumpWriter::FlushImage(uint32_t image_id) {
  auto node = pending_.extract(image_id);
  auto& records = node.mapped();
  std::sort(records.begin(), records.end(),
            [](const ActivationRecord& a, const ActivationRecord& b) {
              return a.layer_id < b.layer_id;
            });
  if (shard_out_.is_open() && shard_records_ >= records_per_shard_) {
    CloseShard();
  }
  if (!shard_out_.is_open()) {
    const std::string name = ShardName(shards_.size());
    shard_out_.open(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!shard_out_) {
      throw Error(ErrorCode::kIo, "cannot create shard '" + name + "'");
    }
    shards_.push_back(ShardInfo{name, 0, 0});
    shard_offset_ = 0;
    shard_records_ = 0;
    shard_crc_ = 0;
  }
  ImageEntry& entry = images_.at(image_id);
  entry.shard = shards_.back().file;
  entry.offset = shard_offset_;
  std::string bytes;
  for (const ActivationRecord& r : records) {
    internal::PutU32(bytes, r.image_id);
    internal::PutU16(bytes, static_cast<uint16_t>(r.layer_id));
    AppendTensorBlock(r.feature_maps, bytes);
  }
  shard_out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!shard_out_) throw Error(ErrorCode::kIo, "shard write failed");
  shard_crc_ = internal::Crc32Update(shard_crc_, bytes);
  shard_offset_ += bytes.size();
  shard_records_ += records.size();
  total_records_ += records.size();
}

void DumpWriter::CloseShard() {
  shard_out_.close();
  if (!shard_out_) throw Error(ErrorCode::kIo, "shard close failed");
  shards_.back().crc32 = shard_crc_;
  shards_.back().record_count = shard_records_;
}

DumpSummary DumpWriter::Finish() {
  if (finished_) throw Error(ErrorCode::kUsage, "dump writer already finished");
  // Incomplete images are still written; consumers detect the gap.
  while (!pending_.empty()) FlushImage(pending_.begin()->first);
  if (shard_out_.is_open()) CloseShard();
  finished_ = true;

  json images = json::array();
  for (const auto& [id, e] : images_) {
    json j = {{"image_id", e.image_id},
              {"class_label", e.class_label},
              {"shard", e.shard},
              {"offset", e.offset}};
    if (e.predicted_label) {
      j["predicted_label"] = *e.predicted_label;
      j["probabilities"] = e.probabilities;
    }
    images.push_back(std::move(j));
  }
  json shards = json::array();
  for (const ShardInfo& s : shards_) {
    shards.push_back({{"file", s.file},
                      {"crc32", s.crc32},
                      {"record_count", s.record_count}});
  }
  json manifest = SchemaToJson(schema_);
  manifest["format_version"] = kDumpFormatVersion;
  manifest["images"] = std::move(images);
  manifest["shards"] = std::move(shards);
  const std::string dump_id = ComputeDumpId(manifest);
  manifest["dump_id"] = dump_id;
  internal::WriteFileBytes((dir_ / kDumpManifestName).string(),
                           manifest.dump(2) + "\n");

  DumpSummary summary;
  summary.dump_id = dump_id;
  summary.image_count = images_.size();
  summary.layer_count = schema_.layers.size();
  summary.record_count = total_records_;
  summary.shards = shards_;
  return summary;
}

DumpSummary WriteDump(std::span<const ActivationRecord> records,
                      const std::filesystem::path& dir,
                      const DumpSchema& schema, size_t records_per_shard) {
  DumpWriter writer(dir, schema, records_per_shard);
  for (const ActivationRecord& r : records) writer.Add(r);
  return writer.Finish();
}

DumpReader DumpReader::Open(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / kDumpManifestName;
  json manifest;
  try {
    manifest = json::parse(internal::ReadFileBytes(manifest_path.string()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "dump manifest '" + manifest_path.string() +
                                       "': invalid JSON: " + e.what());
  }
  DumpReader reader;
  reader.dir_ = dir;
  try {
    if (manifest.value("format_version", -1) != kDumpFormatVersion) {
      throw Error(ErrorCode::kParse, "dump manifest: unsupported format_version");
    }
    reader.schema_.model_name = manifest.at("model_name").get<std::string>();
    reader.schema_.classes =
        manifest.at("classes").get<std::vector<std::string>>();
    for (const json& l : manifest.at("layers")) {
      reader.schema_.layers.push_back(LayerSchema{
          l.at("layer_id").get<uint32_t>(), l.at("filter_count").get<uint32_t>(),
          l.at("height").get<uint32_t>(), l.at("width").get<uint32_t>()});
    }
    ValidateSchema(reader.schema_);
    for (const json& s : manifest.at("shards")) {
      reader.shards_.push_back(ShardInfo{s.at("file").get<std::string>(),
                                         s.at("crc32").get<uint32_t>(),
                                         s.at("record_count").get<uint64_t>()});
    }
    for (const json& j : manifest.at("images")) {
      ImageEntry e;
      e.image_id = j.at("image_id").get<uint32_t>();
      e.class_label = j.at("class_label").get<uint32_t>();
      if (j.contains("predicted_label")) {
        e.predicted_label = j["predicted_label"].get<uint32_t>();
        e.probabilities = j.value("probabilities", std::vector<float>{});
      }
      e.shard = j.at("shard").get<std::string>();
      e.offset = j.at("offset").get<uint64_t>();
      if (e.class_label >= reader.schema_.classes.size()) {
        throw Error(ErrorCode::kParse, "dump manifest: image " +
                                           std::to_string(e.image_id) +
                                           " has out-of-range class label");
      }
      reader.images_.push_back(std::move(e));
    }
    reader.dump_id_ = manifest.value("dump_id", std::string());
    if (reader.dump_id_ != ComputeDumpId(manifest)) {
      throw Error(ErrorCode::kChecksum,
                  "dump manifest: dump_id does not match manifest content");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("dump manifest: ") + e.what());
  }

  std::sort(reader.images_.begin(), reader.images_.end(),
            [](const ImageEntry& a, const ImageEntry& b) {
              return a.image_id < b.image_id;
            });
  for (size_t i = 1; i < reader.images_.size(); ++i) {
    if (reader.images_[i].image_id == reader.images_[i - 1].image_id) {
      throw Error(ErrorCode::kParse, "dump manifest: duplicate image " +
                                         std::to_string(reader.images_[i].image_id));
    }
  }

  // Shard presence and checksums, streamed in fixed-size chunks.
  std::map<std::string, size_t> shard_index;
  std::vector<uint64_t> shard_sizes;
  for (size_t s = 0; s < reader.shards_.size(); ++s) {
    const ShardInfo& info = reader.shards_[s];
    shard_index[info.file] = s;
    const std::filesystem::path p = dir / info.file;
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::kMissingShard,
                  "dump shard '" + info.file + "' is missing");
    }
    uint32_t crc = 0;
    uint64_t size = 0;
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      const auto got = static_cast<size_t>(in.gcount());
      crc = internal::Crc32Update(crc, std::span<const char>(buf.data(), got));
      size += got;
    }
    if (crc != info.crc32) {
      throw Error(ErrorCode::kChecksum, "dump shard '" + info.file +
                                            "': checksum mismatch (manifest " +
                                            Hex32(info.crc32) + ", actual " +
                                            Hex32(crc) + ")");
    }
    shard_sizes.push_back(size);
  }

  // File order and per-image end offsets.
  for (size_t i = 0; i < reader.images_.size(); ++i) {
    const ImageEntry& e = reader.images_[i];
    if (!shard_index.contains(e.shard)) {
      throw Error(ErrorCode::kMissingShard,
                  "image " + std::to_string(e.image_id) +
                      " references unknown shard '" + e.shard + "'");
    }
    reader.file_order_.emplace_back(i, 0);
  }
  std::sort(reader.file_order_.begin(), reader.file_order_.end(),
            [&](const auto& a, const auto& b) {
              const ImageEntry& x = reader.images_[a.first];
              const ImageEntry& y = reader.images_[b.first];
              const size_t sx = shard_index[x.shard];
              const size_t sy = shard_index[y.shard];
              return sx != sy ? sx < sy : x.offset < y.offset;
            });
  for (size_t k = 0; k < reader.file_order_.size(); ++k) {
    const ImageEntry& e = reader.images_[reader.file_order_[k].first];
    uint64_t end = shard_sizes[shard_index[e.shard]];
    if (k + 1 < reader.file_order_.size()) {
      const ImageEntry& next = reader.images_[reader.file_order_[k + 1].first];
      if (next.shard == e.shard) end = next.offset;
    }
    if (e.offset > end) {
      throw Error(ErrorCode::kParse, "image " + std::to_string(e.image_id) +
                                         ": offset beyond shard end");
    }
    reader.file_order_[k].second = end;
    reader.end_offsets_[e.image_id] = end;
  }
  return reader;
}

const ImageEntry* DumpReader::FindImage(uint32_t image_id) const {
  auto it = std::lower_bound(
      images_.begin(), images_.end(), image_id,
      [](const ImageEntry& e, uint32_t id) { return e.image_id < id; });
  return it != images_.end() && it->image_id == image_id ? &*it : nullptr;
}

ImageRecords DumpReader::Load(const ImageEntry& entry, uint64_t end) const {
  const std::filesystem::path p = dir_ / entry.shard;
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingShard,
                "dump shard '" + entry.shard + "' is missing");
  }
  in.seekg(static_cast<std::streamoff>(entry.offset));
  std::string bytes(end - entry.offset, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorCode::kParse, "dump shard '" + entry.shard +
                                       "': truncated records for image " +
                                       std::to_string(entry.image_id));
  }
  ImageRecords out;
  out.image_id = entry.image_id;
  out.class_label = entry.class_label;
  internal::ByteReader reader(bytes, "dump shard '" + entry.shard + "'");
  while (reader.remaining() > 0) {
    reader.Need(kRecordHeaderBytes);
    ActivationRecord r;
    r.image_id = reader.U32();
    r.layer_id = reader.U16();
    r.class_label = entry.class_label;
    size_t used = 0;
    auto rest = std::span<const char>(bytes).subspan(reader.offset());
    r.feature_maps = ParseTensorBlock(rest, &used);
    reader.Take(used);
    if (r.image_id != entry.image_id) {
      throw Error(ErrorCode::kParse,
                  "dump shard '" + entry.shard + "': record for image " +
                      std::to_string(r.image_id) + " inside image " +
                      std::to_string(entry.image_id) + "'s span");
    }
    const LayerSchema* layer = schema_.FindLayer(r.layer_id);
    if (layer == nullptr || layer->shape() != r.feature_maps.shape()) {
      throw Error(ErrorCode::kParse,
                  "dump shard '" + entry.shard + "': image " +
                      std::to_string(r.image_id) + " layer " +
                      std::to_string(r.layer_id) + " does not match schema");
    }
    if (!out.layers.empty() && out.layers.back().layer_id >= r.layer_id) {
      throw Error(ErrorCode::kParse,
                  "dump shard '" + entry.shard + "': image " +
                      std::to_string(r.image_id) +
                      " layers not in ascending order");
    }
    CheckNonNegative(r.feature_maps, r.image_id, r.layer_id);
    out.layers.push_back(std::move(r));
  }
  size_t seen = peak_live_->load();
  while (seen < out.layers.size() &&
         !peak_live_->compare_exchange_weak(seen, out.layers.size())) {
  }
  return out;
}

bool DumpReader::Next(ImageRecords& out) {
  if (cursor_ >= file_order_.size()) return false;
  const auto& [index, end] = file_order_[cursor_++];
  out = Load(images_[index], end);
  return true;
}

ImageRecords DumpReader::ReadImage(uint32_t image_id) const {
  const ImageEntry* e = FindImage(image_id);
  if (e == nullptr) {
    throw Error(ErrorCode::kIndex,
                "image " + std::to_string(image_id) + " not in dump");
  }
  return Load(*e, end_offsets_.at(image_id));
}

std::vector<LabeledImage> LabeledImages(const DumpReader& reader) {
  std::vector<LabeledImage> out;
  out.reserve(reader.images().size());
  for (const ImageEntry& e : reader.images()) {
    out.push_back(LabeledImage{e.image_id, e.class_label});
  }
  return out;
}

}  // namespace filtag
