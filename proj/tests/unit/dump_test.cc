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

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "filtag/errors.h"
#include "filtag/ingest.h"
#include "json.hpp"
#include "oracles.h"

namespace filtag {
namespace {

using testing::RandomTensor;
using testing::ReadAll;
using testing::TempDir;

DumpSchema TwoLayerSchema() {
  return DumpSchema{"m", {"a", "b", "c"}, {{0, 3, 4, 4}, {1, 2, 2, 2}}};
}

std::vector<ActivationRecord> RandomRecords(std::mt19937_64& rng,
                                            const DumpSchema& schema,
                                            uint32_t images) {
  std::vector<ActivationRecord> out;
  for (uint32_t i = 0; i < images; ++i) {
    for (const LayerSchema& l : schema.layers) {
      out.push_back({i * 7 + 2, i % 3, l.layer_id,
                     RandomTensor(rng, l.shape(), 0.0f, 3.0f)});
    }
  }
  return out;
}

std::vector<ActivationRecord> ReadAllRecords(DumpReader& reader) {
  std::vector<ActivationRecord> out;
  ImageRecords img;
  while (reader.Next(img)) {
    for (auto& r : img.layers) out.push_back(r);
  }
  return out;
}

auto Key(const ActivationRecord& r) {
  return std::make_pair(r.image_id, r.layer_id);
}

TEST(Dump, SingleRecordManifest) {
  TempDir dir("dump");
  DumpSchema schema{"m", {"a"}, {{0, 2, 3, 3}}};
  std::mt19937_64 rng(1);
  ActivationRecord r{5, 0, 0, RandomTensor(rng, Shape3{2, 3, 3}, 0, 1)};
  DumpSummary s = WriteDump(std::span(&r, 1), dir.path(), schema);
  EXPECT_EQ(s.image_count, 1u);
  EXPECT_EQ(s.layer_count, 1u);
  DumpReader reader = DumpReader::Open(dir.path());
  ASSERT_EQ(reader.images().size(), 1u);
  EXPECT_EQ(reader.schema(), schema);
  EXPECT_EQ(reader.schema().layers[0].shape(), (Shape3{2, 3, 3}));
  EXPECT_EQ(reader.dump_id(), s.dump_id);
}

TEST(Dump, RoundTripMultiset) {
  TempDir dir("dump");
  std::mt19937_64 rng(2);
  const DumpSchema schema = TwoLayerSchema();
  auto records = RandomRecords(rng, schema, 50);  // 100 records
  auto shuffled = records;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  WriteDump(shuffled, dir.path(), schema, 7);
  DumpReader reader = DumpReader::Open(dir.path());
  auto back = ReadAllRecords(reader);
  auto by_key = [](const ActivationRecord& a, const ActivationRecord& b) {
    return Key(a) < Key(b);
  };
  std::sort(records.begin(), records.end(), by_key);
  std::sort(back.begin(), back.end(), by_key);
  EXPECT_EQ(back, records);
  EXPECT_LE(reader.peak_live_records(), schema.layers.size());
}

TEST(Dump, DuplicateRecord) {
  TempDir dir("dump");
  std::mt19937_64 rng(3);
  DumpSchema schema{"m", {"a"}, {{0, 1, 2, 2}}};
  DumpWriter w(dir.path(), schema);
  ActivationRecord r{1, 0, 0, RandomTensor(rng, Shape3{1, 2, 2}, 0, 1)};
  w.Add(r);
  try {
    w.Add(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateRecord);
  }
}

TEST(Dump, RejectsNegativeAndWrongShape) {
  TempDir dir("dump");
  DumpSchema schema{"m", {"a"}, {{0, 1, 1, 2}}};
  DumpWriter w(dir.path(), schema);
  try {
    w.Add({1, 0, 0, Tensor3(Shape3{1, 1, 2}, {0.5f, -0.1f})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNegativeActivation);
  }
  try {
    w.Add({1, 0, 0, Tensor3(Shape3{1, 2, 1}, {0.5f, 0.1f})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
  }
}

TEST(Dump, EmptyDump) {
  TempDir dir("dump");
  WriteDump({}, dir.path(), DumpSchema{"m", {"a"}, {{0, 1, 1, 1}}});
  DumpReader reader = DumpReader::Open(dir.path());
  EXPECT_TRUE(reader.images().empty());
  ImageRecords img;
  EXPECT_FALSE(reader.Next(img));
}

TEST(Dump, CorruptedShardNamed) {
  TempDir dir("dump");
  std::mt19937_64 rng(4);
  const DumpSchema schema = TwoLayerSchema();
  WriteDump(RandomRecords(rng, schema, 10), dir.path(), schema, 8);
  const auto shard = dir / "shard-00001.bin";
  ASSERT_TRUE(std::filesystem::exists(shard));
  std::string bytes = ReadAll(shard);
  bytes[bytes.size() / 2] ^= 0x01;
  std::ofstream(shard, std::ios::binary) << bytes;
  try {
    DumpReader::Open(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChecksum);
    EXPECT_NE(std::string(e.what()).find("shard-00001.bin"), std::string::npos);
  }
}

TEST(Dump, MissingShard) {
  TempDir dir("dump");
  std::mt19937_64 rng(5);
  const DumpSchema schema = TwoLayerSchema();
  WriteDump(RandomRecords(rng, schema, 4), dir.path(), schema);
  std::filesystem::remove(dir / "shard-00000.bin");
  try {
    DumpReader::Open(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingShard);
  }
}

TEST(Dump, EditedManifestFailsIdentity) {
  TempDir dir("dump");
  std::mt19937_64 rng(6);
  const DumpSchema schema = TwoLayerSchema();
  WriteDump(RandomRecords(rng, schema, 4), dir.path(), schema);
  auto j = nlohmann::json::parse(ReadAll(dir / "manifest.json"));
  j["images"][0]["class_label"] = 2;
  std::ofstream(dir / "manifest.json") << j.dump();
  EXPECT_THROW(DumpReader::Open(dir.path()), Error);
}

TEST(Dump, DeterministicBytes) {
  std::mt19937_64 rng(7);
  const DumpSchema schema = TwoLayerSchema();
  auto records = RandomRecords(rng, schema, 12);
  TempDir a("dump"), b("dump");
  WriteDump(records, a.path(), schema, 5);
  WriteDump(records, b.path(), schema, 5);
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(ReadAll(entry.path()), ReadAll(b / name)) << name;
  }
}

TEST(Dump, RandomAccessMatchesStream) {
  TempDir dir("dump");
  std::mt19937_64 rng(8);
  const DumpSchema schema = TwoLayerSchema();
  WriteDump(RandomRecords(rng, schema, 9), dir.path(), schema, 4);
  DumpReader reader = DumpReader::Open(dir.path());
  ImageRecords img;
  while (reader.Next(img)) {
    ImageRecords direct = reader.ReadImage(img.image_id);
    EXPECT_EQ(direct.layers, img.layers);
    EXPECT_EQ(direct.class_label, img.class_label);
  }
  EXPECT_THROW(reader.ReadImage(1000), Error);
}

}  // namespace
}  // namespace filtag
