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

#include "filtag/edge_world.h"
#include "filtag/errors.h"
#include "filtag/infer.h"
#include "json.hpp"
#include "oracles.h"

namespace filtag {
namespace {

using nlohmann::json;
using testing::ReadAll;
using testing::TempDir;

void WriteString(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

ErrorCode LoadError(const std::filesystem::path& p, std::string* what) {
  try {
    LoadModel(p);
  } catch (const Error& e) {
    *what = e.what();
    return e.code();
  }
  ADD_FAILURE() << "load succeeded";
  return ErrorCode::kUsage;
}

TEST(ModelIo, EdgeModelRoundTrip) {
  TempDir dir("model");
  ModelSpec m = MakeEdgeWorldModel();
  SaveModel(m, dir / "edge.json");
  EXPECT_TRUE(std::filesystem::exists(dir / "edge.weights"));
  ModelSpec back = LoadModel(dir / "edge.json");
  EXPECT_EQ(back, m);
  SaveModel(back, dir / "again.json");
  EXPECT_EQ(ReadAll(dir / "edge.weights"), ReadAll(dir / "again.weights"));
}

TEST(ModelIo, UnknownLayerKindIsNamed) {
  TempDir dir("model");
  SaveModel(MakeEdgeWorldModel(), dir / "m.json");
  json j = json::parse(ReadAll(dir / "m.json"));
  j["layers"][1]["kind"] = "batchnorm";
  WriteString(dir / "m.json", j.dump());
  std::string what;
  EXPECT_EQ(LoadError(dir / "m.json", &what), ErrorCode::kParse);
  EXPECT_NE(what.find("batchnorm"), std::string::npos) << what;
}

TEST(ModelIo, WeightCountMismatch) {
  TempDir dir("model");
  SaveModel(MakeEdgeWorldModel(), dir / "m.json");
  json j = json::parse(ReadAll(dir / "m.json"));
  for (auto& layer : j["layers"]) {
    if (layer["kind"] == "conv") {
      layer["weights"]["blocks"] = layer["weights"]["blocks"].get<int>() - 1;
    }
  }
  WriteString(dir / "m.json", j.dump());
  std::string what;
  EXPECT_EQ(LoadError(dir / "m.json", &what), ErrorCode::kParse);
}

TEST(ModelIo, TruncatedWeights) {
  TempDir dir("model");
  SaveModel(MakeEdgeWorldModel(), dir / "m.json");
  std::string w = ReadAll(dir / "m.weights");
  WriteString(dir / "m.weights", w.substr(0, w.size() - 8));
  std::string what;
  const ErrorCode code = LoadError(dir / "m.json", &what);
  EXPECT_TRUE(code == ErrorCode::kParse || code == ErrorCode::kChecksum) << what;
}

TEST(ModelIo, CorruptWeightsFailChecksum) {
  TempDir dir("model");
  SaveModel(MakeEdgeWorldModel(), dir / "m.json");
  std::string w = ReadAll(dir / "m.weights");
  w[w.size() / 2] ^= 0x10;
  WriteString(dir / "m.weights", w);
  std::string what;
  EXPECT_EQ(LoadError(dir / "m.json", &what), ErrorCode::kChecksum);
}

TEST(ModelIo, DeclaredShapeMustMatch) {
  TempDir dir("model");
  SaveModel(MakeEdgeWorldModel(), dir / "m.json");
  json j = json::parse(ReadAll(dir / "m.json"));
  j["layers"][0]["output_shape"] = {2, 9, 9};
  WriteString(dir / "m.json", j.dump());
  std::string what;
  EXPECT_EQ(LoadError(dir / "m.json", &what), ErrorCode::kParse);
}

}  // namespace
}  // namespace filtag
