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

#include "filtag/cli.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "filtag/explain.h"
#include "filtag/image_set.h"
#include "filtag/infer.h"
#include "filtag/ingest.h"
#include "filtag/tag_store.h"
#include "json.hpp"
#include "oracles.h"

namespace filtag {
namespace {

using nlohmann::json;
using testing::ReadAll;
using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result RunCmd(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string P(const std::filesystem::path& p) { return p.string(); }

// Builds a two-class stripe world, its dump and a k=1 store with the CLI.
class CliWorld : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(RunCmd({"make-edge-world", "--out", P(dir_.path()), "--seed", "1"}).code, 0);
    auto r = RunCmd({"dump-activations", "--model", P(dir_ / "model.json"), "--images",
                  P(dir_ / "images"), "--dump", P(dir_ / "dump")});
    ASSERT_EQ(r.code, 0) << r.err;
    r = RunCmd({"tag", "--dump", P(dir_ / "dump"), "--k", "1", "--seed", "7", "--store",
             P(dir_ / "store.json")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  TempDir dir_{"cli"};
};

TEST_F(CliWorld, TagStoreMatchesEdgeDesign) {
  TagStore s = TagStore::Load(dir_ / "store.json");
  ASSERT_EQ(s.classes, (std::vector<std::string>{"vertical", "horizontal"}));
  EXPECT_EQ(s.Find({0, 0})->tags.size(), 1u);
  EXPECT_EQ(s.Find({0, 0})->tags[0].class_id, 0u);
  EXPECT_EQ(s.Find({0, 1})->tags[0].class_id, 1u);
}

TEST_F(CliWorld, FullQuantileSummary) {
  auto r = RunCmd({"tag", "--dump", P(dir_ / "dump"), "--q", "1.0", "--seed", "7", "--store",
                P(dir_ / "q.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("every filter is tagged with every class"), std::string::npos) << r.out;
}

TEST_F(CliWorld, UsageErrors) {
  EXPECT_EQ(RunCmd({"tag", "--dump", P(dir_ / "dump"), "--k", "1", "--q", "0.5", "--seed", "1"}).code,
            kExitUsage);
  EXPECT_EQ(RunCmd({"tag", "--dump", P(dir_ / "dump"), "--k", "1"}).code, kExitUsage);
  EXPECT_EQ(RunCmd({"tag", "--dump", P(dir_ / "dump"), "--k", "0", "--seed", "1"}).code, kExitUsage);
  EXPECT_EQ(RunCmd({"no-such-command"}).code, kExitUsage);
  EXPECT_EQ(RunCmd({"--help"}).code, kExitOk);
}

TEST_F(CliWorld, ExplainVerticalFirst) {
  // Image ids interleave classes, so id 0 is a vertical image.
  auto r = RunCmd({"explain", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
                "--image", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tags = r.out.find("ranked tags:");
  ASSERT_NE(tags, std::string::npos);
  EXPECT_EQ(r.out.find("1. vertical", tags), r.out.find("1.", tags)) << r.out;
}

TEST_F(CliWorld, ExplainMissingImage) {
  auto r = RunCmd({"explain", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
                "--image", "4242"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("4242"), std::string::npos);
}

TEST_F(CliWorld, ExplainJsonRoundTrip) {
  auto r = RunCmd({"explain", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
                "--image", "3", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  TagStore store = TagStore::Load(dir_ / "store.json");
  DumpReader reader = DumpReader::Open(dir_ / "dump");
  const ImageEntry* entry = reader.FindImage(3);
  Explanation e = ExplainImage(
      3, entry->class_label, entry->predicted_label,
      SelectActivatedFilters(reader.ReadImage(3), reader.schema().layers, store.method), store);
  EXPECT_EQ(ExplanationFromJson(r.out, store.classes), e);
}

TEST_F(CliWorld, EvaluatePerfectAndContamination) {
  auto r = RunCmd({"evaluate", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
                "--n", "1,2", "--out", P(dir_ / "eval")});
  ASSERT_EQ(r.code, 0) << r.err;
  json report = json::parse(ReadAll(dir_ / "eval" / "hits_report.json"));
  EXPECT_EQ(report["overall"][0]["rate"].get<double>(), 1.0);
  EXPECT_EQ(report["overall"][0]["n"].get<int>(), 1);

  r = RunCmd({"evaluate", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
           "--seed", "8", "--out", P(dir_ / "bad")});
  EXPECT_EQ(r.code, kExitContract);
  EXPECT_NE(r.err.find("contamination"), std::string::npos) << r.err;
}

TEST_F(CliWorld, SweepSingletonMatchesEvaluate) {
  auto r = RunCmd({"sweep", "--dump", P(dir_ / "dump"), "--k", "1", "--n", "1", "--seed", "7",
                "--out", P(dir_ / "sweep")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = RunCmd({"evaluate", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
           "--n", "1", "--out", P(dir_ / "eval")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadAll(dir_ / "sweep" / "sweep.csv"), ReadAll(dir_ / "eval" / "hits_report.csv"));
}

TEST_F(CliWorld, AnalyzeCorrectImageIsUsageError) {
  auto r = RunCmd({"analyze-errors", "--dump", P(dir_ / "dump"), "--store", P(dir_ / "store.json"),
                "--image", "0", "--out", P(dir_ / "ae")});
  EXPECT_EQ(r.code, kExitUsage) << r.out;
}

TEST_F(CliWorld, DumpIsReproducibleAcrossThreads) {
  auto r = RunCmd({"dump-activations", "--model", P(dir_ / "model.json"), "--images",
                P(dir_ / "images"), "--dump", P(dir_ / "dump4"), "--threads", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& e : std::filesystem::directory_iterator(dir_ / "dump")) {
    EXPECT_EQ(ReadAll(e.path()), ReadAll(dir_ / "dump4" / e.path().filename()));
  }
}

TEST(Cli, TwoConvLayerDumpCounts) {
  TempDir dir("cli");
  ModelSpec m;
  m.name = "two-conv";
  m.input_shape = Shape3{1, 5, 5};
  ConvLayer c1;
  c1.out_channels = 2;
  c1.kernel_h = c1.kernel_w = 3;
  c1.padding = Padding::kSameZero;
  for (int f = 0; f < 2; ++f) c1.weights.push_back(Tensor3(Shape3{1, 3, 3}, std::vector<float>(9, 0.1f * (f + 1))));
  c1.bias = {0, 0};
  ConvLayer c2 = c1;
  c2.out_channels = 3;
  c2.weights.clear();
  for (int f = 0; f < 3; ++f) c2.weights.push_back(Tensor3(Shape3{2, 3, 3}, std::vector<float>(18, 0.05f)));
  c2.bias = {0, 0, 0};
  c2.padding = Padding::kValid;
  DenseLayer d;
  d.in_dim = 27;
  d.out_dim = 2;
  d.weights.assign(54, 0.01f);
  d.bias = {0, 0.1f};
  m.layers = {c1, c2, FlattenLayer{}, d, SoftmaxLayer{}};
  m.class_names = {"x", "y"};
  SaveModel(m, dir / "m.json");
  std::mt19937_64 rng(2);
  std::vector<LabeledTensor> imgs;
  for (uint32_t i = 0; i < 4; ++i) {
    imgs.push_back({i, i % 2 ? "x" : "y", testing::RandomTensor(rng, Shape3{1, 5, 5})});
  }
  WriteImageSet(dir / "imgs", imgs);
  auto r = RunCmd({"dump-activations", "--model", P(dir / "m.json"), "--images",
                P(dir / "imgs"), "--dump", P(dir / "d")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("4 images x 2 layers"), std::string::npos) << r.out;
  json manifest = json::parse(ReadAll(dir / "d" / "manifest.json"));
  EXPECT_EQ(manifest["images"].size(), 4u);
  EXPECT_EQ(manifest["layers"].size(), 2u);
  r = RunCmd({"dump-activations", "--model", P(dir / "m.json"), "--images",
           P(dir / "imgs"), "--dump", P(dir / "d2")});
  for (const auto& e : std::filesystem::directory_iterator(dir / "d")) {
    EXPECT_EQ(ReadAll(e.path()), ReadAll(dir / "d2" / e.path().filename()));
  }
}

TEST(Cli, MissingLabelNamesImage) {
  TempDir dir("cli");
  ASSERT_EQ(RunCmd({"make-edge-world", "--out", P(dir.path()), "--per-class", "2"}).code, 0);
  json manifest = json::parse(ReadAll(dir / "images" / "images.json"));
  ASSERT_TRUE(manifest.contains("images"));
  manifest["images"][1].erase("label");
  const uint32_t id = manifest["images"][1]["image_id"].get<uint32_t>();
  std::ofstream(dir / "images" / "images.json") << manifest.dump();
  auto r = RunCmd({"dump-activations", "--model", P(dir / "model.json"), "--images",
                P(dir / "images"), "--dump", P(dir / "dump")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("image " + std::to_string(id)), std::string::npos) << r.err;
}

}  // namespace
}  // namespace filtag
