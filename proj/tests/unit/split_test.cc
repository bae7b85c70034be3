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

#include <set>

#include "filtag/errors.h"
#include "filtag/ingest.h"

namespace filtag {
namespace {

std::vector<LabeledImage> Images(const std::vector<uint32_t>& per_class) {
  std::vector<LabeledImage> out;
  uint32_t id = 100;
  for (uint32_t c = 0; c < per_class.size(); ++c) {
    for (uint32_t i = 0; i < per_class[c]; ++i) out.push_back({id++, c});
  }
  return out;
}

TEST(Split, TenImagesEightTwo) {
  auto s = SplitDataset(Images({10}), 0.8, 42);
  EXPECT_EQ(s.tagging.at(0).size(), 8u);
  EXPECT_EQ(s.test.at(0).size(), 2u);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Split, SingleImageClassWarns) {
  auto s = SplitDataset(Images({1, 5}), 0.8, 1);
  EXPECT_EQ(s.tagging.at(0).size(), 1u);
  EXPECT_TRUE(s.test[0].empty());
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_EQ(s.tagging.at(1).size(), 4u);
}

TEST(Split, DeterministicAndSeedSensitive) {
  auto imgs = Images({10, 10, 10});
  auto a = SplitDataset(imgs, 0.8, 7);
  auto b = SplitDataset(imgs, 0.8, 7);
  EXPECT_EQ(a.tagging, b.tagging);
  EXPECT_EQ(a.test, b.test);
  auto c = SplitDataset(imgs, 0.8, 8);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, PartitionIsDisjointAndComplete) {
  auto imgs = Images({3, 7, 11, 2});
  auto s = SplitDataset(imgs, 0.8, 3);
  std::set<uint32_t> seen;
  for (uint32_t id : s.TaggingIds()) {
    EXPECT_TRUE(s.IsTagging(id));
    EXPECT_FALSE(s.IsTest(id));
    seen.insert(id);
  }
  for (uint32_t id : s.TestIds()) {
    EXPECT_TRUE(s.IsTest(id));
    EXPECT_TRUE(seen.insert(id).second);
  }
  EXPECT_EQ(seen.size(), imgs.size());
  for (auto& [c, ids] : s.test) EXPECT_GE(s.tagging.at(c).size(), 1u);
}

TEST(Split, InputOrderDoesNotMatter) {
  auto imgs = Images({6, 9});
  auto a = SplitDataset(imgs, 0.8, 5);
  std::reverse(imgs.begin(), imgs.end());
  auto b = SplitDataset(imgs, 0.8, 5);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, BadFractionAndDuplicates) {
  for (double f : {0.0, 1.0, -0.1, 1.5}) {
    try {
      SplitDataset(Images({4}), f, 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
  }
  std::vector<LabeledImage> dup = {{1, 0}, {1, 0}};
  EXPECT_THROW(SplitDataset(dup, 0.8, 1), Error);
}

}  // namespace
}  // namespace filtag
