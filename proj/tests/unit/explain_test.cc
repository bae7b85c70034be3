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

#include "filtag/explain.h"

#include <gtest/gtest.h>

#include <random>

#include "edge_fixture.h"
#include "filtag/errors.h"

namespace filtag {
namespace {

using testing::EdgeSplit;
using testing::FullSortTop;
using testing::MakeEdgeWorld;
using Scores = std::vector<std::vector<double>>;

TagStore TwoFilterStore() {
  TagStore s;
  s.method = SelectionMethod::KBest(2);
  s.classes = {"A", "B"};
  s.layers = {LayerTags{0, {FilterTags{0, {{0, 0.9f}, {1, 0.5f}}},
                            FilterTags{1, {{0, 0.8f}}},
                            FilterTags{2, {}}}}};
  return s;
}

ActivatedFilters Activate(std::vector<uint32_t> filters) {
  LayerActivation l{0, {}};
  for (uint32_t f : filters) l.filters.push_back({f, 0.5});
  return {l};
}

std::vector<uint32_t> Indices(const ActivatedFilters& a) {
  std::vector<uint32_t> out;
  for (const auto& f : a[0].filters) out.push_back(f.filter_index);
  return out;
}

TEST(ActivatedFilters, SingleFilterLayer) {
  std::vector<LayerSchema> layers{{0, 1, 2, 2}};
  for (auto m : {SelectionMethod::KBest(3), SelectionMethod::QQuantile(0.1)}) {
    EXPECT_EQ(Indices(SelectActivatedFilters(Scores{{0.3}}, layers, m)),
              std::vector<uint32_t>{0});
  }
}

TEST(ActivatedFilters, TopTwo) {
  std::vector<LayerSchema> layers{{0, 3, 1, 1}};
  auto a = SelectActivatedFilters(Scores{{0.9, 0.1, 0.5}}, layers, SelectionMethod::KBest(2));
  auto idx = Indices(a);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, (std::vector<uint32_t>{0, 2}));
}

TEST(ActivatedFilters, QuantileMatchesSort) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0, 1);
  std::vector<LayerSchema> layers{{0, 8, 1, 1}};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(8);
    for (double& v : s) v = dist(rng);
    auto a = SelectActivatedFilters(Scores{s}, layers, SelectionMethod::QQuantile(0.25));
    EXPECT_EQ(Indices(a), FullSortTop(s, 2));
  }
}

TEST(ExplainImage, Singleton) {
  TagStore s;
  s.method = SelectionMethod::KBest(1);
  s.classes = {"A"};
  s.layers = {LayerTags{0, {FilterTags{0, {{0, 0.75f}}}}}};
  auto e = ExplainImage(1, 0, std::nullopt, Activate({0}), s);
  ASSERT_EQ(e.ranked_tags.size(), 1u);
  EXPECT_EQ(e.ranked_tags[0], (RankedTag{0, 1, 0.75}));
}

TEST(ExplainImage, FrequencyFirst) {
  auto e = ExplainImage(1, 1, 0u, Activate({0, 1}), TwoFilterStore());
  ASSERT_EQ(e.ranked_tags.size(), 2u);
  EXPECT_EQ(e.ranked_tags[0].class_id, 0u);
  EXPECT_EQ(e.ranked_tags[0].frequency, 2u);
  EXPECT_EQ(e.ranked_tags[1].class_id, 1u);
  EXPECT_EQ(e.RankOf(1), std::optional<size_t>(2));
}

TEST(ExplainImage, UnknownFilter) {
  try {
    ExplainImage(1, 0, std::nullopt, Activate({7}), TwoFilterStore());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(HitsAtN, Definition) {
  auto e = ExplainImage(1, 0, std::nullopt, Activate({0, 1}), TwoFilterStore());
  EXPECT_TRUE(HitsAtN(e, 1));
  auto miss = ExplainImage(1, 1, std::nullopt, Activate({1}), TwoFilterStore());
  for (uint32_t n : {1u, 2u, 100u}) EXPECT_FALSE(HitsAtN(miss, n));
  auto nothing = ExplainImage(1, 0, std::nullopt, Activate({2}), TwoFilterStore());
  EXPECT_FALSE(HitsAtN(nothing, 5));
  EXPECT_THROW(HitsAtN(e, 0), Error);
}

TEST(HitsAtN, NondecreasingInN) {
  auto e = ExplainImage(1, 1, std::nullopt, Activate({0, 1}), TwoFilterStore());
  bool prev = false;
  for (uint32_t n = 1; n <= 4; ++n) {
    EXPECT_TRUE(!prev || HitsAtN(e, n));
    prev = HitsAtN(e, n);
  }
}

TEST(ExplainImage, LargerSelectionNeverDropsTags) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0, 1);
  TagStore s;
  s.method = SelectionMethod::KBest(1);
  s.classes = {"a", "b", "c"};
  LayerTags lt{0, {}};
  for (uint32_t f = 0; f < 6; ++f) {
    lt.filters.push_back({f, {{f % 3, 0.5f}, {(f + 1) % 3, 0.25f}}});
  }
  s.layers = {lt};
  std::vector<LayerSchema> layers{{0, 6, 1, 1}};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> sc(6);
    for (double& v : sc) v = dist(rng);
    std::map<uint32_t, uint32_t> prev;
    for (int64_t k = 1; k <= 6; ++k) {
      auto e = ExplainImage(0, 0, std::nullopt,
                            SelectActivatedFilters(Scores{sc}, layers, SelectionMethod::KBest(k)), s);
      std::map<uint32_t, uint32_t> freq;
      for (const auto& t : e.ranked_tags) freq[t.class_id] = t.frequency;
      for (const auto& [c, f] : prev) EXPECT_GE(freq[c], f);
      prev = freq;
    }
  }
}

TEST(ExplainImage, EdgeWorldVerticalRanksFirst) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal});
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  auto store = BuildTagStore(reader, split, SelectionMethod::KBest(1));
  const uint32_t v = w.ClassId("vertical");
  for (uint32_t id : split.test.at(v)) {
    auto records = reader.ReadImage(id);
    auto e = ExplainImage(id, v, std::nullopt,
                          SelectActivatedFilters(records, reader.schema().layers, store.method),
                          store);
    ASSERT_FALSE(e.ranked_tags.empty());
    EXPECT_EQ(e.ranked_tags[0].class_id, v);
  }
}

TEST(ExplanationJson, RoundTrip) {
  auto e = ExplainImage(9, 1, 0u, Activate({0, 1}), TwoFilterStore());
  const std::vector<std::string> classes{"A", "B"};
  EXPECT_EQ(ExplanationFromJson(ExplanationToJson(e, classes), classes), e);
  auto none = ExplainImage(3, 0, std::nullopt, Activate({2}), TwoFilterStore());
  EXPECT_EQ(ExplanationFromJson(ExplanationToJson(none, classes), classes), none);
}

}  // namespace
}  // namespace filtag
