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

#include "filtag/evaluate.h"

#include <gtest/gtest.h>

#include "edge_fixture.h"
#include "filtag/errors.h"

namespace filtag {
namespace {

using testing::EdgeSplit;
using testing::MakeEdgeWorld;

TEST(Evaluate, EdgeWorldHitsAtOne) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal});
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  auto store = BuildTagStore(reader, split, SelectionMethod::KBest(1));
  auto report = Evaluate(reader, store, split.TestIds(), store.method, {1, 2});
  EXPECT_FALSE(report.empty);
  EXPECT_EQ(report.image_count, 16u);
  ASSERT_EQ(report.overall.size(), 2u);
  EXPECT_EQ(report.overall[0].hits, report.overall[0].total);
  EXPECT_DOUBLE_EQ(report.overall[0].rate(), 1.0);
}

TEST(Evaluate, EmptyTestSet) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal}, 5);
  DumpReader reader = w.Open();
  auto store = BuildTagStore(reader, EdgeSplit(reader), SelectionMethod::KBest(1));
  auto report = Evaluate(reader, store, {}, store.method, {1, 3});
  EXPECT_TRUE(report.empty);
  EXPECT_EQ(report.image_count, 0u);
  for (const HitCount& h : report.overall) {
    EXPECT_EQ(h.total, 0u);
    EXPECT_EQ(h.rate(), 0.0);
  }
  EXPECT_FALSE(report.spearman.has_value());
  const std::string json = HitsReportToJson(report, store.classes);
  EXPECT_NE(json.find("\"empty\": true"), std::string::npos) << json;
}

TEST(Evaluate, ThreadCountDoesNotMatter) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal, Stripe::kDiagonal});
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  auto store = BuildTagStore(reader, split, SelectionMethod::KBest(1));
  auto a = Evaluate(reader, store, split.TestIds(), store.method, {1, 2}, 1);
  auto b = Evaluate(reader, store, split.TestIds(), store.method, {1, 2}, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(HitsReportToJson(a, store.classes), HitsReportToJson(b, store.classes));
}

TEST(Evaluate, BadN) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal}, 5);
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  auto store = BuildTagStore(reader, split, SelectionMethod::KBest(1));
  EXPECT_THROW(Evaluate(reader, store, split.TestIds(), store.method, {0}), Error);
}

TEST(Evaluate, Contamination) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal});
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  auto store = BuildTagStore(reader, split, SelectionMethod::KBest(1));
  try {
    Evaluate(reader, store, split.TaggingIds(), store.method, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContamination);
  }
  auto other_side = ResolveTestImages(reader, store, testing::kEdgeSplitSeed + 1, std::nullopt);
  EXPECT_THROW(CheckNotContaminated(reader, store, other_side), Error);
  auto own = ResolveTestImages(reader, store, std::nullopt, std::nullopt);
  EXPECT_EQ(own, split.TestIds());
  EXPECT_NO_THROW(CheckNotContaminated(reader, store, own));
}

TEST(Evaluate, StoreFromOtherModelRejected) {
  auto two = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal}, 5);
  auto three = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal, Stripe::kDiagonal}, 5);
  DumpReader r2 = two.Open(), r3 = three.Open();
  auto store = BuildTagStore(r2, EdgeSplit(r2), SelectionMethod::KBest(1));
  try {
    CheckStoreMatchesDump(r3, store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(Sweep, SingletonEqualsEvaluate) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal, Stripe::kDiagonal});
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  const SelectionMethod grid[] = {SelectionMethod::KBest(1)};
  auto table = Sweep(reader, split, grid, {1});
  auto store = BuildTagStore(reader, split, grid[0]);
  auto direct = Evaluate(reader, store, split.TestIds(), grid[0], {1});
  ASSERT_EQ(table.reports.size(), 1u);
  EXPECT_EQ(table.reports[0], direct);
}

TEST(Sweep, RowsNondecreasingAndDeterministic) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal, Stripe::kDiagonal});
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  const SelectionMethod grid[] = {SelectionMethod::KBest(1), SelectionMethod::KBest(2)};
  auto table = Sweep(reader, split, grid, {1, 2});
  for (const HitsReport& r : table.reports) {
    EXPECT_LE(r.overall[0].hits, r.overall[1].hits);
    for (const ClassHits& c : r.per_class) EXPECT_LE(c.per_n[0].hits, c.per_n[1].hits);
  }
  auto again = Sweep(reader, split, grid, {1, 2}, 4);
  EXPECT_EQ(SweepToCsv(table, reader.schema().classes),
            SweepToCsv(again, reader.schema().classes));
  EXPECT_THROW(Sweep(reader, split, {}, {1}), Error);
}

TEST(HitsReportCsv, Layout) {
  auto w = MakeEdgeWorld({Stripe::kVertical, Stripe::kHorizontal}, 10);
  DumpReader reader = w.Open();
  auto split = EdgeSplit(reader);
  auto store = BuildTagStore(reader, split, SelectionMethod::KBest(1));
  auto report = Evaluate(reader, store, split.TestIds(), store.method, {1});
  const std::string csv = HitsReportToCsv(report, store.classes);
  EXPECT_EQ(csv.rfind("method,param,n,class,hits,total,rate\nk_best,1,1,all,", 0), 0u)
      << csv;
}

}  // namespace
}  // namespace filtag
