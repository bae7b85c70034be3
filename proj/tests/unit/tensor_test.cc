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

#include "filtag/tensor.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "filtag/errors.h"
#include "oracles.h"

namespace filtag {
namespace {

using testing::RandomTensor;
using testing::TempDir;

TEST(Tensor, SliceOfSingleElement) {
  Tensor3 t(Shape3{1, 1, 1}, {42.0f});
  EXPECT_EQ(ChannelSlice(t, 0), std::vector<float>{42.0f});
}

TEST(Tensor, SliceIsRowMajor) {
  std::vector<float> v(8);
  std::iota(v.begin(), v.end(), 0.0f);
  Tensor3 t(Shape3{2, 2, 2}, v);
  EXPECT_EQ(ChannelSlice(t, 1), (std::vector<float>{4, 5, 6, 7}));
}

TEST(Tensor, SliceMatchesNestedCopy) {
  std::mt19937_64 rng(3);
  Tensor3 t = RandomTensor(rng, Shape3{3, 4, 5});
  for (uint32_t c = 0; c < 3; ++c) {
    std::vector<float> expect;
    for (uint32_t y = 0; y < 4; ++y) {
      for (uint32_t x = 0; x < 5; ++x) expect.push_back(t.at(c, y, x));
    }
    EXPECT_EQ(ChannelSlice(t, c), expect);
  }
}

TEST(Tensor, SliceOutOfRange) {
  Tensor3 t(Shape3{2, 1, 1});
  try {
    ChannelSlice(t, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndex);
  }
}

TEST(Tensor, RejectsWrongLengthAndNonFinite) {
  EXPECT_THROW(Tensor3(Shape3{1, 2, 2}, {1, 2, 3}), Error);
  EXPECT_THROW(Tensor3(Shape3{1, 1, 2}, {1, NAN}), Error);
  EXPECT_THROW(Tensor3(Shape3{1, 1, 1}, {INFINITY}), Error);
}

TEST(Mean, SmallCases) {
  const float one[] = {0.5f};
  const float two[] = {0.0f, 1.0f};
  EXPECT_DOUBLE_EQ(Mean(std::span<const float>(one)), 0.5);
  EXPECT_DOUBLE_EQ(Mean(std::span<const float>(two)), 0.5);
}

TEST(Mean, EmptyIsDomainError) {
  try {
    Mean(std::span<const float>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(Mean, MatchesExtendedPrecision) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> dist(0, 1);
  std::vector<float> v(1000);
  for (float& x : v) x = dist(rng);
  long double s = 0;
  for (float x : v) s += x;
  const double expect = static_cast<double>(s / v.size());
  EXPECT_NEAR(Mean(std::span<const float>(v)), expect, 1e-6 * expect);
}

TEST(Mean, PermutationInvariantAndBounded) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> dist(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> v(1 + trial * 7);
    for (float& x : v) x = dist(rng);
    const double m = Mean(std::span<const float>(v));
    std::shuffle(v.begin(), v.end(), rng);
    const double m2 = Mean(std::span<const float>(v));
    EXPECT_NEAR(m, m2, 1e-6 * std::max(1.0, std::abs(m)));
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    EXPECT_LE(*lo, m);
    EXPECT_GE(*hi, m);
  }
}

TEST(TensorIo, RoundTripStreamAndFile) {
  std::mt19937_64 rng(5);
  TempDir dir("tensor");
  for (Shape3 s : {Shape3{1, 1, 1}, Shape3{3, 4, 5}, Shape3{2, 0, 3}}) {
    Tensor3 t = RandomTensor(rng, s);
    std::stringstream ss;
    WriteTensor(ss, t);
    EXPECT_EQ(ss.str().size(), TensorBlockBytes(s));
    EXPECT_EQ(ReadTensor(ss), t);
    SaveTensor(dir / "x.ft3", t);
    EXPECT_EQ(LoadTensor(dir / "x.ft3"), t);
  }
}

TEST(TensorIo, RejectsBadMagicVersionAndTruncation) {
  Tensor3 t(Shape3{1, 2, 2}, {1, 2, 3, 4});
  std::string bytes;
  AppendTensorBlock(t, bytes);
  for (size_t cut : {size_t{3}, size_t{10}, bytes.size() - 1}) {
    std::stringstream ss(bytes.substr(0, cut));
    EXPECT_THROW(ReadTensor(ss), Error);
  }
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream s1(bad_magic);
  EXPECT_THROW(ReadTensor(s1), Error);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::stringstream s2(bad_version);
  EXPECT_THROW(ReadTensor(s2), Error);
}

TEST(TensorIo, PreservesBitPatterns) {
  Tensor3 t(Shape3{1, 1, 3}, {-0.0f, 1e-40f, 3.4e38f});
  std::stringstream ss;
  WriteTensor(ss, t);
  Tensor3 back = ReadTensor(ss);
  EXPECT_TRUE(BitEqual(t.values(), back.values()));
  EXPECT_TRUE(std::signbit(back.values()[0]));
}

}  // namespace
}  // namespace filtag
