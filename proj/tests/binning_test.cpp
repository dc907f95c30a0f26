// Copyright 2026 The llm-energy Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "llmenergy/binning.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"

namespace llmenergy {
namespace {

const BinGrid kGrid = BinGrid::default_grid();

TEST(MapToBin, MedianRequest) {
  EXPECT_EQ(map_to_bin(Request(215, 7), kGrid), BinAssignment(Bin{256, 8}));
}

TEST(MapToBin, ExactBoundaryMapsToItself) {
  EXPECT_EQ(map_to_bin(Request(32, 8), kGrid), BinAssignment(Bin{32, 8}));
  EXPECT_EQ(map_to_bin(Request(8192, 512), kGrid),
            BinAssignment(Bin{8192, 512}));
}

TEST(MapToBin, Exclusions) {
  EXPECT_EQ(map_to_bin(Request(8193, 4), kGrid),
            BinAssignment(Excluded{Overflow::kInput}));
  EXPECT_EQ(map_to_bin(Request(100, 513), kGrid),
            BinAssignment(Excluded{Overflow::kOutput}));
  // Both over: tallied under input.
  EXPECT_EQ(map_to_bin(Request(9000, 9000), kGrid),
            BinAssignment(Excluded{Overflow::kInput}));
}

TEST(MapToBin, ZeroLengthsMapToSmallestBin) {
  EXPECT_EQ(map_to_bin(Request(0, 0), kGrid), BinAssignment(Bin{32, 8}));
  // Single-token classification outputs.
  EXPECT_EQ(map_to_bin(Request(300, 1), kGrid), BinAssignment(Bin{512, 8}));
}

TEST(MapToBin, AgreesWithMinimalCeilingSearchOnCustomGrid) {
  const BinGrid grid({3, 10, 11, 50}, {1, 4});
  for (TokenCount i = 0; i <= 60; ++i) {
    for (TokenCount o = 0; o <= 6; ++o) {
      const auto want = oracle::min_ceiling_bin(grid, i, o);
      const auto got = map_to_bin(Request(i, o), grid);
      if (want.bin) {
        ASSERT_EQ(got, BinAssignment(*want.bin)) << i << "," << o;
      } else {
        ASSERT_EQ(got, BinAssignment(Excluded{want.input_overflow
                                                  ? Overflow::kInput
                                                  : Overflow::kOutput}));
      }
    }
  }
}

TEST(MapToBin, MonotoneInEachDimension) {
  TokenCount prev = 0;
  for (TokenCount i = 0; i <= 8192; i += 7) {
    const Bin b = std::get<Bin>(map_to_bin(Request(i, 5), kGrid));
    ASSERT_GE(b.input_cap, prev);
    prev = b.input_cap;
  }
  prev = 0;
  for (TokenCount o = 0; o <= 512; ++o) {
    const Bin b = std::get<Bin>(map_to_bin(Request(5, o), kGrid));
    ASSERT_GE(b.output_cap, prev);
    prev = b.output_cap;
  }
}

TEST(BinWorkload, ThreeRequestFixture) {
  const std::vector<Request> r{{215, 7}, {215, 7}, {929, 41}};
  const BinnedWorkload w = bin_workload(r, kGrid);
  EXPECT_EQ(w.counts().size(), 2u);
  EXPECT_EQ(w.count({256, 8}), 2u);
  EXPECT_EQ(w.count({1024, 64}), 1u);
  EXPECT_EQ(w.excluded(), 0u);
}

TEST(BinWorkload, EmptyTrace) {
  const BinnedWorkload w = bin_workload(std::vector<Request>{}, kGrid);
  EXPECT_TRUE(w.counts().empty());
  EXPECT_EQ(w.excluded_input(), 0u);
  EXPECT_EQ(w.excluded_output(), 0u);
}

TEST(BinWorkload, ConservesRequests) {
  std::mt19937_64 rng(42);
  const auto r = oracle::random_requests(rng, 10'000, 9000, 600);
  const BinnedWorkload w = bin_workload(r, kGrid);
  EXPECT_EQ(w.total_requests(), 10'000u);

  std::uint64_t over_in = 0, over_out = 0;
  for (const Request& q : r) {
    if (q.input_tokens() > 8192) {
      ++over_in;
    } else if (q.output_tokens() > 512) {
      ++over_out;
    }
  }
  EXPECT_EQ(w.excluded_input(), over_in);
  EXPECT_EQ(w.excluded_output(), over_out);
}

TEST(BinWorkload, ConcatenationIsSumOfParts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = oracle::random_requests(rng, rng() % 300, 9000, 600);
    auto b = oracle::random_requests(rng, rng() % 300, 9000, 600);
    std::vector<Request> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    EXPECT_EQ(bin_workload(ab, kGrid),
              bin_workload(a, kGrid) + bin_workload(b, kGrid));
  }
}

TEST(BinnedWorkload, RejectsOffGridBinsAndMismatchedMerge) {
  BinnedWorkload w(kGrid);
  EXPECT_THROW(w.add(Bin{64, 8}), InvalidArgument);
  BinnedWorkload other(BinGrid({32}, {8}));
  EXPECT_THROW(w += other, InvalidArgument);
}

TEST(BinnedCsv, RoundTripsLosslessly) {
  std::mt19937_64 rng(9);
  const BinGrid grid({16, 64, 1000}, {2, 9});
  const auto r = oracle::random_requests(rng, 500, 1200, 12);
  const BinnedWorkload w = bin_workload(r, grid);
  ASSERT_GT(w.excluded_input(), 0u);
  ASSERT_GT(w.excluded_output(), 0u);
  std::stringstream text;
  write_binned_csv(text, w);
  EXPECT_EQ(read_binned_csv(text), w);
}

TEST(BinnedCsv, Format) {
  const std::vector<Request> r{{215, 7}, {215, 7}, {929, 41}, {9000, 1}};
  std::ostringstream text;
  write_binned_csv(text, bin_workload(r, kGrid));
  EXPECT_EQ(text.str(),
            "# input_bins=32,128,256,512,1024,2048,4096,8192\n"
            "# output_bins=8,16,32,64,128,256,512\n"
            "input_cap,output_cap,count\n"
            "256,8,2\n"
            "1024,64,1\n"
            "# excluded_input=1\n"
            "# excluded_output=0\n");
}

TEST(BinnedCsv, RejectsMalformedInput) {
  std::istringstream no_header("256,8,2\n");
  EXPECT_THROW(read_binned_csv(no_header), DataError);
  std::istringstream off_grid("input_cap,output_cap,count\n100,8,1\n");
  EXPECT_THROW(read_binned_csv(off_grid), DataError);
  std::istringstream dup("input_cap,output_cap,count\n32,8,1\n32,8,2\n");
  EXPECT_THROW(read_binned_csv(dup), DataError);
}

}  // namespace
}  // namespace llmenergy
