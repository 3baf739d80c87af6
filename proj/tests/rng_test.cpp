#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "geomask/rng.hpp"

using namespace geomask;

TEST(RngStream, SameKeySameSequence) {
  RngStream a(42, 9), b(42, 9);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, FrozenReferenceValues) {
  // Pins the engine so any change to seeding or output shows up here.
  RngStream r(1, 0);
  EXPECT_EQ(r.next_u64(), 5121515744844240585ULL);
  EXPECT_EQ(r.next_u64(), 8899270218847967147ULL);
  EXPECT_EQ(derive_stream(7, 3, 11).uniform01(), 0.93113971144012564);
}

TEST(RngStream, FirstDrawDependsOnStreamId) {
  std::set<std::uint64_t> first;
  for (std::uint64_t id = 0; id < 10000; ++id) first.insert(RngStream(1, id).next_u64());
  EXPECT_EQ(first.size(), 10000u);
  EXPECT_NE(RngStream(1, 2).next_u64(), RngStream(2, 1).next_u64());
}

TEST(RngStream, UniformRange) {
  RngStream r(3, 4);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, NormalMoments) {
  RngStream r(5, 6);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.01);
}

TEST(DeriveStream, Deterministic) {
  auto a = derive_stream(11, 3, 17), b = derive_stream(11, 3, 17);
  EXPECT_EQ(a.stream_id(), b.stream_id());
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(DeriveStream, InjectiveOnGrid) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t t = 0; t < 20; ++t) {
    for (std::uint64_t r = 0; r < 1000; ++r) ids.insert(derive_stream(1, t, r).stream_id());
  }
  EXPECT_EQ(ids.size(), 20u * 1000u);
}

TEST(DeriveStream, NeighbouringRepsShareNoRuns) {
  // Streams differing only in rep_index: no aligned run of equal outputs
  // longer than 4, and no shared values at all in the first 10^4 draws.
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    auto a = derive_stream(99, 2, rep), b = derive_stream(99, 2, rep + 1);
    std::vector<std::uint64_t> xa(10000), xb(10000);
    for (auto& v : xa) v = a.next_u64();
    for (auto& v : xb) v = b.next_u64();
    std::size_t run = 0, longest = 0;
    for (std::size_t i = 0; i < xa.size(); ++i) {
      run = xa[i] == xb[i] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    EXPECT_LE(longest, 4u);
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    std::vector<std::uint64_t> common;
    std::set_intersection(xa.begin(), xa.end(), xb.begin(), xb.end(), std::back_inserter(common));
    EXPECT_TRUE(common.empty());
  }
}

TEST(DeriveStream, RejectsOversizedIndices) {
  EXPECT_THROW(derive_stream(1, 1ULL << 32, 0), InvalidArgument);
  EXPECT_THROW(derive_stream(1, 0, 1ULL << 32), InvalidArgument);
}

TEST(Mix64, IsBijectiveOnSample) {
  std::set<std::uint64_t> out;
  for (std::uint64_t i = 0; i < 100000; ++i) out.insert(mix64(i));
  EXPECT_EQ(out.size(), 100000u);
}
