// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <vector>

#include <gtest/gtest.h>

#include "readi/hadamard.hpp"

using namespace readi;

namespace {

// plain triple loop, independent of integer_product
std::vector<long> naive_aat(const HadamardMatrix& h) {
  const int n = h.rank();
  std::vector<long> out(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long acc = 0;
      for (int k = 0; k < n; ++k) acc += static_cast<long>(h(i, k)) * h(j, k);
      out[static_cast<std::size_t>(i) * n + j] = acc;
    }
  return out;
}

// Sylvester ordering in closed form: (-1)^popcount(i & j), 0-based
int closed_form(int i, int j) { return std::popcount(static_cast<unsigned>(i & j)) % 2 ? -1 : 1; }

}  // namespace

TEST(Sylvester, BaseCases) {
  const auto h1 = sylvester(1);
  ASSERT_EQ(h1.rank(), 1);
  EXPECT_EQ(h1(0, 0), 1);
  const auto h2 = sylvester(2);
  EXPECT_EQ(h2(0, 0), 1);
  EXPECT_EQ(h2(0, 1), 1);
  EXPECT_EQ(h2(1, 0), 1);
  EXPECT_EQ(h2(1, 1), -1);
}

TEST(Sylvester, Rank4IsKroneckerSquareAndOrthogonal) {
  const auto h4 = sylvester(4);
  EXPECT_EQ(h4, kronecker(sylvester(2), sylvester(2)));
  const auto g = naive_aat(h4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(g[static_cast<std::size_t>(i) * 4 + j], i == j ? 4 : 0);
}

TEST(Sylvester, GramIsScaledIdentityUpTo256) {
  for (int n = 1; n <= 256; n *= 2) {
    const auto g = naive_aat(sylvester(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ASSERT_EQ(g[static_cast<std::size_t>(i) * n + j], i == j ? n : 0) << "n=" << n;
  }
}

TEST(Sylvester, EntriesMatchClosedFormAndAreSymmetric) {
  for (int n = 1; n <= 256; n *= 2) {
    const auto h = sylvester(n);
    EXPECT_EQ(h, h.transpose());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ASSERT_EQ(h(i, j), closed_form(i, j));
  }
}

TEST(Sylvester, ProductOfFactorsIsKronecker) {
  EXPECT_EQ(sylvester(32), kronecker(sylvester(4), sylvester(8)));
  EXPECT_EQ(sylvester(64), kronecker(sylvester(8), sylvester(8)));
}

TEST(Sylvester, RejectsInvalidRanks) {
  for (int n : {0, 3, 6, 12, -4, 2048}) {
    try {
      (void)sylvester(n);
      FAIL() << "accepted rank " << n;
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::invalid_rank);
    }
  }
  EXPECT_NO_THROW((void)sylvester(1024));
}

TEST(IntegerProduct, MatchesNaiveProduct) {
  const auto h = sylvester(16);
  EXPECT_EQ(integer_product(h, h.transpose()), naive_aat(h));
}

TEST(InverseScale, SmallRanks) {
  for (int n : {1, 2, 8}) {
    const auto h = sylvester(n);
    const auto inv = inverse_scale(h);
    EXPECT_EQ(inv.denominator, n);
    EXPECT_EQ(inv.matrix, h.transpose());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        long acc = 0;
        for (int k = 0; k < n; ++k) acc += static_cast<long>(inv.matrix(i, k)) * h(k, j);
        // (1/n) H^T H = I, checked without leaving integers
        EXPECT_EQ(acc, i == j ? inv.denominator : 0);
        EXPECT_DOUBLE_EQ(inv.scale() * static_cast<double>(acc), i == j ? 1.0 : 0.0);
      }
  }
}

TEST(IndexSplit, Examples) {
  EXPECT_EQ(index_split(1, 4), (GroupIndex{1, 1}));
  EXPECT_EQ(index_split(3, 2), (GroupIndex{2, 1}));
  EXPECT_EQ(index_split(8, 4), (GroupIndex{2, 4}));
}

TEST(IndexSplit, IsBijection) {
  for (int n : {1, 2, 16, 64})
    for (int q = 1; q <= n; q *= 2) {
      std::vector<int> seen(static_cast<std::size_t>(n + 1), 0);
      for (int flat = 1; flat <= n; ++flat) {
        const auto g = index_split(flat, q);
        ASSERT_GE(g.within, 1);
        ASSERT_LE(g.within, q);
        ASSERT_GE(g.group, 1);
        ASSERT_LE(g.group, n / q);
        ASSERT_EQ(g.within + q * (g.group - 1), flat);
        ASSERT_EQ(index_join(g, q), flat);
        ++seen[static_cast<std::size_t>((g.group - 1) * q + g.within)];
      }
      for (int k = 1; k <= n; ++k) EXPECT_EQ(seen[static_cast<std::size_t>(k)], 1);
    }
}

TEST(KronEntry, Examples) {
  EXPECT_EQ(kron_entry(2, 2, 3, 3), -1);
  EXPECT_EQ(sylvester(4).entry(3, 3), -1);
  for (int n = 1; n <= 64; n *= 2) EXPECT_EQ(kron_entry(1, n, 1, 1), 1);
}

TEST(KronEntry, ExhaustiveUpTo128) {
  for (int n = 1; n <= 128; n *= 2)
    for (int s = 1; s <= n; s *= 2) {
      const auto hs = sylvester(s), hq = sylvester(n / s);
      for (int i = 1; i <= n; ++i)
        for (int e = 1; e <= n; ++e) ASSERT_EQ(kron_entry(hs, hq, i, e), closed_form(i - 1, e - 1)) << n << " " << s << " " << i << " " << e;
    }
}

TEST(GroupingScheme, Construction) {
  const auto g = GroupingScheme::make(64, 8);
  EXPECT_EQ(g.group_size, 8);
  EXPECT_THROW(GroupingScheme::make(64, 3), error);
  EXPECT_THROW(GroupingScheme::make(48, 4), error);
  GroupingScheme bad{16, 4, 2};
  EXPECT_THROW(bad.validate(), error);
}
