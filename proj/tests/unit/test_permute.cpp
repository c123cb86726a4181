#include "permcca/error.hpp"
#include "permcca/permute.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace permcca;

TEST(BuildScheme, IdentityFirstAndDeterministic)
{
  const PermutationScheme a = build_scheme(5, 5, 3, nullptr, false, 42);
  const PermutationScheme b = build_scheme(5, 5, 3, nullptr, false, 42);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_TRUE(is_identity(a.pairs[0].y));
  EXPECT_TRUE(is_identity(a.pairs[0].x));
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a.pairs[j].y, b.pairs[j].y);
    EXPECT_EQ(a.pairs[j].x, b.pairs[j].x);
  }
}

TEST(BuildScheme, DifferentSeedsDiffer)
{
  const PermutationScheme a = build_scheme(20, 20, 5, nullptr, false, 1);
  const PermutationScheme b = build_scheme(20, 20, 5, nullptr, false, 2);
  EXPECT_NE(a.pairs[1].y, b.pairs[1].y);
}

TEST(BuildScheme, EveryDrawIsABijection)
{
  const PermutationScheme s = build_scheme(17, 13, 200, nullptr, true, 3);
  for (const auto& pair : s.pairs) {
    EXPECT_EQ(pair.y.size(), 17u);
    EXPECT_EQ(pair.x.size(), 13u);
    EXPECT_TRUE(is_bijection(pair.y));
    EXPECT_TRUE(is_bijection(pair.x));
  }
}

TEST(BuildScheme, OneSidedKeepsRightIdentity)
{
  const PermutationScheme s = build_scheme(10, 10, 50, nullptr, false, 4);
  for (const auto& pair : s.pairs) {
    EXPECT_TRUE(is_identity(pair.x));
  }
}

TEST(BuildScheme, BothSidesDrawsRightIndependently)
{
  const PermutationScheme s = build_scheme(10, 8, 50, nullptr, true, 5);
  std::size_t moved = 0;
  for (std::size_t j = 1; j < s.size(); ++j)
    moved += is_identity(s.pairs[j].x) ? 0 : 1;
  EXPECT_GT(moved, 40u);
}

TEST(BuildScheme, WithinBlockStaysInBlock)
{
  BlockStructure blocks{{7, 7, 9, 9}, BlockMode::Within};
  const PermutationScheme s = build_scheme(4, 4, 100, &blocks, false, 6);
  std::set<Permutation> seen;
  for (const auto& pair : s.pairs) {
    EXPECT_TRUE((pair.y[0] == 0 || pair.y[0] == 1) && (pair.y[1] == 0 || pair.y[1] == 1));
    EXPECT_TRUE((pair.y[2] == 2 || pair.y[2] == 3) && (pair.y[3] == 2 || pair.y[3] == 3));
    seen.insert(pair.y);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(BuildScheme, WholeBlockHasTwoElements)
{
  BlockStructure blocks{{0, 0, 1, 1}, BlockMode::Whole};
  const PermutationScheme s = build_scheme(4, 4, 100, &blocks, false, 7);
  std::set<Permutation> seen;
  for (const auto& pair : s.pairs)
    seen.insert(pair.y);
  EXPECT_EQ(seen, (std::set<Permutation>{{0, 1, 2, 3}, {2, 3, 0, 1}}));
  EXPECT_TRUE(s.group_smaller_than_j);
  EXPECT_DOUBLE_EQ(std::exp(log_group_size(4, &blocks)), 2.0);
}

TEST(BuildScheme, WholeBlockNeedsEqualSizes)
{
  BlockStructure blocks{{0, 0, 1}, BlockMode::Whole};
  try {
    build_scheme(3, 3, 10, &blocks, false, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidBlocks);
  }
}

TEST(BuildScheme, BlockLabelsMustMatchRows)
{
  BlockStructure blocks{{0, 0, 1}, BlockMode::Within};
  try {
    build_scheme(4, 4, 10, &blocks, false, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidBlocks);
  }
}

TEST(BuildScheme, BlocksRejectTwoSidedPermutation)
{
  BlockStructure blocks{{0, 0, 1, 1}, BlockMode::Within};
  try {
    build_scheme(4, 3, 10, &blocks, true, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidOptions);
  }
}

TEST(BuildScheme, NeedsTwoPermutations)
{
  EXPECT_THROW(build_scheme(5, 5, 1, nullptr, false, 11), Error);
}

TEST(BuildScheme, SmallGroupIsFlagged)
{
  EXPECT_TRUE(build_scheme(3, 3, 10, nullptr, false, 12).group_smaller_than_j);
  EXPECT_FALSE(build_scheme(10, 10, 10, nullptr, false, 12).group_smaller_than_j);
}

TEST(ExhaustiveScheme, ThreeElements)
{
  const PermutationScheme s = exhaustive_scheme(3, 100);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_EQ(s.pairs[0].y, (Permutation{0, 1, 2}));
  EXPECT_EQ(s.pairs[5].y, (Permutation{2, 1, 0}));
}

TEST(ExhaustiveScheme, SingleElement)
{
  const PermutationScheme s = exhaustive_scheme(1, 100);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.pairs[0].y, (Permutation{0}));
}

TEST(ExhaustiveScheme, FourElementsAllDistinct)
{
  const PermutationScheme s = exhaustive_scheme(4, 100);
  std::set<Permutation> seen;
  for (const auto& pair : s.pairs)
    seen.insert(pair.y);
  EXPECT_EQ(seen.size(), 24u);
}

TEST(ExhaustiveScheme, TooLarge)
{
  try {
    exhaustive_scheme(8, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
}

TEST(BlockStructure, SubsetFollowsKeptRows)
{
  BlockStructure blocks{{1, 1, 2, 2, 3}, BlockMode::Within};
  const BlockStructure sub = blocks.subset({0, 2, 4});
  EXPECT_EQ(sub.labels, (std::vector<int>{1, 2, 3}));
  EXPECT_THROW(blocks.subset({5}), Error);
}
