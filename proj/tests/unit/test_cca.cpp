#include "helpers.hpp"

#include "permcca/cca.hpp"
#include "permcca/error.hpp"

#include <gtest/gtest.h>

using namespace permcca;
using testing_support::pearson;
using testing_support::random_matrix;

namespace {

Mat centred_random(Index n, Index p, std::mt19937_64& rng)
{
  return center_columns(random_matrix(n, p, rng));
}

} // namespace

TEST(CenterColumns, SimpleColumn)
{
  Mat m(3, 1);
  m << 1, 2, 3;
  const Mat c = center_columns(m);
  EXPECT_DOUBLE_EQ(c(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(c(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(c(2, 0), 1.0);
}

TEST(CenterColumns, AlreadyCentredIsUnchanged)
{
  Mat m(3, 2);
  m << -1, 2, 0, -4, 1, 2;
  EXPECT_LT((center_columns(m) - m).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CenterColumns, RandomMeansVanish)
{
  std::mt19937_64 rng(1);
  const Mat c = center_columns(random_matrix(30, 5, rng) + Mat::Constant(30, 5, 7.0));
  EXPECT_LT(c.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CenterColumns, NeedsTwoRows)
{
  EXPECT_THROW(center_columns(Mat::Ones(1, 3)), Error);
}

TEST(Cca, SelfCorrelationIsOne)
{
  std::mt19937_64 rng(2);
  const Mat y = centred_random(20, 3, rng);
  const CcaFit fit = cca(y, y);
  for (Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(fit.r(k), 1.0, 1e-12);
  }
}

TEST(Cca, OrthogonalColumnSpacesGiveZero)
{
  std::mt19937_64 rng(3);
  // Columns of a centred orthonormal basis split between the two sides.
  Mat basis = centred_random(30, 5, rng);
  basis = Eigen::HouseholderQR<Mat>(basis).householderQ() * Mat::Identity(30, 5);
  const CcaFit fit = cca(basis.leftCols(2), basis.rightCols(3));
  EXPECT_LT(fit.r.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Cca, MatchesEigenOracle)
{
  std::mt19937_64 rng(4);
  const Mat y = centred_random(50, 3, rng);
  const Mat x = centred_random(50, 4, rng);
  const Vec expected = cca_eig_oracle(covariance_blocks(y, x));
  const CcaFit fit = cca(y, x);
  ASSERT_EQ(fit.r.size(), 3);
  EXPECT_LT((fit.r - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cca, ScalarCaseIsPearsonCorrelation)
{
  std::mt19937_64 rng(5);
  const Mat y = centred_random(25, 1, rng);
  const Mat x = centred_random(25, 1, rng) + 0.5 * y;
  EXPECT_NEAR(cca(y, x).r(0), std::abs(pearson(y.col(0), x.col(0))), 1e-12);
}

TEST(Cca, CanonicalVariablesAreUncorrelatedWithUnitVariance)
{
  std::mt19937_64 rng(6);
  const Index n = 80;
  const Mat y = centred_random(n, 4, rng);
  const Mat x = centred_random(n, 5, rng) + 0.3 * centred_random(n, 4, rng) * Mat::Ones(4, 5);
  const CcaFit fit = cca(y, x, 1, 1);
  const Mat u = y * fit.a;
  const Mat v = x * fit.b;
  const Mat uu = u.transpose() * u / static_cast<double>(n - 1);
  const Mat vv = v.transpose() * v / static_cast<double>(n - 1);
  const Mat uv = u.transpose() * v / static_cast<double>(n - 1);
  EXPECT_LT((uu - Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((vv - Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
  Mat expected = Mat::Zero(4, 4);
  expected.diagonal() = fit.r;
  EXPECT_LT((uv - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cca, DescendingWithinUnitInterval)
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CcaFit fit = cca(centred_random(40, 4, rng), centred_random(40, 6, rng));
    for (Index k = 0; k < fit.r.size(); ++k) {
      EXPECT_GE(fit.r(k), 0.0);
      EXPECT_LE(fit.r(k), 1.0);
      if (k > 0) {
        EXPECT_LE(fit.r(k), fit.r(k - 1));
      }
    }
  }
}

TEST(Cca, InvariantToMixingAndSideSwap)
{
  std::mt19937_64 rng(8);
  const Mat y = centred_random(40, 3, rng);
  const Mat x = centred_random(40, 4, rng);
  const Mat g = random_matrix(3, 3, rng) + 3.0 * Mat::Identity(3, 3);
  const Vec r = cca(y, x).r;
  EXPECT_LT((cca(y * g, x).r - r).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((cca(x, y).r - r).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cca, RerunOnCanonicalVariablesReproducesCorrelations)
{
  std::mt19937_64 rng(9);
  const Mat y = centred_random(40, 3, rng);
  const Mat x = centred_random(40, 5, rng);
  const CcaFit fit = cca(y, x);
  const CanonicalVariables cv = canonical_variables(y, x, fit, true);
  EXPECT_LT((cca(cv.u, cv.v).r - fit.r).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cca, RejectsMismatchedRows)
{
  std::mt19937_64 rng(10);
  try {
    cca(random_matrix(10, 2, rng), random_matrix(9, 2, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Cca, RejectsCollinearBlock)
{
  std::mt19937_64 rng(11);
  Mat y = random_matrix(10, 3, rng);
  y.col(1) = 2.0 * y.col(0);
  try {
    cca(y, random_matrix(10, 2, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
}

TEST(Cca, RejectsEmptySide)
{
  std::mt19937_64 rng(12);
  EXPECT_THROW(cca(random_matrix(10, 0, rng), random_matrix(10, 2, rng)), Error);
}

TEST(CcaEigOracle, ZeroCrossCovariance)
{
  CovBlocks cov{Mat::Identity(2, 2), Mat::Identity(3, 3), Mat::Zero(2, 3)};
  EXPECT_LT(cca_eig_oracle(cov).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CcaEigOracle, ScalarCorrelation)
{
  CovBlocks cov{Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Constant(1, 1, 0.6)};
  EXPECT_NEAR(cca_eig_oracle(cov)(0), 0.6, 1e-15);
}

TEST(CcaEigOracle, SingularBlockIsRejected)
{
  CovBlocks cov{Mat::Zero(2, 2), Mat::Identity(2, 2), Mat::Zero(2, 2)};
  try {
    cca_eig_oracle(cov);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(CanonicalVariables, EqualSidesAddNothing)
{
  std::mt19937_64 rng(13);
  const Mat y = centred_random(30, 3, rng);
  const Mat x = centred_random(30, 3, rng);
  const CcaFit fit = cca(y, x);
  const CanonicalVariables aug = canonical_variables(y, x, fit, true);
  const CanonicalVariables bare = canonical_variables(y, x, fit, false);
  EXPECT_LT((aug.u - bare.u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((aug.v - bare.v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CanonicalVariables, AugmentedSideSpansData)
{
  std::mt19937_64 rng(14);
  const Mat y = centred_random(30, 2, rng);
  const Mat x = centred_random(30, 3, rng);
  const CcaFit fit = cca(y, x);
  const CanonicalVariables cv = canonical_variables(y, x, fit, true);
  ASSERT_EQ(cv.v.cols(), 3);
  // The added column's coefficients are orthogonal to the canonical coefficients.
  const Vec extra = x.colPivHouseholderQr().solve(cv.v.col(2));
  EXPECT_LT((fit.b.transpose() * extra).cwiseAbs().maxCoeff(), 1e-8 * fit.b.norm() * extra.norm());
  Mat both(30, 6);
  both << cv.v, x;
  EXPECT_EQ(numerical_rank(both), numerical_rank(x));
  EXPECT_EQ(numerical_rank(cv.v), 3);
}

TEST(CanonicalVariables, UnaugmentedKeepsKColumns)
{
  std::mt19937_64 rng(15);
  const Mat y = centred_random(30, 2, rng);
  const Mat x = centred_random(30, 4, rng);
  const CanonicalVariables cv = canonical_variables(y, x, cca(y, x), false);
  EXPECT_EQ(cv.u.cols(), 2);
  EXPECT_EQ(cv.v.cols(), 2);
}
