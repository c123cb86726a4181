#include "permcca/cca.hpp"

#include "permcca/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace permcca {

Mat center_columns(const Mat& m)
{
  if (m.rows() < 2)
    throw Error(ErrorCode::InvalidDims, "center_columns: need at least 2 rows");
  return m.rowwise() - m.colwise().mean();
}

namespace {

// T * R^-1 * L: back substitution, then undo the column pivoting.
Mat coefficients(const QrResult& qr, const Mat& l, double scale)
{
  Mat z = qr.r.triangularView<Eigen::Upper>().solve(l);
  Mat out(z.rows(), z.cols());
  for (std::size_t j = 0; j < qr.perm.size(); ++j)
    out.row(qr.perm[j]) = z.row(static_cast<Index>(j));
  return out * scale;
}

} // namespace

CcaFit cca(const Mat& y, const Mat& x, Index r_dof, Index s_dof)
{
  if (y.rows() != x.rows())
    throw Error(ErrorCode::DimensionMismatch, "cca: Y has " + std::to_string(y.rows()) +
                                                  " rows but X has " + std::to_string(x.rows()));
  const Index k = std::min(y.cols(), x.cols());
  if (k == 0)
    throw Error(ErrorCode::InvalidDims, "cca: both sides need at least one column");

  const QrResult qy = qr_pivoted(y);
  const QrResult qx = qr_pivoted(x);
  const SvdResult f = svd(qy.q.transpose() * qx.q);

  const auto n = static_cast<double>(y.rows());
  CcaFit fit;
  fit.r = f.d.head(k).cwiseMax(0.0).cwiseMin(1.0);
  fit.a = coefficients(qy, f.left.leftCols(k), std::sqrt(std::max(n - static_cast<double>(r_dof), 1.0)));
  fit.b = coefficients(qx, f.right.leftCols(k), std::sqrt(std::max(n - static_cast<double>(s_dof), 1.0)));
  return fit;
}

CovBlocks covariance_blocks(const Mat& y, const Mat& x)
{
  if (y.rows() != x.rows())
    throw Error(ErrorCode::DimensionMismatch, "covariance_blocks: row counts differ");
  const Mat yc = center_columns(y);
  const Mat xc = center_columns(x);
  const double denom = static_cast<double>(y.rows() - 1);
  return CovBlocks{yc.transpose() * yc / denom, xc.transpose() * xc / denom, yc.transpose() * xc / denom};
}

Vec cca_eig_oracle(const CovBlocks& cov)
{
  const Index p = cov.syy.rows();
  const Index q = cov.sxx.rows();
  if (cov.syx.rows() != p || cov.syx.cols() != q)
    throw Error(ErrorCode::DimensionMismatch, "cca_eig_oracle: Syx shape does not match Syy/Sxx");

  const Mat wy = inv_sqrt_psd(cov.syy);
  const Mat wx = inv_sqrt_psd(cov.sxx);
  const Mat cross = wy * cov.syx * wx;
  Mat sym = cross * cross.transpose();
  sym = 0.5 * (sym + sym.transpose());
  const EigResult e = sym_eig(sym);

  const Index k = std::min(p, q);
  Vec r(k);
  for (Index i = 0; i < k; ++i)
    r(i) = std::sqrt(std::clamp(e.values(i), 0.0, 1.0));
  return r;
}

CanonicalVariables canonical_variables(const Mat& y, const Mat& x, const CcaFit& fit, bool augment)
{
  if (y.cols() != fit.a.rows() || x.cols() != fit.b.rows())
    throw Error(ErrorCode::DimensionMismatch, "canonical_variables: coefficients do not match data");
  // Row counts may differ: in part/bipartial problems each side lives in its
  // own residual space.
  CanonicalVariables out;
  if (!augment) {
    out.u = y * fit.a;
    out.v = x * fit.b;
    return out;
  }
  Mat a_full(fit.a.rows(), y.cols());
  a_full << fit.a, null_basis(fit.a);
  Mat b_full(fit.b.rows(), x.cols());
  b_full << fit.b, null_basis(fit.b);
  out.u = y * a_full;
  out.v = x * b_full;
  return out;
}

} // namespace permcca
