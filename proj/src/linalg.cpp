#include "permcca/linalg.hpp"

#include "permcca/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace permcca {

void require_finite(const Mat& m, const char* what)
{
  if (!m.allFinite())
    throw Error(ErrorCode::NonFinite, std::string(what) + ": matrix contains NaN or Inf");
}

double max_abs(const Mat& m)
{
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Vec normalize_column_signs(Mat& m)
{
  Vec signs = Vec::Ones(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double scale = m.col(j).cwiseAbs().maxCoeff();
    if (scale == 0.0)
      continue;
    for (Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > 1e-8 * scale) {
        if (m(i, j) < 0.0) {
          m.col(j) *= -1.0;
          signs(j) = -1.0;
        }
        break;
      }
    }
  }
  return signs;
}

QrResult qr_pivoted(const Mat& m)
{
  require_finite(m, "qr_pivoted");
  const Index rows = m.rows();
  const Index cols = m.cols();
  if (rows < cols)
    throw Error(ErrorCode::RankDeficient,
                "qr_pivoted: " + std::to_string(rows) + " rows cannot hold " +
                    std::to_string(cols) + " independent columns");

  QrResult out;
  if (cols == 0) {
    out.q = Mat(rows, 0);
    out.r = Mat(0, 0);
    return out;
  }

  Eigen::ColPivHouseholderQR<Mat> qr(m);
  out.r = qr.matrixQR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  const double lead = std::abs(out.r(0, 0));
  for (Index i = 0; i < cols; ++i) {
    if (lead == 0.0 || std::abs(out.r(i, i)) <= kQrRankTol * lead)
      throw Error(ErrorCode::RankDeficient,
                  "qr_pivoted: numerical rank " + std::to_string(i) + " < " + std::to_string(cols) +
                      " columns");
  }
  out.q = qr.householderQ() * Mat::Identity(rows, cols);

  const Eigen::MatrixXi t = qr.colsPermutation().toDenseMatrix();
  out.perm.assign(static_cast<std::size_t>(cols), 0);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < cols; ++i)
      if (t(i, j) == 1)
        out.perm[static_cast<std::size_t>(j)] = i;
  return out;
}

Mat permutation_matrix(const std::vector<Index>& perm)
{
  const auto n = static_cast<Index>(perm.size());
  Mat t = Mat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    t(perm[static_cast<std::size_t>(j)], j) = 1.0;
  return t;
}

SvdResult svd(const Mat& m)
{
  require_finite(m, "svd");
  const Index k = std::min(m.rows(), m.cols());
  SvdResult out;
  if (k == 0) {
    out.left = Mat(m.rows(), 0);
    out.right = Mat(m.cols(), 0);
    out.d = Vec(0);
    return out;
  }
  Eigen::JacobiSVD<Mat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "svd: iteration did not converge");
  out.left = solver.matrixU();
  out.right = solver.matrixV();
  out.d = solver.singularValues();
  const Vec signs = normalize_column_signs(out.left);
  for (Index j = 0; j < k; ++j)
    out.right.col(j) *= signs(j);
  return out;
}

Vec singular_values(const Mat& m)
{
  if (std::min(m.rows(), m.cols()) == 0)
    return Vec(0);
  Eigen::JacobiSVD<Mat> solver(m);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "singular_values: iteration did not converge");
  return solver.singularValues();
}

namespace {

void require_symmetric(const Mat& m, const char* what)
{
  if (m.rows() != m.cols())
    throw Error(ErrorCode::NotSymmetric, std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, max_abs(m));
  if (max_abs(m - m.transpose()) > kSymmetryTol * scale)
    throw Error(ErrorCode::NotSymmetric, std::string(what) + ": matrix is not symmetric");
}

} // namespace

EigResult sym_eig(const Mat& m)
{
  require_finite(m, "sym_eig");
  require_symmetric(m, "sym_eig");
  EigResult out;
  if (m.rows() == 0) {
    out.vectors = Mat(0, 0);
    out.values = Vec(0);
    return out;
  }
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> solver(sym);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "sym_eig: iteration did not converge");
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  normalize_column_signs(out.vectors);
  return out;
}

namespace {

double svd_cutoff(const Mat& m, const Vec& d)
{
  if (d.size() == 0)
    return 0.0;
  return kSvdTol * static_cast<double>(std::max(m.rows(), m.cols())) * d(0);
}

} // namespace

Mat pinv(const Mat& m)
{
  const SvdResult f = svd(m);
  Mat out = Mat::Zero(m.cols(), m.rows());
  const double cut = svd_cutoff(m, f.d);
  for (Index i = 0; i < f.d.size(); ++i) {
    if (f.d(i) > cut && f.d(i) > 0.0)
      out.noalias() += f.right.col(i) * (1.0 / f.d(i)) * f.left.col(i).transpose();
  }
  return out;
}

Index numerical_rank(const Mat& m)
{
  const Vec d = singular_values(m);
  const double cut = svd_cutoff(m, d);
  Index rank = 0;
  for (Index i = 0; i < d.size(); ++i)
    if (d(i) > cut && d(i) > 0.0)
      ++rank;
  return rank;
}

Mat null_basis(const Mat& m)
{
  require_finite(m, "null_basis");
  const Index p = m.rows();
  if (m.cols() == 0 || p == 0)
    return Mat::Identity(p, p);
  Eigen::JacobiSVD<Mat> solver(m, Eigen::ComputeFullU);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "null_basis: iteration did not converge");
  const Vec& d = solver.singularValues();
  const double cut = svd_cutoff(m, d);
  Index rank = 0;
  for (Index i = 0; i < d.size(); ++i)
    if (d(i) > cut && d(i) > 0.0)
      ++rank;
  Mat basis = solver.matrixU().rightCols(p - rank);
  normalize_column_signs(basis);
  return basis;
}

Mat inv_sqrt_psd(const Mat& m)
{
  const EigResult e = sym_eig(m);
  const Index n = e.values.size();
  if (n == 0)
    return Mat(0, 0);
  const double top = e.values(0);
  const double bottom = e.values(n - 1);
  if (top <= 0.0 || bottom <= 1e-10 * top)
    throw Error(ErrorCode::SingularMatrix,
                "inv_sqrt_psd: matrix is not strictly positive definite (min eigenvalue " +
                    std::to_string(bottom) + ")");
  const Vec scale = e.values.cwiseSqrt().cwiseInverse();
  Mat w = e.vectors * scale.asDiagonal() * e.vectors.transpose();
  return 0.5 * (w + w.transpose());
}

} // namespace permcca
