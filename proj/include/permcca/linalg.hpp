#pragma once

// Dense linear-algebra kernel. Thin wrappers over Eigen that pin down the
// conventions the rest of the library relies on: descending spectra,
// deterministic signs, fixed rank tolerances and typed failures.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace permcca {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative tolerance on |R_ii| / |R_11| below which pivoted QR declares the
// input rank deficient.
inline constexpr double kQrRankTol = 1e-10;
// Scale for the pseudo-inverse / null-space singular value cutoff; the
// effective threshold is kSvdTol * max(rows, cols) * d_max.
inline constexpr double kSvdTol = 1e-12;
inline constexpr double kSymmetryTol = 1e-10;

struct QrResult {
  Mat q;                        // rows x cols, orthonormal columns
  Mat r;                        // cols x cols, upper triangular
  std::vector<Index> perm;      // column j of Q*R is column perm[j] of M
};

struct SvdResult {
  Mat left;                     // rows x min(rows, cols)
  Vec d;                        // descending, non-negative
  Mat right;                    // cols x min(rows, cols)
};

struct EigResult {
  Mat vectors;                  // orthonormal columns
  Vec values;                   // descending
};

// Throws Error{NonFinite} if any entry is NaN or infinite.
void require_finite(const Mat& m, const char* what);

double max_abs(const Mat& m);

// Householder QR with column pivoting, M*T = Q*R. Throws RankDeficient when
// rows < cols or some |R_ii| <= kQrRankTol * |R_11|.
QrResult qr_pivoted(const Mat& m);

// Permutation matrix T for a QR pivot vector, so that M*T == Q*R.
Mat permutation_matrix(const std::vector<Index>& perm);

// Thin SVD, M = L diag(d) R'. Sign convention: first non-negligible entry of
// each left singular vector is non-negative.
SvdResult svd(const Mat& m);

// Singular values only, descending.
Vec singular_values(const Mat& m);

// Symmetric eigendecomposition, eigenvalues descending. Throws NotSymmetric.
EigResult sym_eig(const Mat& m);

// Moore-Penrose pseudo-inverse.
Mat pinv(const Mat& m);

// Orthonormal basis of the orthogonal complement of the column space of M
// (i.e. null(M')); P x 0 when M has full row rank.
Mat null_basis(const Mat& m);

// Symmetric W with W*M*W = I. Throws SingularMatrix unless M is strictly PD.
Mat inv_sqrt_psd(const Mat& m);

// Numerical rank via singular values (same cutoff as pinv).
Index numerical_rank(const Mat& m);

// Flip column signs so the first entry with magnitude above a small fraction
// of the column norm is non-negative. Returns the applied signs.
Vec normalize_column_signs(Mat& m);

} // namespace permcca
