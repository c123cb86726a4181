#pragma once

#include "permcca/linalg.hpp"

#include <cstddef>

namespace permcca {

// Sizes of one CCA problem. R and S count nuisance columns on the left and
// right (intercept included when one is used).
struct ProblemDims {
  Index n = 0;
  Index p = 0;
  Index q = 0;
  Index r = 0;
  Index s = 0;

  Index k() const { return std::min(p, q); }
  Index n_prime() const { return n - r; }
  Index n_double_prime() const { return n - s; }
};

struct CcaFit {
  Mat a;   // P x K
  Mat b;   // Q x K
  Vec r;   // K correlations, descending, in [0, 1]
};

struct CovBlocks {
  Mat syy;
  Mat sxx;
  Mat syx;
};

Mat center_columns(const Mat& m);

// Canonical correlation analysis by pivoted QR of each block followed by an
// SVD of Q_Y'Q_X. Inputs are used as given: no centering or residualisation
// happens here. `r_dof` and `s_dof` only scale the coefficients so that the
// canonical variables have unit variance; correlations do not depend on them.
CcaFit cca(const Mat& y, const Mat& x, Index r_dof = 0, Index s_dof = 0);

// Sample covariance blocks of column-centred data.
CovBlocks covariance_blocks(const Mat& y, const Mat& x);

// Reference path: square roots of the eigenvalues of
// Syy^-1 Syx Sxx^-1 Sxy, computed through the symmetric form
// Syy^-1/2 Syx Sxx^-1 Sxy Syy^-1/2. Used to cross-check cca().
Vec cca_eig_oracle(const CovBlocks& cov);

struct CanonicalVariables {
  Mat u;   // N x P (augmented) or N x K
  Mat v;   // N x Q (augmented) or N x K
};

// U = Y[A, null(A')], V = X[B, null(B')] when `augment` is set; otherwise the
// bare U = YA, V = XB (kept to reproduce the invalid no-null-space variant).
CanonicalVariables canonical_variables(const Mat& y, const Mat& x, const CcaFit& fit, bool augment);

} // namespace permcca
