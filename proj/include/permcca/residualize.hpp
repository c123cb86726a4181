#pragma once

// Nuisance handling: residual-forming matrices, semi-orthogonal bases that
// restore exchangeability (Huh-Jhun and Theil/BLUS), and placement of
// permuted reduced-space data back into observation space.

#include "permcca/linalg.hpp"
#include "permcca/permute.hpp"

#include <optional>
#include <vector>

namespace permcca {

struct ResidualMatrix {
  Mat r;          // N x N, symmetric idempotent
  Index rank = 0; // N minus nuisance rank
};

enum class BasisMethod { Identity, HuhJhun, Theil };

// Rows kept by a Theil selection matrix S (identity rows at these indices).
struct SelectionPlan {
  Index n = 0;
  std::vector<Index> keep;  // strictly increasing, within [0, n)

  std::vector<Index> dropped() const;
  void validate() const;
};

struct SemiOrthoBasis {
  Mat q;                          // N x N' (empty when method == Identity)
  Index n = 0;                    // observation count N
  BasisMethod method = BasisMethod::Identity;
  std::vector<Index> dropped;     // Theil only

  static SemiOrthoBasis identity(Index n);
  bool is_identity() const { return method == BasisMethod::Identity; }
  Index cols() const { return is_identity() ? n : q.cols(); }

  // Q' * m (returns m unchanged for the identity basis).
  Mat project(const Mat& m) const;
  // Q * m (returns m unchanged for the identity basis).
  Mat restore(const Mat& m) const;
};

// R = I - Z Z^+. Throws RankDeficient for collinear Z.
ResidualMatrix residual_matrix(const Mat& z);

// Huh-Jhun (eigenvectors of R with eigenvalue > 0.5) when `plan` is empty,
// otherwise Theil: Q = R S' (S R S')^-1/2.
SemiOrthoBasis semiortho(const ResidualMatrix& r, const std::optional<SelectionPlan>& plan = std::nullopt);

// Deterministic choice of the max(R, S) observations to drop for Theil.
// Priority: rows belonging to blocks whose size no other block shares, then
// highest leverage, then highest index. A row is only dropped if it raises
// the rank of the dropped rows of every side that is not yet full rank.
SelectionPlan default_selection(const Mat& z, const std::optional<Mat>& w = std::nullopt,
                                const std::optional<BlockStructure>& blocks = std::nullopt);

struct PreparedSides {
  Mat yt;               // Qz' Y, N' x P
  Mat xt;               // Qw' X, N'' x Q
  SemiOrthoBasis qz;
  SemiOrthoBasis qw;
  // Both sides share one row space (full or partial CCA): permutations can be
  // applied in the reduced space without restoring N rows.
  bool shared = false;
  Index r = 0;          // nuisance rank, left
  Index s = 0;          // nuisance rank, right
};

PreparedSides prepare_sides(const Mat& y, const Mat& x, const std::optional<Mat>& z,
                            const std::optional<Mat>& w, bool partial,
                            const std::optional<SelectionPlan>& plan = std::nullopt);

// Row i of the result is row perm[i] of m.
Mat permute_rows(const Mat& m, const Permutation& perm);

// Q P (reduced) when `restore_rows`, P (reduced) otherwise. `reduced` is data
// already in the basis' reduced space (e.g. Qz' Y).
Mat place_permutation(const Mat& reduced, const SemiOrthoBasis& basis, const Permutation& perm,
                      bool restore_rows);

} // namespace permcca
