#include "permcca/residualize.hpp"

#include "permcca/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

namespace permcca {

std::vector<Index> SelectionPlan::dropped() const
{
  std::vector<Index> out;
  std::size_t next = 0;
  for (Index i = 0; i < n; ++i) {
    if (next < keep.size() && keep[next] == i)
      ++next;
    else
      out.push_back(i);
  }
  return out;
}

void SelectionPlan::validate() const
{
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= n)
      throw Error(ErrorCode::InvalidOptions, "selection index " + std::to_string(keep[i]) +
                                                 " outside [0, " + std::to_string(n) + ")");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw Error(ErrorCode::InvalidOptions, "selection indices must be strictly increasing");
  }
}

SemiOrthoBasis SemiOrthoBasis::identity(Index n)
{
  SemiOrthoBasis b;
  b.n = n;
  b.method = BasisMethod::Identity;
  return b;
}

Mat SemiOrthoBasis::project(const Mat& m) const
{
  if (is_identity())
    return m;
  if (m.rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "basis projection: data has " + std::to_string(m.rows()) +
                                                  " rows, basis expects " + std::to_string(n));
  return q.transpose() * m;
}

Mat SemiOrthoBasis::restore(const Mat& m) const
{
  if (is_identity())
    return m;
  if (m.rows() != q.cols())
    throw Error(ErrorCode::DimensionMismatch, "basis restore: data has " + std::to_string(m.rows()) +
                                                  " rows, basis has " + std::to_string(q.cols()) + " columns");
  return q * m;
}

ResidualMatrix residual_matrix(const Mat& z)
{
  require_finite(z, "residual_matrix");
  if (numerical_rank(z) < z.cols())
    throw Error(ErrorCode::RankDeficient, "nuisance matrix with " + std::to_string(z.cols()) +
                                              " columns is not of full column rank");
  const Index n = z.rows();
  ResidualMatrix out;
  Mat r = Mat::Identity(n, n) - z * pinv(z);
  out.r = 0.5 * (r + r.transpose());
  out.rank = n - z.cols();
  return out;
}

SemiOrthoBasis semiortho(const ResidualMatrix& r, const std::optional<SelectionPlan>& plan)
{
  const Index n = r.r.rows();
  SemiOrthoBasis out;
  out.n = n;

  if (!plan) {
    out.method = BasisMethod::HuhJhun;
    const EigResult e = sym_eig(r.r);
    // Eigenvalues of a projector are 0 or 1.
    Index keep = 0;
    while (keep < e.values.size() && e.values(keep) > 0.5)
      ++keep;
    out.q = e.vectors.leftCols(keep);
    return out;
  }

  if (plan->n != n)
    throw Error(ErrorCode::DimensionMismatch, "selection plan covers " + std::to_string(plan->n) +
                                                  " observations, residual matrix " + std::to_string(n));
  plan->validate();
  out.method = BasisMethod::Theil;
  out.dropped = plan->dropped();
  const Mat rs = r.r(Eigen::all, plan->keep);
  const Mat srs = r.r(plan->keep, plan->keep);
  Mat w;
  try {
    w = inv_sqrt_psd(srs);
  } catch (const Error&) {
    throw Error(ErrorCode::SingularMatrix,
                "Theil basis: S R S' is singular; the dropped rows of the nuisance matrix are not full rank");
  }
  out.q = rs * w;
  return out;
}

namespace {

Index rank_of_rows(const Mat& m, const std::vector<Index>& rows)
{
  if (rows.empty() || m.cols() == 0)
    return 0;
  return numerical_rank(m(rows, Eigen::all));
}

Vec leverage(const Mat& z)
{
  return (z * pinv(z)).diagonal();
}

} // namespace

SelectionPlan default_selection(const Mat& z, const std::optional<Mat>& w,
                                const std::optional<BlockStructure>& blocks)
{
  const Index n = z.rows();
  if (w && w->rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "default_selection: Z and W row counts differ");
  if (blocks && static_cast<Index>(blocks->size()) != n)
    throw Error(ErrorCode::InvalidBlocks, "default_selection: block labels do not match observation count");

  const Index rz = numerical_rank(z);
  const Index rw = w ? numerical_rank(*w) : 0;
  const Index drop = std::max(rz, rw);
  if (drop >= n)
    throw Error(ErrorCode::NoValidSelection, "cannot drop " + std::to_string(drop) + " of " +
                                                 std::to_string(n) + " observations");

  Vec lev = leverage(z);
  if (w)
    lev += leverage(*w);

  std::vector<int> unique_block(static_cast<std::size_t>(n), 0);
  if (blocks) {
    std::map<int, Index> block_size;
    for (int label : blocks->labels)
      ++block_size[label];
    std::map<Index, int> size_count;
    for (const auto& [label, size] : block_size)
      ++size_count[size];
    for (Index i = 0; i < n; ++i)
      unique_block[static_cast<std::size_t>(i)] =
          size_count[block_size[blocks->labels[static_cast<std::size_t>(i)]]] == 1 ? 1 : 0;
  }

  // Leverages are quantised so that exact ties (e.g. intercept-only Z) are
  // not broken by rounding noise.
  std::vector<std::tuple<int, long long, Index>> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    order.emplace_back(unique_block[static_cast<std::size_t>(i)], std::llround(lev(i) * 1e9), i);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a > b; });

  std::vector<Index> chosen;
  Index have_z = 0;
  Index have_w = 0;
  for (const auto& entry : order) {
    if (static_cast<Index>(chosen.size()) == drop)
      break;
    const Index row = std::get<2>(entry);
    std::vector<Index> trial = chosen;
    trial.push_back(row);
    const Index tz = rank_of_rows(z, trial);
    const Index tw = w ? rank_of_rows(*w, trial) : 0;
    const bool ok_z = have_z == rz || tz > have_z;
    const bool ok_w = !w || have_w == rw || tw > have_w;
    if (ok_z && ok_w) {
      chosen = std::move(trial);
      have_z = tz;
      have_w = tw;
    }
  }
  if (static_cast<Index>(chosen.size()) != drop || have_z != rz || have_w != rw)
    throw Error(ErrorCode::NoValidSelection, "no set of " + std::to_string(drop) +
                                                 " observations with full-rank nuisance rows was found");

  std::sort(chosen.begin(), chosen.end());
  SelectionPlan plan;
  plan.n = n;
  std::size_t next = 0;
  for (Index i = 0; i < n; ++i) {
    if (next < chosen.size() && chosen[next] == i)
      ++next;
    else
      plan.keep.push_back(i);
  }
  return plan;
}

PreparedSides prepare_sides(const Mat& y, const Mat& x, const std::optional<Mat>& z,
                            const std::optional<Mat>& w, bool partial, const std::optional<SelectionPlan>& plan)
{
  const Index n = y.rows();
  if (x.rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "Y has " + std::to_string(n) + " rows but X has " +
                                                  std::to_string(x.rows()));
  if (z && z->rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "Z has " + std::to_string(z->rows()) + " rows, expected " +
                                                  std::to_string(n));
  if (w && w->rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "W has " + std::to_string(w->rows()) + " rows, expected " +
                                                  std::to_string(n));

  // Under Theil a side without nuisance still goes through S so that both
  // sides keep the same observation-to-row mapping.
  auto basis_for = [&](const std::optional<Mat>& nuisance, Index& rank) {
    if (nuisance && nuisance->cols() > 0) {
      const ResidualMatrix r = residual_matrix(*nuisance);
      rank = n - r.rank;
      return semiortho(r, plan);
    }
    rank = 0;
    if (plan) {
      ResidualMatrix none{Mat::Identity(n, n), n};
      return semiortho(none, plan);
    }
    return SemiOrthoBasis::identity(n);
  };

  PreparedSides out;
  out.qz = basis_for(z, out.r);
  const bool reuse = !w && partial;
  if (reuse) {
    out.qw = out.qz;
    out.s = out.r;
  } else {
    out.qw = basis_for(w, out.s);
  }
  // Shared row space: the same basis on both sides (partial, or no nuisance
  // at all).
  out.shared = reuse || (!z && !w);
  out.yt = out.qz.project(y);
  out.xt = out.qw.project(x);
  return out;
}

Mat permute_rows(const Mat& m, const Permutation& perm)
{
  if (static_cast<Index>(perm.size()) != m.rows())
    throw Error(ErrorCode::DimensionMismatch, "permutation of length " + std::to_string(perm.size()) +
                                                  " applied to " + std::to_string(m.rows()) + " rows");
  Mat out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    out.row(i) = m.row(perm[static_cast<std::size_t>(i)]);
  return out;
}

Mat place_permutation(const Mat& reduced, const SemiOrthoBasis& basis, const Permutation& perm, bool restore_rows)
{
  if (static_cast<Index>(perm.size()) != basis.cols())
    throw Error(ErrorCode::DimensionMismatch, "permutation length " + std::to_string(perm.size()) +
                                                  " does not match basis with " + std::to_string(basis.cols()) +
                                                  " columns");
  Mat permuted = permute_rows(reduced, perm);
  return restore_rows ? basis.restore(permuted) : permuted;
}

} // namespace permcca
