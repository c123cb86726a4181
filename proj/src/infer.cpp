#include "permcca/infer.hpp"

#include "permcca/error.hpp"
#include "permcca/parallel.hpp"
#include "permcca/pca.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace permcca {

namespace {

constexpr double kLogFloor = 1e-15;

double neg_log_sum(const double* r2, Index count)
{
  double total = 0.0;
  for (Index i = 0; i < count; ++i)
    total -= std::log(std::max(1.0 - r2[i], kLogFloor));
  return total;
}

void check_component(const Vec& r, Index k)
{
  if (k < 1 || k > r.size())
    throw Error(ErrorCode::InvalidOptions, "component index " + std::to_string(k) + " outside 1.." +
                                               std::to_string(r.size()));
}

// A constant, nonzero column is taken to be the intercept.
bool has_intercept(const Mat& m)
{
  for (Index c = 0; c < m.cols(); ++c) {
    const double hi = m.col(c).maxCoeff();
    const double lo = m.col(c).minCoeff();
    const double scale = m.col(c).cwiseAbs().maxCoeff();
    if (scale > 0.0 && hi - lo <= 1e-12 * scale)
      return true;
  }
  return false;
}

Index count_without_intercept(const std::optional<Mat>& m)
{
  if (!m || m->cols() == 0)
    return 0;
  return m->cols() - (has_intercept(*m) ? 1 : 0);
}

// Orthonormal bases whose leading m columns span the trailing m columns of
// the input, for every m. Built by an unpivoted QR of the column-reversed
// matrix.
Mat nested_basis(const Mat& m, const char* side)
{
  const Mat reversed = m.rowwise().reverse();
  Eigen::HouseholderQR<Mat> qr(reversed);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  const double top = diag.size() > 0 ? diag.maxCoeff() : 0.0;
  if (m.rows() < m.cols() || top == 0.0 || diag.minCoeff() <= kQrRankTol * top)
    throw Error(ErrorCode::RankDeficient, std::string("canonical variables of the ") + side +
                                              " side are rank deficient");
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

void gather_rows(const Mat& src, const Permutation& perm, Mat& dst)
{
  dst.resize(src.rows(), src.cols());
  for (Index i = 0; i < src.rows(); ++i)
    dst.row(i) = src.row(perm[static_cast<std::size_t>(i)]);
}

struct Prepared {
  PreparedSides sides;
  CanonicalVariables vars;  // in the reduced spaces (N' and N'' rows)
  Vec r;
  Index k = 0;
  bool restore = false;     // place permuted data back into N rows
  Index r_dof = 0;
  Index s_dof = 0;
  ProblemDims dims;
  Index nuisance_c = 0;
};

Prepared prepare(const Dataset& data, const InferenceOptions& options)
{
  if (data.y.cols() == 0 || data.x.cols() == 0)
    throw Error(ErrorCode::InvalidDims, "Y and X need at least one column each");
  require_finite(data.y, "Y");
  require_finite(data.x, "X");
  if (data.z)
    require_finite(*data.z, "Z");
  if (data.w)
    require_finite(*data.w, "W");
  const bool has_nuisance = (data.z && data.z->cols() > 0) || (data.w && data.w->cols() > 0);
  if (data.blocks && has_nuisance && !data.selection)
    throw Error(ErrorCode::InvalidOptions,
                "exchangeability blocks with nuisance variables require a Theil selection plan; "
                "the Huh-Jhun basis does not preserve the block structure");

  Prepared out;
  out.sides = prepare_sides(data.y, data.x, data.z, data.w, data.partial, data.selection);
  PreparedSides& s = out.sides;
  if (options.pca_left)
    s.yt = apply_pca(s.yt, *options.pca_left);
  if (options.pca_right)
    s.xt = apply_pca(s.xt, *options.pca_right);

  const Index n = data.y.rows();
  out.dims = ProblemDims{n, s.yt.cols(), s.xt.cols(), s.r, s.s};
  if (n < out.dims.p + out.dims.q)
    throw Error(ErrorCode::InvalidDims, "need N >= P + Q (N=" + std::to_string(n) + ", P=" +
                                            std::to_string(out.dims.p) + ", Q=" + std::to_string(out.dims.q) + ")");
  out.k = out.dims.k();
  out.restore = !s.shared;
  const Index extra = data.centered ? 1 : 0;
  out.r_dof = s.r + extra;
  out.s_dof = s.s + extra;
  out.nuisance_c = data.centered ? std::max(data.z ? data.z->cols() : 0, data.w ? data.w->cols() : 0)
                                 : std::max(count_without_intercept(data.z), count_without_intercept(data.w));
  if (data.partial && !data.w)
    out.nuisance_c = data.centered ? (data.z ? data.z->cols() : 0) : count_without_intercept(data.z);

  // With distinct bases the two reduced sides have different row spaces; the
  // initial fit is taken on the residualised data in observation space.
  const CcaFit fit = out.restore ? cca(s.qz.restore(s.yt), s.qw.restore(s.xt), out.r_dof, out.s_dof)
                                 : cca(s.yt, s.xt, out.r_dof, out.s_dof);
  out.r = fit.r;
  out.vars = canonical_variables(s.yt, s.xt, fit, options.augment_null_space);
  return out;
}

double statistic_from_r2(StatisticKind kind, const double* r2, Index count)
{
  return kind == StatisticKind::Roy ? r2[0] : neg_log_sum(r2, count);
}

// Squared singular values of `block`, descending, written to `out`.
void squared_singular_values(const Mat& block, Mat& gram, Eigen::SelfAdjointEigenSolver<Mat>& solver,
                             std::vector<double>& out)
{
  if (block.rows() <= block.cols())
    gram.noalias() = block * block.transpose();
  else
    gram.noalias() = block.transpose() * block;
  const Index m = gram.rows();
  out.resize(static_cast<std::size_t>(m));
  if (m == 1) {
    out[0] = std::clamp(gram(0, 0), 0.0, 1.0);
    return;
  }
  solver.compute(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "eigenvalue iteration did not converge");
  const Vec& ev = solver.eigenvalues();
  for (Index i = 0; i < m; ++i)
    out[static_cast<std::size_t>(i)] = std::clamp(ev(m - 1 - i), 0.0, 1.0);
}

class Evaluator {
public:
  virtual ~Evaluator() = default;
  // Statistics for every k (K values) under one permutation pair.
  virtual void evaluate(const PermutationPair& pair, unsigned worker, double* out) const = 0;
};

// One QR per side for the whole analysis. For permutation P (left) and Px
// (right), the k-th reduced problem has correlations equal to the singular
// values of the top-left (P'-k+1) x (Q'-k+1) block of
//   (P QU)' C (Px QV),  C = Qz'Qw (I when the row space is shared),
// because the leading columns of QU/QV span the trailing canonical variables.
class FastEvaluator final : public Evaluator {
public:
  FastEvaluator(const Prepared& prep, const InferenceOptions& options, unsigned workers)
      : kind_(options.stat), stepwise_(options.stepwise), k_(prep.k), shared_(!prep.restore)
  {
    qu_ = nested_basis(prep.vars.u, "left");
    qv_ = nested_basis(prep.vars.v, "right");
    const SemiOrthoBasis& qz = prep.sides.qz;
    const SemiOrthoBasis& qw = prep.sides.qw;
    if (!shared_) {
      if (qz.is_identity())
        cross_ = qw.q;
      else if (qw.is_identity())
        cross_ = qz.q.transpose();
      else
        cross_ = qz.q.transpose() * qw.q;
      right0_ = cross_ * qv_;
    } else {
      right0_ = qv_;
    }
    scratch_.resize(workers);
    for (auto& s : scratch_)
      s.solver = Eigen::SelfAdjointEigenSolver<Mat>(std::max(qu_.cols(), qv_.cols()));
  }

  void evaluate(const PermutationPair& pair, unsigned worker, double* out) const override
  {
    Scratch& s = scratch_[worker];
    gather_rows(qu_, pair.y, s.left);
    const Mat* right = &right0_;
    if (!is_identity(pair.x)) {
      gather_rows(qv_, pair.x, s.gathered);
      if (shared_) {
        right = &s.gathered;
      } else {
        s.right.noalias() = cross_ * s.gathered;
        right = &s.right;
      }
    }
    s.full.noalias() = s.left.transpose() * (*right);

    const Index pu = qu_.cols();
    const Index pv = qv_.cols();
    if (!stepwise_) {
      squared_singular_values(s.full, s.gram, s.solver, s.r2);
      for (Index k = 0; k < k_; ++k)
        out[k] = statistic_from_r2(kind_, s.r2.data() + k, static_cast<Index>(s.r2.size()) - k);
      return;
    }
    for (Index k = 0; k < k_; ++k) {
      s.block = s.full.topLeftCorner(pu - k, pv - k);
      squared_singular_values(s.block, s.gram, s.solver, s.r2);
      out[k] = statistic_from_r2(kind_, s.r2.data(), static_cast<Index>(s.r2.size()));
    }
  }

private:
  struct Scratch {
    Mat left, gathered, right, full, block, gram;
    Eigen::SelfAdjointEigenSolver<Mat> solver;
    std::vector<double> r2;
  };

  StatisticKind kind_;
  bool stepwise_;
  Index k_;
  bool shared_;
  Mat qu_, qv_, cross_, right0_;
  mutable std::vector<Scratch> scratch_;
};

// Literal form: place each permuted side and call cca() per reduced problem.
class ReferenceEvaluator final : public Evaluator {
public:
  ReferenceEvaluator(const Prepared& prep, const InferenceOptions& options)
      : prep_(prep), kind_(options.stat), stepwise_(options.stepwise)
  {
  }

  void evaluate(const PermutationPair& pair, unsigned, double* out) const override
  {
    const Mat& u = prep_.vars.u;
    const Mat& v = prep_.vars.v;
    const Index k_count = prep_.k;
    auto run = [&](Index first) {
      const Mat left = place_permutation(u.rightCols(u.cols() - first), prep_.sides.qz, pair.y, prep_.restore);
      const Mat right = place_permutation(v.rightCols(v.cols() - first), prep_.sides.qw, pair.x, prep_.restore);
      return cca(left, right, prep_.r_dof, prep_.s_dof).r;
    };
    if (!stepwise_) {
      const Vec r = run(0);
      for (Index k = 0; k < k_count; ++k)
        out[k] = kind_ == StatisticKind::Roy ? roy_stat(r, k + 1) : wilks_stat(r, k + 1);
      return;
    }
    for (Index k = 0; k < k_count; ++k) {
      const Vec r = run(k);
      out[k] = kind_ == StatisticKind::Roy ? roy_stat(r, 1) : wilks_stat(r, 1);
    }
  }

private:
  const Prepared& prep_;
  StatisticKind kind_;
  bool stepwise_;
};

PermutationScheme scheme_for(const Dataset& data, const InferenceOptions& options, const Prepared& prep)
{
  std::optional<BlockStructure> blocks;
  if (data.blocks) {
    if (static_cast<Index>(data.blocks->size()) != data.y.rows())
      throw Error(ErrorCode::InvalidBlocks, "block labels cover " + std::to_string(data.blocks->size()) +
                                                " observations, data has " + std::to_string(data.y.rows()));
    if (data.selection) {
      std::vector<std::ptrdiff_t> keep(data.selection->keep.begin(), data.selection->keep.end());
      blocks = data.blocks->subset(keep);
    } else {
      blocks = data.blocks;
    }
  }
  const auto n1 = static_cast<std::size_t>(prep.sides.qz.cols());
  const auto n2 = static_cast<std::size_t>(prep.sides.qw.cols());
  // Only Huh-Jhun bases of different rank need independent right-side draws.
  const bool both_sides = prep.restore && !data.selection && n1 != n2;
  return build_scheme(n1, n2, options.permutations, blocks ? &*blocks : nullptr, both_sides, options.seed);
}

void check_scheme(const PermutationScheme& scheme, const Prepared& prep)
{
  if (scheme.size() < 2)
    throw Error(ErrorCode::InvalidOptions, "a permutation scheme needs at least 2 entries");
  const auto n1 = static_cast<std::size_t>(prep.sides.qz.cols());
  const auto n2 = static_cast<std::size_t>(prep.sides.qw.cols());
  const PermutationPair& first = scheme.pairs.front();
  if (first.y.size() != n1 || first.x.size() != n2 || !is_identity(first.y) || !is_identity(first.x))
    throw Error(ErrorCode::InvalidOptions, "the first entry of a permutation scheme must be the identity "
                                           "over the reduced row spaces");
  for (const auto& pair : scheme.pairs)
    if (pair.y.size() != n1 || pair.x.size() != n2)
      throw Error(ErrorCode::DimensionMismatch, "permutation length does not match the reduced row spaces");
}

InferenceResult run(const Dataset& data, const InferenceOptions& options, const Prepared& prep,
                    const PermutationScheme& scheme, InferenceTrace* trace)
{
  check_scheme(scheme, prep);
  const Index k_count = prep.k;
  const std::size_t j_count = scheme.size();
  const unsigned workers = resolve_threads(options.threads);

  std::unique_ptr<Evaluator> evaluator;
  if (options.engine == Engine::Fast)
    evaluator = std::make_unique<FastEvaluator>(prep, options, workers);
  else
    evaluator = std::make_unique<ReferenceEvaluator>(prep, options);

  if (trace) {
    trace->first_shapes.clear();
    const Index rows = prep.restore ? data.y.rows() : prep.sides.yt.rows();
    const Index pu = prep.vars.u.cols();
    const Index pv = prep.vars.v.cols();
    if (options.stepwise)
      for (Index k = 0; k < k_count; ++k)
        trace->first_shapes.push_back({rows, pu - k, pv - k});
    else
      trace->first_shapes.push_back({rows, pu, pv});
  }
  const std::size_t problems_per_perm = options.stepwise ? static_cast<std::size_t>(k_count) : 1;
  const std::size_t wilks_per_perm = options.stat == StatisticKind::Wilks ? static_cast<std::size_t>(k_count) : 0;

  InferenceResult result;
  result.r = prep.r;
  result.dims = prep.dims;
  result.permutations = j_count;
  result.group_smaller_than_j = scheme.group_smaller_than_j;
  result.stat0.resize(k_count);
  evaluator->evaluate(scheme.pairs[0], 0, result.stat0.data());

  Mat stats;
  if (options.compute_max_pvalues) {
    stats.resize(static_cast<Index>(j_count), k_count);
    stats.row(0) = result.stat0.transpose();
  }

  // Per-worker integer tallies: summation order cannot change the result.
  std::vector<std::vector<std::size_t>> tallies(workers, std::vector<std::size_t>(static_cast<std::size_t>(k_count), 0));
  std::vector<std::vector<double>> rows(workers, std::vector<double>(static_cast<std::size_t>(k_count)));
  parallel_for(1, j_count, workers, [&](unsigned worker, std::size_t j) {
    double* out = rows[worker].data();
    evaluator->evaluate(scheme.pairs[j], worker, out);
    auto& tally = tallies[worker];
    for (Index k = 0; k < k_count; ++k)
      if (out[k] >= result.stat0(k))
        ++tally[static_cast<std::size_t>(k)];
    if (options.compute_max_pvalues)
      for (Index k = 0; k < k_count; ++k)
        stats(static_cast<Index>(j), k) = out[k];
  });

  if (trace) {
    trace->inner_problems += problems_per_perm * j_count;
    trace->wilks_evaluations += wilks_per_perm * j_count;
  }

  result.counts.assign(static_cast<std::size_t>(k_count), 1);  // the identity always counts
  for (const auto& tally : tallies)
    for (std::size_t k = 0; k < tally.size(); ++k)
      result.counts[k] += tally[k];
  result.p_unc.resize(k_count);
  for (Index k = 0; k < k_count; ++k)
    result.p_unc(k) = static_cast<double>(result.counts[static_cast<std::size_t>(k)]) / static_cast<double>(j_count);
  result.p_fwer = adjust_closure(result.p_unc);
  if (options.compute_max_pvalues)
    result.p_max = adjust_max_distribution(stats, result.stat0);
  if (options.compute_parametric) {
    Vec p(k_count);
    for (Index k = 0; k < k_count; ++k)
      p(k) = parametric_wilks_p(prep.r, k + 1, prep.dims, prep.nuisance_c);
    result.p_param = p;
  }
  return result;
}

} // namespace

double wilks_stat(const Vec& r, Index k)
{
  check_component(r, k);
  double total = 0.0;
  for (Index i = k - 1; i < r.size(); ++i)
    total -= std::log(std::max(1.0 - r(i) * r(i), kLogFloor));
  return total;
}

double roy_stat(const Vec& r, Index k)
{
  check_component(r, k);
  return r(k - 1) * r(k - 1);
}

Vec adjust_closure(const Vec& p_unc)
{
  Vec out = p_unc;
  for (Index k = 1; k < out.size(); ++k)
    out(k) = std::max(out(k), out(k - 1));
  return out;
}

Vec adjust_max_distribution(const Mat& stats, const Vec& stat0)
{
  if (stats.cols() != stat0.size() || stats.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "adjust_max_distribution: statistics matrix does not match stat0");
  const Vec row_max = stats.rowwise().maxCoeff();
  Vec out(stat0.size());
  for (Index k = 0; k < stat0.size(); ++k)
    out(k) = static_cast<double>((row_max.array() >= stat0(k)).count()) / static_cast<double>(stats.rows());
  return out;
}

double parametric_wilks_p(const Vec& r, Index k, const ProblemDims& dims, Index c)
{
  check_component(r, k);
  const double multiplier = static_cast<double>(dims.n) - static_cast<double>(c) -
                            (static_cast<double>(dims.p + dims.q) + 3.0) / 2.0;
  if (multiplier <= 0.0)
    throw Error(ErrorCode::InvalidDims, "parametric approximation needs N - C - (P+Q+3)/2 > 0");
  const double lambda = multiplier * wilks_stat(r, k);
  const double nu = static_cast<double>((dims.p - k + 1) * (dims.q - k + 1));
  if (lambda <= 0.0)
    return 1.0;
  return boost::math::gamma_q(nu / 2.0, lambda / 2.0);
}

InferenceResult permcca(const Dataset& data, const InferenceOptions& options, InferenceTrace* trace)
{
  const Prepared prep = prepare(data, options);
  const PermutationScheme scheme = scheme_for(data, options, prep);
  return run(data, options, prep, scheme, trace);
}

InferenceResult permcca(const Dataset& data, const InferenceOptions& options, const PermutationScheme& scheme,
                        InferenceTrace* trace)
{
  const Prepared prep = prepare(data, options);
  return run(data, options, prep, scheme, trace);
}

} // namespace permcca
