#pragma once

// Permutation inference for CCA: initial fit, null-space augmentation,
// stepwise re-estimation at every permutation, exceedance counting and
// closed-testing (cumulative maximum) FWER adjustment.

#include "permcca/cca.hpp"
#include "permcca/linalg.hpp"
#include "permcca/permute.hpp"
#include "permcca/residualize.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

namespace permcca {

enum class StatisticKind { Wilks, Roy };

// Fast: one QR per side per analysis, nested bases shared across steps.
// Reference: place every permutation and call cca() on each reduced problem,
// exactly as the algorithm is written. Both give the same counts.
enum class Engine { Fast, Reference };

struct Dataset {
  Mat y;
  Mat x;
  std::optional<Mat> z;
  std::optional<Mat> w;
  bool partial = false;
  std::optional<SelectionPlan> selection;  // present => Theil, absent => Huh-Jhun
  std::optional<BlockStructure> blocks;    // labels over the original N observations
  // Y and X were mean-centred by the caller and Z/W carry no intercept; only
  // changes the unit-variance scaling of the canonical coefficients.
  bool centered = false;
};

struct InferenceOptions {
  StatisticKind stat = StatisticKind::Wilks;
  std::size_t permutations = 1000;
  std::uint64_t seed = 0;
  bool stepwise = true;
  bool augment_null_space = true;
  bool compute_max_pvalues = false;
  bool compute_parametric = false;
  std::optional<Index> pca_left;
  std::optional<Index> pca_right;
  unsigned threads = 1;
  Engine engine = Engine::Fast;
};

// Optional instrumentation, filled while permcca runs.
struct InferenceTrace {
  std::atomic<std::size_t> inner_problems{0};
  std::atomic<std::size_t> wilks_evaluations{0};
  // (rows, left columns, right columns) of each reduced problem at the
  // unpermuted step, in order of k.
  std::vector<std::array<Index, 3>> first_shapes;
};

struct InferenceResult {
  Vec r;                              // canonical correlations, unpermuted
  Vec stat0;                          // observed statistic per k
  std::vector<std::size_t> counts;    // exceedances c_k (identity included)
  Vec p_unc;
  Vec p_fwer;
  std::optional<Vec> p_max;
  std::optional<Vec> p_param;
  std::size_t permutations = 0;
  bool group_smaller_than_j = false;
  ProblemDims dims;
};

// -sum_{i >= k} ln(1 - r_i^2), k 1-based; 1 - r^2 is floored at 1e-15.
double wilks_stat(const Vec& r, Index k);
// r_k^2, k 1-based.
double roy_stat(const Vec& r, Index k);

Vec adjust_closure(const Vec& p_unc);

// stats: J x K per-permutation statistics (row 0 unpermuted).
Vec adjust_max_distribution(const Mat& stats, const Vec& stat0);

// Upper chi-square tail of Bartlett's approximation,
// lambda_k = -(N - C - (P+Q+3)/2) ln prod_{i>=k} (1 - r_i^2), df (P-k+1)(Q-k+1).
// C counts nuisance variables other than the intercept. Throws InvalidDims
// when the multiplier is not positive.
double parametric_wilks_p(const Vec& r, Index k, const ProblemDims& dims, Index c);

// Full pipeline with a scheme built from options.seed / options.permutations
// (block labels, when present, are mapped through the selection plan).
InferenceResult permcca(const Dataset& data, const InferenceOptions& options, InferenceTrace* trace = nullptr);

// Same, with a caller-provided scheme (e.g. exhaustive enumeration).
InferenceResult permcca(const Dataset& data, const InferenceOptions& options, const PermutationScheme& scheme,
                        InferenceTrace* trace = nullptr);

} // namespace permcca
