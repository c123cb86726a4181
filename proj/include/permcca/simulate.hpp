#pragma once

// Monte-Carlo harness: synthetic scenarios, repeated permutation inference
// and error-rate / power summaries with Wilson intervals.

#include "permcca/infer.hpp"
#include "permcca/linalg.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace permcca {

enum class Distribution { Normal, StudentT, Bernoulli };
enum class Signal { None, Sparse, Dense };
enum class NuisanceCase { None, Partial, Bipartial };

struct ScenarioSpec {
  std::string id = "custom";
  Index n = 100;
  Index p = 16;
  Index q = 20;
  // Nuisance columns other than the intercept, which is always added.
  Index r = 0;
  Index s = 0;
  NuisanceCase nuisance = NuisanceCase::None;
  std::optional<Index> pca;
  Distribution distribution = Distribution::Normal;
  double nu = 4.0;            // Student t degrees of freedom
  double bernoulli_q = 0.2;
  Signal signal = Signal::None;
  // Shared-factor loadings; population canonical correlation a^2 / (1 + a^2).
  double sparse_amplitude = 1.151338957626657;   // canonical correlation 0.57
  double dense_amplitude = 0.6859943405700354;   // canonical correlation 0.32
  std::size_t permutations = 2000;
  std::size_t reps = 2000;
  // Sub-runs: one per degrees-of-freedom value / sample size when non-empty.
  std::vector<double> nu_sweep;
  std::vector<Index> n_sweep;
};

enum class ResidMethod { Simple, HuhJhun, Theil };
enum class Correction { Uncorrected = 0, Closure = 1, MaxDist = 2 };

struct Strategy {
  bool stepwise = true;
  bool null_space = true;
  ResidMethod resid = ResidMethod::HuhJhun;
  StatisticKind stat = StatisticKind::Wilks;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Rejections at the report level for one correction method.
struct PanelCounts {
  std::vector<std::size_t> per_k;
  std::size_t any = 0;   // realisations with at least one rejection
};

struct ErrorRateReport {
  ScenarioSpec spec;     // the expanded sub-run actually simulated
  Strategy strategy;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t reps = 0;
  std::array<PanelCounts, 3> panels;   // indexed by Correction

  Index components() const { return static_cast<Index>(panels[0].per_k.size()); }
  double rate(Correction c, Index k) const;          // k 1-based
  Interval ci(Correction c, Index k) const;
  double fwer(Correction c) const;
  Interval fwer_ci(Correction c) const;
};

// Table rows I..XVIII at the published scale. Case-insensitive; throws
// UnknownScenario.
ScenarioSpec scenario_by_id(const std::string& id);
std::vector<std::string> scenario_ids();

// reps = 200, J = 500.
ScenarioSpec desk_scale(ScenarioSpec spec);

// One spec per sub-run (per nu and/or per N); the spec itself when no sweep.
std::vector<ScenarioSpec> expand_scenario(const ScenarioSpec& spec);

struct ScenarioData {
  Mat y;
  Mat x;
  Mat z;                 // intercept plus R columns
  std::optional<Mat> w;  // intercept plus S columns (bipartial only)
};

ScenarioData gen_scenario_data(const ScenarioSpec& spec, std::uint64_t seed);

// SplitMix64 finaliser applied to (master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Runs a single (already expanded) spec. Realisations run on `threads`
// workers; the report does not depend on the worker count.
ErrorRateReport run_scenario(const ScenarioSpec& spec, const Strategy& strategy, std::uint64_t master_seed,
                             unsigned threads = 1);

// Expands the spec and runs every sub-run; sub-run i uses seed
// derive_seed(master_seed, 0xC0FFEE, i).
std::vector<ErrorRateReport> run_scenario_all(const ScenarioSpec& spec, const Strategy& strategy,
                                              std::uint64_t master_seed, unsigned threads = 1);

Interval wilson_ci(std::size_t successes, std::size_t trials, double z = 1.959964);

// Two-sided p-value of the pooled two-proportion z-test.
double two_proportion_p(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

// key=value text, one entry per line, '#' comments.
ScenarioSpec read_scenario_config(std::istream& in);
void write_scenario_config(std::ostream& out, const ScenarioSpec& spec);

std::string to_string(Distribution d);
std::string to_string(Signal s);
std::string to_string(NuisanceCase c);
std::string to_string(ResidMethod m);
std::string to_string(Correction c);

// One row per (sub-run, correction, k) plus an "any" row per correction,
// preceded by '#'-prefixed configuration lines.
void write_report_csv(std::ostream& out, const std::vector<ErrorRateReport>& reports);
void write_report_table(std::ostream& out, const std::vector<ErrorRateReport>& reports);

} // namespace permcca
