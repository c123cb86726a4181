// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Seeds are fixed in advance and never tuned.

#include "permcca/cca.hpp"
#include "permcca/infer.hpp"
#include "permcca/permute.hpp"
#include "permcca/residualize.hpp"
#include "permcca/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace permcca;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Mat random_matrix(Index rows, Index cols, std::mt19937_64& rng)
{
  std::normal_distribution<double> normal;
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = normal(rng);
  return m;
}

std::string pct(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string pct_ci(double rate, Interval ci)
{
  return pct(rate) + " [" + pct(ci.lo) + ", " + pct(ci.hi) + "]";
}

bool contains(Interval ci, double v) { return ci.lo <= v && v <= ci.hi; }

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

ScenarioSpec at_scale(const std::string& id, std::size_t reps, std::size_t perms)
{
  ScenarioSpec s = scenario_by_id(id);
  s.reps = reps;
  s.permutations = perms;
  return s;
}

// Criterion 1 ---------------------------------------------------------------

Outcome oracle_equivalence()
{
  std::mt19937_64 rng(1001);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = std::uniform_int_distribution<Index>(1, 6)(rng);
    const Index q = std::uniform_int_distribution<Index>(1, 6)(rng);
    const Index n = std::uniform_int_distribution<Index>(p + q + 2, 60)(rng);
    const Mat y = center_columns(random_matrix(n, p, rng));
    const Mat x = center_columns(random_matrix(n, q, rng) + 0.5 * random_matrix(n, p, rng) * Mat::Ones(p, q));
    const Vec a = cca(y, x).r;
    const Vec b = cca_eig_oracle(covariance_blocks(y, x));
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |diff| = %.2e, %.2f s", worst, secs);
  return {worst <= 1e-8 && secs < 10.0, buf};
}

// Criterion 2 ---------------------------------------------------------------

// -ln det(I - Syy^-1 Syx Sxx^-1 Sxy) for two-column blocks, written out by hand.
double wilks_two_by_two(const Mat& y, const Mat& x)
{
  auto cross = [](const Mat& a, const Mat& b, int i, int j) {
    double s = 0.0;
    for (Index r = 0; r < a.rows(); ++r)
      s += a(r, i) * b(r, j);
    return s;
  };
  double syy[2][2], sxx[2][2], syx[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      syy[i][j] = cross(y, y, i, j);
      sxx[i][j] = cross(x, x, i, j);
      syx[i][j] = cross(y, x, i, j);
    }
  const double dxx = sxx[0][0] * sxx[1][1] - sxx[0][1] * sxx[1][0];
  const double ixx[2][2] = {{sxx[1][1] / dxx, -sxx[0][1] / dxx}, {-sxx[1][0] / dxx, sxx[0][0] / dxx}};
  // Schur complement Syy - Syx Sxx^-1 Sxy.
  double sc[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double v = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          v += syx[i][a] * ixx[a][b] * syx[j][b];
      sc[i][j] = syy[i][j] - v;
    }
  const double dsc = sc[0][0] * sc[1][1] - sc[0][1] * sc[1][0];
  const double dyy = syy[0][0] * syy[1][1] - syy[0][1] * syy[1][0];
  return -std::log(dsc / dyy);
}

Outcome exhaustive_exactness()
{
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1002);
  Dataset d;
  d.y = center_columns(random_matrix(7, 2, rng));
  d.x = center_columns(random_matrix(7, 2, rng));
  d.centered = true;

  InferenceOptions o;
  o.permutations = 5040;
  const InferenceResult res = permcca::permcca(d, o, exhaustive_scheme(7, 5040));

  const double observed = wilks_two_by_two(d.y, d.x);
  std::vector<Index> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t hits = 0;
  std::size_t total = 0;
  do {
    Mat py(7, 2);
    for (Index i = 0; i < 7; ++i)
      py.row(i) = d.y.row(perm[static_cast<std::size_t>(i)]);
    hits += wilks_two_by_two(py, d.x) >= observed * (1.0 - 1e-12) ? 1 : 0;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));

  const double brute = static_cast<double>(hits) / static_cast<double>(total);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[128];
  std::snprintf(buf, sizeof buf, "engine %zu/5040, enumeration %zu/%zu, %.2f s", res.counts[0], hits, total, secs);
  return {res.p_unc(0) == brute && total == 5040 && secs < 30.0, buf};
}

// Criteria 3 and 6 share one run ---------------------------------------------

ErrorRateReport scenario_one_valid()
{
  static const ErrorRateReport report = run_scenario(at_scale("I", 500, 500), Strategy{}, 1003, workers());
  return report;
}

Outcome null_calibration()
{
  const ErrorRateReport rep = scenario_one_valid();
  const double fwer = rep.fwer(Correction::Closure);
  const Interval ci = rep.fwer_ci(Correction::Closure);
  const double pcer2 = rep.rate(Correction::Closure, 2);
  return {contains(ci, 0.05) && pcer2 < 0.015,
          "FWER " + pct_ci(fwer, ci) + ", PCER k=2 " + pct_ci(pcer2, rep.ci(Correction::Closure, 2))};
}

Outcome max_statistic()
{
  const ErrorRateReport rep = scenario_one_valid();
  double worst = 0.0;
  for (Index k = 2; k <= rep.components(); ++k)
    worst = std::max(worst, rep.rate(Correction::MaxDist, k));
  const Interval ci = rep.ci(Correction::MaxDist, 1);
  return {worst < 0.01 && contains(ci, 0.05),
          "k=1 " + pct_ci(rep.rate(Correction::MaxDist, 1), ci) + ", max over k>=2 " + pct(worst)};
}

// Criterion 4 ---------------------------------------------------------------

Outcome invalid_method()
{
  Strategy s;
  s.stepwise = false;
  s.null_space = false;
  const ErrorRateReport rep = run_scenario(at_scale("I", 200, 500), s, 1004, workers());
  const double rate = rep.rate(Correction::Uncorrected, 1);
  return {rate > 0.80, "k=1 " + pct_ci(rate, rep.ci(Correction::Uncorrected, 1))};
}

// Criterion 5 ---------------------------------------------------------------

Outcome residualization()
{
  const ScenarioSpec spec = at_scale("VII", 200, 500);
  std::string detail;
  bool pass = true;
  for (ResidMethod m : {ResidMethod::Simple, ResidMethod::HuhJhun, ResidMethod::Theil}) {
    Strategy s;
    s.resid = m;
    const ErrorRateReport rep = run_scenario(spec, s, 1005, workers());
    const double rate = rep.rate(Correction::Uncorrected, 1);
    const Interval ci = rep.ci(Correction::Uncorrected, 1);
    pass = pass && (m == ResidMethod::Simple ? rate > 0.50 : contains(ci, 0.05));
    detail += (detail.empty() ? "" : "; ") + to_string(m) + " " + pct_ci(rate, ci);
  }
  return {pass, detail};
}

// Criterion 7 ---------------------------------------------------------------

Outcome non_normality()
{
  ScenarioSpec spec = at_scale("IX", 200, 500);
  spec.nu_sweep.clear();
  std::string detail;
  bool pass = true;
  for (double nu : {4.0, 2.0}) {
    spec.nu = nu;
    const ErrorRateReport rep = run_scenario(spec, Strategy{}, 1007, workers());
    const double rate = rep.rate(Correction::Uncorrected, 1);
    const Interval ci = rep.ci(Correction::Uncorrected, 1);
    pass = pass && (nu == 2.0 ? rate > 0.10 : contains(ci, 0.05));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%snu=%g ", detail.empty() ? "" : "; ", nu);
    detail += buf + pct_ci(rate, ci);
  }
  return {pass, detail};
}

// Criterion 8 ---------------------------------------------------------------

Outcome power_ordering()
{
  auto power = [](const std::string& id, std::uint64_t seed, StatisticKind stat) {
    Strategy s;
    s.stat = stat;
    return run_scenario(at_scale(id, 500, 500), s, seed, workers());
  };
  const ErrorRateReport sw = power("XVII", 1008, StatisticKind::Wilks);
  const ErrorRateReport sr = power("XVII", 1008, StatisticKind::Roy);
  const ErrorRateReport dw = power("XVIII", 1108, StatisticKind::Wilks);
  const ErrorRateReport dr = power("XVIII", 1108, StatisticKind::Roy);

  const auto hits = [](const ErrorRateReport& r, Index k) {
    return r.panels[static_cast<std::size_t>(Correction::Closure)].per_k[static_cast<std::size_t>(k - 1)];
  };
  const std::size_t n = 500;
  const double p_sparse = two_proportion_p(hits(sr, 1), n, hits(sw, 1), n);
  const double p_dense1 = two_proportion_p(hits(dw, 1), n, hits(dr, 1), n);
  const double p_dense2 = two_proportion_p(hits(dw, 2), n, hits(dr, 2), n);
  const bool sparse_ok = hits(sr, 1) > hits(sw, 1) && p_sparse < 0.05;
  const bool dense_ok = hits(dw, 1) > hits(dr, 1) && p_dense1 < 0.05 && hits(dw, 2) > hits(dr, 2) && p_dense2 < 0.05;

  char buf[320];
  std::snprintf(buf, sizeof buf,
                "sparse k=1 Roy %s vs Wilks %s (p=%.3g); dense k=1 Wilks %s vs Roy %s (p=%.3g), "
                "k=2 Wilks %s vs Roy %s (p=%.3g)",
                pct(sr.rate(Correction::Closure, 1)).c_str(), pct(sw.rate(Correction::Closure, 1)).c_str(), p_sparse,
                pct(dw.rate(Correction::Closure, 1)).c_str(), pct(dr.rate(Correction::Closure, 1)).c_str(), p_dense1,
                pct(dw.rate(Correction::Closure, 2)).c_str(), pct(dr.rate(Correction::Closure, 2)).c_str(), p_dense2);
  return {sparse_ok && dense_ok, buf};
}

// Criterion 9 ---------------------------------------------------------------

Outcome semiortho_invariants()
{
  std::mt19937_64 rng(1009);
  double orth = 0.0, proj = 0.0, corr = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index r = std::uniform_int_distribution<Index>(1, 10)(rng);
    const Index n = std::uniform_int_distribution<Index>(r + 8, 50)(rng);
    Mat z(n, r);
    z.col(0).setOnes();
    z.rightCols(r - 1) = random_matrix(n, r - 1, rng);
    const ResidualMatrix rm = residual_matrix(z);
    const Mat y = random_matrix(n, 2, rng);
    const Mat x = random_matrix(n, 3, rng);
    const Vec full = cca(rm.r * y, rm.r * x).r;
    for (const auto& plan : {std::optional<SelectionPlan>{}, std::optional<SelectionPlan>{default_selection(z)}}) {
      const SemiOrthoBasis b = semiortho(rm, plan);
      orth = std::max(orth, (b.q.transpose() * b.q - Mat::Identity(b.q.cols(), b.q.cols())).cwiseAbs().maxCoeff());
      proj = std::max(proj, (b.q * b.q.transpose() - rm.r).cwiseAbs().maxCoeff());
      corr = std::max(corr, (cca(b.project(y), b.project(x)).r - full).cwiseAbs().maxCoeff());
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |Q'Q-I| = %.1e, max |QQ'-R| = %.1e, max |dr| = %.1e", orth, proj, corr);
  return {orth <= 1e-10 && proj <= 1e-8 && corr <= 1e-8, buf};
}

// Criterion 10 --------------------------------------------------------------

Outcome determinism()
{
  const ScenarioSpec spec = desk_scale(scenario_by_id("I"));
  std::ostringstream one, eight;
  write_report_csv(one, {run_scenario(spec, Strategy{}, 1010, 1)});
  write_report_csv(eight, {run_scenario(spec, Strategy{}, 1010, 8)});
  return {one.str() == eight.str() && !one.str().empty(),
          std::to_string(one.str().size()) + " bytes, " + (one.str() == eight.str() ? "identical" : "different")};
}

} // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 oracle equivalence", oracle_equivalence},
      {"2 exhaustive exactness", exhaustive_exactness},
      {"3 null calibration", null_calibration},
      {"4 invalid method reproduced", invalid_method},
      {"5 residualization", residualization},
      {"6 max-statistic conservativeness", max_statistic},
      {"7 non-normality", non_normality},
      {"8 power ordering", power_ordering},
      {"9 semi-orthogonal invariants", semiortho_invariants},
      {"10 determinism under parallelism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  criterion %-34s %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
