#include "permcca/simulate.hpp"

#include "permcca/error.hpp"
#include "permcca/parallel.hpp"
#include "permcca/residualize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace permcca {

namespace {

std::string upper(std::string s)
{
  for (char& c : s)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string lower(std::string s)
{
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(const char* format, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct Outcome {
  std::array<std::vector<char>, 3> reject;
};

Dataset build_dataset(const ScenarioSpec& spec, const ScenarioData& d, ResidMethod resid)
{
  Dataset data;
  if (resid == ResidMethod::Simple) {
    // Residualise in observation space and permute those rows directly.
    const ResidualMatrix rz = residual_matrix(d.z);
    const ResidualMatrix rw = d.w ? residual_matrix(*d.w) : rz;
    data.y = rz.r * d.y;
    data.x = rw.r * d.x;
    data.centered = true;
    return data;
  }
  data.y = d.y;
  data.x = d.x;
  data.z = d.z;
  if (spec.nuisance == NuisanceCase::Bipartial)
    data.w = d.w;
  else
    data.partial = true;
  if (resid == ResidMethod::Theil)
    data.selection = default_selection(d.z, data.w);
  return data;
}

} // namespace

double ErrorRateReport::rate(Correction c, Index k) const
{
  return static_cast<double>(panels[static_cast<int>(c)].per_k.at(static_cast<std::size_t>(k - 1))) /
         static_cast<double>(reps);
}

Interval ErrorRateReport::ci(Correction c, Index k) const
{
  return wilson_ci(panels[static_cast<int>(c)].per_k.at(static_cast<std::size_t>(k - 1)), reps);
}

double ErrorRateReport::fwer(Correction c) const
{
  return static_cast<double>(panels[static_cast<int>(c)].any) / static_cast<double>(reps);
}

Interval ErrorRateReport::fwer_ci(Correction c) const
{
  return wilson_ci(panels[static_cast<int>(c)].any, reps);
}

std::vector<std::string> scenario_ids()
{
  return {"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX",
          "X", "XI", "XII", "XIII", "XIV", "XV", "XVI", "XVII", "XVIII"};
}

ScenarioSpec scenario_by_id(const std::string& raw)
{
  const std::string id = upper(trim(raw));
  const auto ids = scenario_ids();
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end())
    throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + raw + "' (expected I..XVIII)");
  const int row = static_cast<int>(it - ids.begin()) + 1;

  ScenarioSpec s;
  s.id = id;
  const std::vector<double> kurtotic = {2, 4, 6, 8, 10};
  auto with_distribution = [&](int variant) {
    // variant 0: normal, 1: kurtotic, 2: binary; odd rows without PCA.
    if (variant == 1) {
      s.distribution = Distribution::StudentT;
      s.nu_sweep = kurtotic;
    } else if (variant == 2) {
      s.distribution = Distribution::Bernoulli;
    }
  };
  if (row <= 12) {
    const int local = (row - 1) % 6;
    with_distribution(local / 2);
    if (local % 2 == 1)
      s.pca = 10;
    if (row >= 7) {
      s.nuisance = NuisanceCase::Partial;
      s.r = s.s = 15;
    }
  } else if (row <= 14) {
    s.nuisance = NuisanceCase::Bipartial;
    s.r = s.s = 15;
    if (row == 14)
      s.pca = 10;
  } else if (row <= 16) {
    s.nuisance = NuisanceCase::Partial;
    s.r = s.s = 20;
    s.permutations = 1000;
    s.reps = 1000;
    for (Index n = 100; n <= 1000; n += 100)
      s.n_sweep.push_back(n);
    if (row == 16)
      s.pca = 10;
  } else {
    s.signal = row == 17 ? Signal::Sparse : Signal::Dense;
  }
  return s;
}

ScenarioSpec desk_scale(ScenarioSpec spec)
{
  spec.reps = 200;
  spec.permutations = 500;
  return spec;
}

std::vector<ScenarioSpec> expand_scenario(const ScenarioSpec& spec)
{
  std::vector<ScenarioSpec> out;
  const std::vector<double> nus = spec.nu_sweep.empty() ? std::vector<double>{spec.nu} : spec.nu_sweep;
  const std::vector<Index> ns = spec.n_sweep.empty() ? std::vector<Index>{spec.n} : spec.n_sweep;
  for (Index n : ns)
    for (double nu : nus) {
      ScenarioSpec sub = spec;
      sub.n = n;
      sub.nu = nu;
      sub.nu_sweep.clear();
      sub.n_sweep.clear();
      out.push_back(std::move(sub));
    }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index)
{
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

ScenarioData gen_scenario_data(const ScenarioSpec& spec, std::uint64_t seed)
{
  if (spec.n < 2 || spec.p < 1 || spec.q < 1 || spec.r < 0 || spec.s < 0)
    throw Error(ErrorCode::InvalidDims, "scenario dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto draw = [&](Index rows, Index cols) {
    Mat m(rows, cols);
    switch (spec.distribution) {
    case Distribution::Normal:
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
          m(i, j) = normal(rng);
      break;
    case Distribution::StudentT: {
      std::student_t_distribution<double> t(spec.nu);
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
          m(i, j) = t(rng);
      break;
    }
    case Distribution::Bernoulli: {
      std::bernoulli_distribution b(spec.bernoulli_q);
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
          m(i, j) = b(rng) ? 1.0 : 0.0;
      break;
    }
    }
    return m;
  };
  auto draw_normal = [&](Index rows, Index cols) {
    Mat m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i)
        m(i, j) = normal(rng);
    return m;
  };
  auto with_intercept = [&](Index cols) {
    Mat m(spec.n, cols + 1);
    m.col(0).setOnes();
    m.rightCols(cols) = draw_normal(spec.n, cols);
    return m;
  };

  ScenarioData d;
  d.y = draw(spec.n, spec.p);
  d.x = draw(spec.n, spec.q);
  const Index k = std::min(spec.p, spec.q);
  const Index factors = spec.signal == Signal::Sparse ? 1 : spec.signal == Signal::Dense ? k / 2 : 0;
  const double amplitude = spec.signal == Signal::Sparse ? spec.sparse_amplitude : spec.dense_amplitude;
  for (Index f = 0; f < factors; ++f) {
    const Vec factor = draw_normal(spec.n, 1).col(0);
    d.y.col(f) += amplitude * factor;
    d.x.col(f) += amplitude * factor;
  }
  d.z = with_intercept(spec.nuisance == NuisanceCase::None ? 0 : spec.r);
  if (spec.nuisance == NuisanceCase::Bipartial)
    d.w = with_intercept(spec.s);
  return d;
}

ErrorRateReport run_scenario(const ScenarioSpec& spec, const Strategy& strategy, std::uint64_t master_seed,
                             unsigned threads)
{
  if (!spec.nu_sweep.empty() || !spec.n_sweep.empty())
    throw Error(ErrorCode::InvalidOptions, "run_scenario expects an expanded spec; use run_scenario_all");
  if (spec.reps < 1)
    throw Error(ErrorCode::InvalidOptions, "at least one realisation is required");

  InferenceOptions options;
  options.stat = strategy.stat;
  options.permutations = spec.permutations;
  options.stepwise = strategy.stepwise;
  options.augment_null_space = strategy.null_space;
  options.compute_max_pvalues = true;
  options.pca_left = spec.pca;
  options.pca_right = spec.pca;
  options.threads = 1;

  const Index k_count = std::min(spec.pca ? *spec.pca : spec.p, spec.pca ? *spec.pca : spec.q);
  std::vector<Outcome> outcomes(spec.reps);
  constexpr double alpha = 0.05;
  parallel_for(0, spec.reps, resolve_threads(threads), [&](unsigned, std::size_t rep) {
    const ScenarioData d = gen_scenario_data(spec, derive_seed(master_seed, 0, rep));
    const Dataset data = build_dataset(spec, d, strategy.resid);
    InferenceOptions local = options;
    local.seed = derive_seed(master_seed, 1, rep);
    const InferenceResult res = permcca(data, local);
    Outcome& o = outcomes[rep];
    const Vec* p[3] = {&res.p_unc, &res.p_fwer, &*res.p_max};
    for (int c = 0; c < 3; ++c) {
      o.reject[c].resize(static_cast<std::size_t>(k_count));
      for (Index k = 0; k < k_count; ++k)
        o.reject[c][static_cast<std::size_t>(k)] = (*p[c])(k) <= alpha ? 1 : 0;
    }
  }, 1);

  ErrorRateReport report;
  report.spec = spec;
  report.strategy = strategy;
  report.seed = master_seed;
  report.alpha = alpha;
  report.reps = spec.reps;
  for (int c = 0; c < 3; ++c) {
    PanelCounts& panel = report.panels[c];
    panel.per_k.assign(static_cast<std::size_t>(k_count), 0);
    for (const Outcome& o : outcomes) {
      bool any = false;
      for (std::size_t k = 0; k < panel.per_k.size(); ++k) {
        panel.per_k[k] += static_cast<std::size_t>(o.reject[c][k]);
        any = any || o.reject[c][k];
      }
      panel.any += any ? 1 : 0;
    }
  }
  return report;
}

std::vector<ErrorRateReport> run_scenario_all(const ScenarioSpec& spec, const Strategy& strategy,
                                              std::uint64_t master_seed, unsigned threads)
{
  std::vector<ErrorRateReport> out;
  const auto subs = expand_scenario(spec);
  for (std::size_t i = 0; i < subs.size(); ++i)
    out.push_back(run_scenario(subs[i], strategy, derive_seed(master_seed, 0xC0FFEE, i), threads));
  return out;
}

Interval wilson_ci(std::size_t successes, std::size_t trials, double z)
{
  if (trials == 0)
    throw Error(ErrorCode::InvalidOptions, "wilson_ci: trials must be positive");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double two_proportion_p(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2)
{
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  const double pooled = static_cast<double>(x1 + x2) / (a + b);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b));
  if (se == 0.0)
    return 1.0;
  const double zval = (static_cast<double>(x1) / a - static_cast<double>(x2) / b) / se;
  return std::erfc(std::fabs(zval) / std::sqrt(2.0));
}

std::string to_string(Distribution d)
{
  switch (d) {
  case Distribution::Normal: return "normal";
  case Distribution::StudentT: return "t";
  case Distribution::Bernoulli: return "bernoulli";
  }
  return "?";
}

std::string to_string(Signal s)
{
  switch (s) {
  case Signal::None: return "none";
  case Signal::Sparse: return "sparse";
  case Signal::Dense: return "dense";
  }
  return "?";
}

std::string to_string(NuisanceCase c)
{
  switch (c) {
  case NuisanceCase::None: return "none";
  case NuisanceCase::Partial: return "partial";
  case NuisanceCase::Bipartial: return "bipartial";
  }
  return "?";
}

std::string to_string(ResidMethod m)
{
  switch (m) {
  case ResidMethod::Simple: return "simple";
  case ResidMethod::HuhJhun: return "huh-jhun";
  case ResidMethod::Theil: return "theil";
  }
  return "?";
}

std::string to_string(Correction c)
{
  switch (c) {
  case Correction::Uncorrected: return "unc";
  case Correction::Closure: return "closure";
  case Correction::MaxDist: return "max";
  }
  return "?";
}

namespace {

template <class T>
std::string join(const std::vector<T>& values)
{
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out << (i ? "," : "") << values[i];
  return out.str();
}

double parse_double(const std::string& key, const std::string& v)
{
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  if (!(in >> out) || !(in >> std::ws).eof() || !std::isfinite(out))
    throw Error(ErrorCode::ParseError, "config key '" + key + "': not a number: '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v)
{
  const double d = parse_double(key, v);
  if (d != std::floor(d) || d < 0)
    throw Error(ErrorCode::ParseError, "config key '" + key + "': not a non-negative integer: '" + v + "'");
  return static_cast<long long>(d);
}

template <class T, class F>
std::vector<T> parse_list(const std::string& v, F&& parse)
{
  std::vector<T> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ','))
    if (!trim(item).empty())
      out.push_back(static_cast<T>(parse(trim(item))));
  return out;
}

} // namespace

ScenarioSpec read_scenario_config(std::istream& in)
{
  ScenarioSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty())
      continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = lower(trim(body.substr(0, eq)));
    const std::string value = trim(body.substr(eq + 1));
    if (key == "scenario") {
      const std::string keep_id = value;
      spec = scenario_by_id(value);
      spec.id = upper(keep_id);
    } else if (key == "id") {
      spec.id = value;
    } else if (key == "n") {
      spec.n = parse_int(key, value);
    } else if (key == "p") {
      spec.p = parse_int(key, value);
    } else if (key == "q") {
      spec.q = parse_int(key, value);
    } else if (key == "r") {
      spec.r = parse_int(key, value);
    } else if (key == "s") {
      spec.s = parse_int(key, value);
    } else if (key == "nuisance") {
      const std::string v = lower(value);
      if (v == "none")
        spec.nuisance = NuisanceCase::None;
      else if (v == "partial")
        spec.nuisance = NuisanceCase::Partial;
      else if (v == "bipartial")
        spec.nuisance = NuisanceCase::Bipartial;
      else
        throw Error(ErrorCode::ParseError, "config key 'nuisance': expected none|partial|bipartial");
    } else if (key == "pca") {
      if (lower(value) == "none")
        spec.pca.reset();
      else
        spec.pca = parse_int(key, value);
    } else if (key == "distribution") {
      const std::string v = lower(value);
      if (v == "normal")
        spec.distribution = Distribution::Normal;
      else if (v == "t")
        spec.distribution = Distribution::StudentT;
      else if (v == "bernoulli")
        spec.distribution = Distribution::Bernoulli;
      else
        throw Error(ErrorCode::ParseError, "config key 'distribution': expected normal|t|bernoulli");
    } else if (key == "nu") {
      spec.nu = parse_double(key, value);
    } else if (key == "bernoulli_q") {
      spec.bernoulli_q = parse_double(key, value);
    } else if (key == "signal") {
      const std::string v = lower(value);
      if (v == "none")
        spec.signal = Signal::None;
      else if (v == "sparse")
        spec.signal = Signal::Sparse;
      else if (v == "dense")
        spec.signal = Signal::Dense;
      else
        throw Error(ErrorCode::ParseError, "config key 'signal': expected none|sparse|dense");
    } else if (key == "sparse_amplitude") {
      spec.sparse_amplitude = parse_double(key, value);
    } else if (key == "dense_amplitude") {
      spec.dense_amplitude = parse_double(key, value);
    } else if (key == "permutations") {
      spec.permutations = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "reps") {
      spec.reps = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "nu_sweep") {
      spec.nu_sweep = parse_list<double>(value, [&](const std::string& v) { return parse_double(key, v); });
    } else if (key == "n_sweep") {
      spec.n_sweep = parse_list<Index>(value, [&](const std::string& v) { return parse_int(key, v); });
    } else {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return spec;
}

void write_scenario_config(std::ostream& out, const ScenarioSpec& spec)
{
  out << "id=" << spec.id << '\n'
      << "n=" << spec.n << '\n'
      << "p=" << spec.p << '\n'
      << "q=" << spec.q << '\n'
      << "r=" << spec.r << '\n'
      << "s=" << spec.s << '\n'
      << "nuisance=" << to_string(spec.nuisance) << '\n'
      << "pca=" << (spec.pca ? std::to_string(*spec.pca) : std::string("none")) << '\n'
      << "distribution=" << to_string(spec.distribution) << '\n'
      << "nu=" << fmt("%.17g", spec.nu) << '\n'
      << "bernoulli_q=" << fmt("%.17g", spec.bernoulli_q) << '\n'
      << "signal=" << to_string(spec.signal) << '\n'
      << "sparse_amplitude=" << fmt("%.17g", spec.sparse_amplitude) << '\n'
      << "dense_amplitude=" << fmt("%.17g", spec.dense_amplitude) << '\n'
      << "permutations=" << spec.permutations << '\n'
      << "reps=" << spec.reps << '\n';
  if (!spec.nu_sweep.empty())
    out << "nu_sweep=" << join(spec.nu_sweep) << '\n';
  if (!spec.n_sweep.empty())
    out << "n_sweep=" << join(spec.n_sweep) << '\n';
}

void write_report_csv(std::ostream& out, const std::vector<ErrorRateReport>& reports)
{
  if (!reports.empty()) {
    const ErrorRateReport& first = reports.front();
    std::ostringstream cfg;
    write_scenario_config(cfg, first.spec);
    std::istringstream lines(cfg.str());
    std::string line;
    while (std::getline(lines, line))
      out << "# " << line << '\n';
    out << "# seed=" << first.seed << '\n'
        << "# stepwise=" << (first.strategy.stepwise ? "true" : "false") << '\n'
        << "# null_space=" << (first.strategy.null_space ? "true" : "false") << '\n'
        << "# resid=" << to_string(first.strategy.resid) << '\n'
        << "# stat=" << (first.strategy.stat == StatisticKind::Wilks ? "wilks" : "roy") << '\n'
        << "# alpha=" << fmt("%.17g", first.alpha) << '\n';
  }
  out << "scenario,n,nu,seed,correction,k,rejections,reps,rate,ci_lo,ci_hi\n";
  for (const ErrorRateReport& rep : reports) {
    const std::string prefix = rep.spec.id + "," + std::to_string(rep.spec.n) + "," +
                               (rep.spec.distribution == Distribution::StudentT ? fmt("%g", rep.spec.nu) : "") +
                               "," + std::to_string(rep.seed) + ",";
    for (int c = 0; c < 3; ++c) {
      const auto corr = static_cast<Correction>(c);
      const PanelCounts& panel = rep.panels[c];
      for (std::size_t k = 0; k < panel.per_k.size(); ++k) {
        const Interval iv = wilson_ci(panel.per_k[k], rep.reps);
        out << prefix << to_string(corr) << ',' << k + 1 << ',' << panel.per_k[k] << ',' << rep.reps << ','
            << fmt("%.6f", static_cast<double>(panel.per_k[k]) / static_cast<double>(rep.reps)) << ','
            << fmt("%.6f", iv.lo) << ',' << fmt("%.6f", iv.hi) << '\n';
      }
      const Interval iv = wilson_ci(panel.any, rep.reps);
      out << prefix << to_string(corr) << ",any," << panel.any << ',' << rep.reps << ','
          << fmt("%.6f", static_cast<double>(panel.any) / static_cast<double>(rep.reps)) << ','
          << fmt("%.6f", iv.lo) << ',' << fmt("%.6f", iv.hi) << '\n';
    }
  }
}

void write_report_table(std::ostream& out, const std::vector<ErrorRateReport>& reports)
{
  auto cell = [](std::size_t x, std::size_t n) {
    const Interval iv = wilson_ci(x, n);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%6.2f (%5.2f-%5.2f)", 100.0 * static_cast<double>(x) / static_cast<double>(n),
                  100.0 * iv.lo, 100.0 * iv.hi);
    return std::string(buf);
  };
  for (const ErrorRateReport& rep : reports) {
    out << "scenario " << rep.spec.id << "  N=" << rep.spec.n;
    if (rep.spec.distribution == Distribution::StudentT)
      out << "  nu=" << fmt("%g", rep.spec.nu);
    out << "  reps=" << rep.reps << "  J=" << rep.spec.permutations << "  seed=" << rep.seed << '\n'
        << "  strategy: " << (rep.strategy.stepwise ? "stepwise" : "single-step") << ", "
        << (rep.strategy.null_space ? "with null space" : "without null space") << ", "
        << to_string(rep.strategy.resid) << ", " << (rep.strategy.stat == StatisticKind::Wilks ? "wilks" : "roy")
        << '\n'
        << "     k  " << "uncorrected (%)        " << "closure (%)            " << "max statistic (%)\n";
    for (Index k = 0; k < rep.components(); ++k) {
      out << "  " << fmt("%4.0f", static_cast<double>(k + 1));
      for (int c = 0; c < 3; ++c)
        out << "  " << cell(rep.panels[c].per_k[static_cast<std::size_t>(k)], rep.reps);
      out << '\n';
    }
    out << "   any";
    for (int c = 0; c < 3; ++c)
      out << "  " << cell(rep.panels[c].any, rep.reps);
    out << "\n\n";
  }
}

} // namespace permcca
