#include "permcca/cli.hpp"

#include "permcca/error.hpp"
#include "permcca/infer.hpp"
#include "permcca/io.hpp"
#include "permcca/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace permcca::cli {

namespace {

struct RunConfig {
  std::string y, x, z, w, blocks, selection;
  std::string block_mode = "within";
  bool partial = false;
  bool theil = false;
  bool huh_jhun = false;
  std::string stat = "wilks";
  std::size_t perms = 1000;
  std::uint64_t seed = 0;
  Index pca_y = 0;
  Index pca_x = 0;
  bool max_pvalues = false;
  bool parametric = false;
  bool no_intercept = false;
  bool single_step = false;
  bool no_null_space = false;
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
};

struct SimulateConfig {
  std::string scenario;
  std::string config;
  std::size_t reps = 0;
  std::size_t perms = 0;
  std::uint64_t seed = 0;
  bool full = false;
  bool single_step = false;
  bool no_null_space = false;
  std::string resid = "huh-jhun";
  std::string stat = "wilks";
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
  std::string write_config;
};

unsigned threads_from_env()
{
  const char* env = std::getenv("PERMCCA_THREADS");
  if (env == nullptr || *env == '\0')
    return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0')
    throw Error(ErrorCode::InvalidOptions, std::string("PERMCCA_THREADS is not a number: '") + env + "'");
  return static_cast<unsigned>(v);
}

Mat with_intercept(const std::optional<Mat>& m, Index n)
{
  const Index cols = m ? m->cols() : 0;
  Mat out(n, cols + 1);
  out.col(0).setOnes();
  if (m)
    out.rightCols(cols) = *m;
  return out;
}

std::string num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const std::string& path, const std::string& text, std::ostream& out)
{
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file)
    throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  file << text;
}

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
  if (cfg.theil && cfg.huh_jhun)
    throw Error(ErrorCode::InvalidOptions, "--theil and --huh-jhun are mutually exclusive");
  if (cfg.huh_jhun && !cfg.blocks.empty())
    throw Error(ErrorCode::InvalidOptions,
                "--huh-jhun cannot be combined with --blocks: the Huh-Jhun basis mixes observations and does not "
                "respect exchangeability blocks; use --theil");
  if (cfg.huh_jhun && !cfg.selection.empty())
    throw Error(ErrorCode::InvalidOptions, "--selection applies to the Theil method only");
  if (cfg.partial && !cfg.w.empty())
    throw Error(ErrorCode::InvalidOptions, "--partial reuses Z on both sides; do not pass --w");

  Dataset data;
  data.y = read_matrix_csv(cfg.y);
  data.x = read_matrix_csv(cfg.x);
  const Index n = data.y.rows();
  if (data.x.rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "'" + cfg.y + "' has " + std::to_string(n) + " rows but '" + cfg.x +
                                                  "' has " + std::to_string(data.x.rows()));
  std::optional<Mat> z;
  std::optional<Mat> w;
  if (!cfg.z.empty())
    z = read_matrix_csv(cfg.z);
  if (!cfg.w.empty())
    w = read_matrix_csv(cfg.w);
  if (z && z->rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "'" + cfg.z + "' has " + std::to_string(z->rows()) + " rows, '" + cfg.y +
                                                  "' has " + std::to_string(n));
  if (w && w->rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "'" + cfg.w + "' has " + std::to_string(w->rows()) + " rows, '" + cfg.y +
                                                  "' has " + std::to_string(n));

  if (cfg.no_intercept) {
    data.z = z;
    data.w = w;
    data.partial = cfg.partial;
    data.centered = true;
  } else if (!z && !w) {
    data.z = with_intercept(std::nullopt, n);
    data.partial = true;
  } else if (cfg.partial) {
    data.z = with_intercept(z, n);
    data.partial = true;
  } else {
    data.z = with_intercept(z, n);
    data.w = with_intercept(w, n);
  }

  if (!cfg.blocks.empty()) {
    BlockStructure blocks;
    blocks.labels = read_labels(cfg.blocks);
    if (cfg.block_mode == "whole")
      blocks.mode = BlockMode::Whole;
    data.blocks = blocks;
  }
  const bool has_nuisance = (data.z && data.z->cols() > 0) || (data.w && data.w->cols() > 0);
  const bool use_theil = cfg.theil || !cfg.selection.empty() || (data.blocks && !cfg.huh_jhun);
  if (use_theil) {
    if (!cfg.selection.empty())
      data.selection = read_selection(cfg.selection, n);
    else if (has_nuisance)
      data.selection = default_selection(data.z ? *data.z : *data.w, data.z ? data.w : std::nullopt, data.blocks);
  }

  InferenceOptions options;
  options.stat = cfg.stat == "roy" ? StatisticKind::Roy : StatisticKind::Wilks;
  options.permutations = cfg.perms;
  options.seed = cfg.seed;
  options.stepwise = !cfg.single_step;
  options.augment_null_space = !cfg.no_null_space;
  options.compute_max_pvalues = cfg.max_pvalues;
  options.compute_parametric = cfg.parametric;
  if (cfg.pca_y > 0)
    options.pca_left = cfg.pca_y;
  if (cfg.pca_x > 0)
    options.pca_right = cfg.pca_x;
  options.threads = cfg.threads > 0 ? cfg.threads : threads_from_env();

  if (cfg.single_step)
    err << "warning: single-step estimation does not control error rates beyond the first component\n";
  if (cfg.no_null_space)
    err << "warning: omitting the null space of the canonical coefficients gives invalid p-values\n";

  const InferenceResult res = permcca(data, options);
  const char* method = !has_nuisance ? "none" : data.selection ? "theil" : "huh-jhun";
  err << "# seed=" << cfg.seed << " permutations=" << res.permutations << " stat=" << cfg.stat
      << " method=" << method << " N=" << res.dims.n << " P=" << res.dims.p << " Q=" << res.dims.q
      << " R=" << res.dims.r << " S=" << res.dims.s << " intercept=" << (cfg.no_intercept ? "no" : "yes") << '\n';
  if (res.group_smaller_than_j)
    err << "warning: fewer admissible permutations than requested; repeats are certain\n";

  std::ostringstream text;
  const Index k_count = res.r.size();
  if (cfg.format == "json") {
    nlohmann::ordered_json doc;
    doc["seed"] = cfg.seed;
    doc["permutations"] = res.permutations;
    doc["stat"] = cfg.stat;
    doc["method"] = method;
    doc["dims"] = {{"N", res.dims.n}, {"P", res.dims.p}, {"Q", res.dims.q}, {"R", res.dims.r}, {"S", res.dims.s}};
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Index k = 0; k < k_count; ++k) {
      nlohmann::ordered_json row;
      row["k"] = k + 1;
      row["r"] = res.r(k);
      row["stat"] = res.stat0(k);
      row["p_unc"] = res.p_unc(k);
      row["p_fwer"] = res.p_fwer(k);
      if (res.p_max)
        row["p_max"] = (*res.p_max)(k);
      if (res.p_param)
        row["p_param"] = (*res.p_param)(k);
      rows.push_back(row);
    }
    doc["components"] = rows;
    text << doc.dump(2) << '\n';
  } else {
    text << "k,r,stat,p_unc,p_fwer" << (res.p_max ? ",p_max" : "") << (res.p_param ? ",p_param" : "") << '\n';
    for (Index k = 0; k < k_count; ++k) {
      text << k + 1 << ',' << num(res.r(k)) << ',' << num(res.stat0(k)) << ',' << num(res.p_unc(k)) << ','
           << num(res.p_fwer(k));
      if (res.p_max)
        text << ',' << num((*res.p_max)(k));
      if (res.p_param)
        text << ',' << num((*res.p_param)(k));
      text << '\n';
    }
  }
  emit(cfg.out, text.str(), out);
  return 0;
}

int cmd_simulate(const SimulateConfig& cfg, std::ostream& out, std::ostream& err)
{
  if (cfg.scenario.empty() == cfg.config.empty())
    throw Error(ErrorCode::InvalidOptions, "give exactly one of --scenario or --config");
  ScenarioSpec spec;
  if (!cfg.scenario.empty()) {
    spec = scenario_by_id(cfg.scenario);
    if (!cfg.full)
      spec = desk_scale(spec);
  } else {
    std::ifstream in(cfg.config);
    if (!in)
      throw Error(ErrorCode::Io, "cannot open '" + cfg.config + "' for reading");
    spec = read_scenario_config(in);
  }
  if (cfg.reps > 0)
    spec.reps = cfg.reps;
  if (cfg.perms > 0)
    spec.permutations = cfg.perms;
  if (!cfg.write_config.empty()) {
    std::ostringstream c;
    write_scenario_config(c, spec);
    emit(cfg.write_config, c.str(), out);
  }

  Strategy strategy;
  strategy.stepwise = !cfg.single_step;
  strategy.null_space = !cfg.no_null_space;
  strategy.stat = cfg.stat == "roy" ? StatisticKind::Roy : StatisticKind::Wilks;
  strategy.resid = cfg.resid == "simple" ? ResidMethod::Simple
                   : cfg.resid == "theil" ? ResidMethod::Theil
                                          : ResidMethod::HuhJhun;
  const unsigned threads = cfg.threads > 0 ? cfg.threads : threads_from_env();
  err << "# scenario " << spec.id << ": reps=" << spec.reps << " permutations=" << spec.permutations
      << " seed=" << cfg.seed << '\n';

  const auto reports = run_scenario_all(spec, strategy, cfg.seed, threads);
  std::ostringstream text;
  if (cfg.format == "table")
    write_report_table(text, reports);
  else
    write_report_csv(text, reports);
  emit(cfg.out, text.str(), out);
  return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Permutation inference for canonical correlation analysis"};
  app.require_subcommand(1);

  RunConfig rc;
  CLI::App* run_cmd = app.add_subcommand("run", "Test canonical correlations of two data sets");
  run_cmd->add_option("--y", rc.y, "Left data (CSV, observations in rows)")->required();
  run_cmd->add_option("--x", rc.x, "Right data (CSV)")->required();
  run_cmd->add_option("--z", rc.z, "Nuisance variables for the left side (or both with --partial)");
  run_cmd->add_option("--w", rc.w, "Nuisance variables for the right side");
  run_cmd->add_flag("--partial", rc.partial, "Use Z on both sides");
  run_cmd->add_option("--blocks", rc.blocks, "Exchangeability block labels, one integer per line");
  run_cmd->add_option("--block-mode", rc.block_mode, "within | whole")
      ->check(CLI::IsMember({"within", "whole"}));
  run_cmd->add_option("--selection", rc.selection, "Observations kept by the Theil method, 0-based, one per line");
  run_cmd->add_flag("--theil", rc.theil, "Theil residuals");
  run_cmd->add_flag("--huh-jhun", rc.huh_jhun, "Huh-Jhun residuals (default without blocks)");
  run_cmd->add_option("--stat", rc.stat, "wilks | roy")->check(CLI::IsMember({"wilks", "roy"}));
  run_cmd->add_option("--perms", rc.perms, "Number of permutations, identity included")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  run_cmd->add_option("--seed", rc.seed, "Random seed");
  run_cmd->add_option("--pca-y", rc.pca_y, "Principal components kept on the left")->check(CLI::PositiveNumber);
  run_cmd->add_option("--pca-x", rc.pca_x, "Principal components kept on the right")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--max-pvalues", rc.max_pvalues, "Also report max-statistic adjusted p-values");
  run_cmd->add_flag("--parametric", rc.parametric, "Also report the chi-square approximation for Wilks");
  run_cmd->add_flag("--no-intercept", rc.no_intercept, "Do not add an intercept (inputs already centred)");
  run_cmd->add_flag("--single-step", rc.single_step, "Estimate all components once per permutation (invalid)");
  run_cmd->add_flag("--no-null-space", rc.no_null_space, "Omit the null space of the coefficients (invalid)");
  run_cmd->add_option("--threads", rc.threads, "Worker threads (default: PERMCCA_THREADS or all cores)");
  run_cmd->add_option("--out", rc.out, "Output file (default: standard output)");
  run_cmd->add_option("--format", rc.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  SimulateConfig sc;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Estimate error rates or power on synthetic data");
  sim_cmd->add_option("--scenario", sc.scenario, "Scenario I..XVIII");
  sim_cmd->add_option("--config", sc.config, "Scenario description (key=value lines)");
  sim_cmd->add_option("--reps", sc.reps, "Realisations (default 200, or the published count with --full)");
  sim_cmd->add_option("--perms", sc.perms, "Permutations per realisation (default 500)");
  sim_cmd->add_option("--seed", sc.seed, "Master seed");
  sim_cmd->add_flag("--full", sc.full, "Published scale instead of desk scale");
  sim_cmd->add_flag("--single-step", sc.single_step, "Single-step estimation");
  sim_cmd->add_flag("--no-null-space", sc.no_null_space, "Omit the null space of the coefficients");
  sim_cmd->add_option("--resid", sc.resid, "simple | huh-jhun | theil")
      ->check(CLI::IsMember({"simple", "huh-jhun", "theil"}));
  sim_cmd->add_option("--stat", sc.stat, "wilks | roy")->check(CLI::IsMember({"wilks", "roy"}));
  sim_cmd->add_option("--threads", sc.threads, "Worker threads (default: PERMCCA_THREADS or all cores)");
  sim_cmd->add_option("--out", sc.out, "Output file (default: standard output)");
  sim_cmd->add_option("--format", sc.format, "csv | table")->check(CLI::IsMember({"csv", "table"}));
  sim_cmd->add_option("--write-config", sc.write_config, "Write the effective scenario description to a file");

  std::vector<const char*> argv;
  argv.push_back("permcca");
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed())
      return cmd_run(rc, out, err);
    return cmd_simulate(sc, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.is_validation() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int main(int argc, char** argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

} // namespace permcca::cli
