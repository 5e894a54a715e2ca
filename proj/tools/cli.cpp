#include "cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "fracmg/checks.hpp"
#include "fracmg/error.hpp"
#include "fracmg/experiment.hpp"

namespace fracmg::cli {

namespace {

// Environment overrides sit between flags and the config file, so they are
// appended as flags unless the command line already carries the flag.
struct EnvFlag {
  const char* flag;
  const char* env;
  bool is_switch;
};

constexpr EnvFlag kEnvFlags[] = {
    {"--dim", "FRACMG_DIM", false},          {"--s", "FRACMG_S", false},
    {"--beta", "FRACMG_BETA", false},        {"--jmin", "FRACMG_JMIN", false},
    {"--jbase", "FRACMG_JBASE", false},      {"--jmax", "FRACMG_JMAX", false},
    {"--cq", "FRACMG_CQ", false},            {"--tol", "FRACMG_TOL", false},
    {"--max-iter", "FRACMG_MAX_ITER", false}, {"--inner-product", "FRACMG_INNER_PRODUCT", false},
    {"--modes", "FRACMG_MODES", false},      {"--target-csv", "FRACMG_TARGET_CSV", false},
    {"--project", "FRACMG_PROJECT", true},   {"--out", "FRACMG_OUT", false},
    {"--seed", "FRACMG_SEED", false},        {"--workers", "FRACMG_WORKERS", false},
    {"--dense-cap", "FRACMG_DENSE_CAP", false},
};

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (const std::string& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::vector<std::string> with_environment(std::vector<std::string> args, bool experiment) {
  const char* config = std::getenv("FRACMG_CONFIG");
  if (config && !has_flag(args, "--config")) args.insert(args.begin(), {"--config", config});
  for (const EnvFlag& e : kEnvFlags) {
    const char* value = std::getenv(e.env);
    if (!value || has_flag(args, e.flag)) continue;
    if (!experiment && std::string(e.flag) != "--seed") continue;
    if (e.is_switch) {
      const std::string v(value);
      if (v == "1" || v == "true" || v == "on" || v == "yes") args.emplace_back(e.flag);
    } else {
      args.emplace_back(std::string(e.flag) + "=" + value);
    }
  }
  return args;
}

struct ExperimentArgs {
  ExperimentConfig config;
  std::string inner_product = "euclidean";
  bool dry_run = false;
};

ExperimentConfig defaults_for(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::rate_table:
      c.dim = 1;
      c.j_min = 4;
      c.j_max = 9;
      c.s_values = {0.25, 0.4, 0.6};
      c.beta_values = {1.0, 0.1};
      break;
    case ExperimentKind::lemma_rate:
      c.dim = 1;
      c.j_min = 5;
      c.j_max = 8;
      c.s_values = {0.25, 0.5, 0.75};
      break;
    case ExperimentKind::solve_compare:
      c.dim = 2;
      c.j_base = 5;
      c.j_min = 6;
      c.j_max = 8;
      c.s_values = {0.5};
      c.beta_values = {1e-3};
      break;
  }
  c.out_dir = "fracmg-out/" + to_string(kind);
  return c;
}

void add_experiment_options(CLI::App* sub, ExperimentArgs& args) {
  ExperimentConfig& c = args.config;
  sub->add_option("--dim", c.dim, "Spatial dimension (1 or 2)")->capture_default_str();
  sub->add_option("--s", c.s_values, "Fractional orders, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--beta", c.beta_values, "Regularization parameters, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--jmin", c.j_min, "Coarsest reported level (h = 2^-j)")->capture_default_str();
  sub->add_option("--jbase", c.j_base, "Multigrid base level")->capture_default_str();
  sub->add_option("--jmax", c.j_max, "Finest level")->capture_default_str();
  sub->add_option("--cq", c.c_q, "Quadrature constant in m = c_q / ln(1/h)")->capture_default_str();
  sub->add_option("--tol", c.tol, "Relative residual tolerance for CG and MGCG")
      ->capture_default_str();
  sub->add_option("--max-iter", c.max_iter, "Iteration cap for CG and MGCG")
      ->capture_default_str();
  sub->add_option("--inner-product", args.inner_product, "CG inner product: euclidean | mass")
      ->check(CLI::IsMember({"euclidean", "mass"}))
      ->capture_default_str();
  sub->add_option("--modes", c.target.modes, "Target sine modes, one per axis")
      ->delimiter(',');
  sub->add_option("--target-csv", c.target.csv_path, "Target nodal values; {j} is replaced by the level");
  sub->add_flag("--project", c.target.project, "L2-project the analytic target instead of interpolating");
  sub->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Seed for randomized probes")->capture_default_str();
  sub->add_option("--workers", c.workers, "Cases run concurrently")->capture_default_str();
  sub->add_option("--dense-cap", c.dense_cap, "Largest node count materialized densely")
      ->capture_default_str();
  sub->add_flag("--dry-run", args.dry_run, "Validate and print the resolved config as JSON, then exit");
}

int run_experiment_command(ExperimentArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig& config = args.config;
  try {
    config.inner_product = parse_inner_product(args.inner_product);
    validate(config);
  } catch (const InvalidArgument& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return 1;
  }
  if (args.dry_run) {
    out << config_to_json(config) << '\n';
    return 0;
  }

  const RunRecord record = run_experiment(config);
  try {
    for (const std::string& path : write_outputs(record)) err << "wrote " << path << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  out << table_csv(record);
  for (const CaseResult& c : record.cases) {
    if (!c.ok) err << "case " << c.index << " (s=" << c.s << ", beta=" << c.beta << ") failed: " << c.error << '\n';
  }
  return exit_code(record);
}

int run_check_command(const CheckOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<CheckResult> results;
  try {
    results = run_property_checks(options);
  } catch (const InvalidArgument& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return 1;
  }
  int failures = 0;
  for (const CheckResult& r : results) {
    if (!r.passed) ++failures;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(28) << r.name << std::setw(28) << r.detail
        << std::scientific << std::setprecision(3) << r.measured << " <= " << r.threshold << std::defaultfloat
        << '\n';
  }
  out << results.size() - static_cast<std::size_t>(failures) << '/' << results.size() << " checks passed\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multigrid preconditioning experiments for fractional optimal control", "fracmg"};
  app.set_config("--config", "", "INI file with one [section] per subcommand; flags override it");
  app.require_subcommand(1);

  ExperimentArgs rate{defaults_for(ExperimentKind::rate_table)};
  ExperimentArgs lemma{defaults_for(ExperimentKind::lemma_rate)};
  ExperimentArgs solve{defaults_for(ExperimentKind::solve_compare)};
  CheckOptions check;

  auto* rate_cmd = app.add_subcommand("rate-table", "Spectral distance d(H,G) and its log2 ratios (1D)");
  add_experiment_options(rate_cmd, rate);
  auto* lemma_cmd = app.add_subcommand("lemma-rate", "Decay of ||K_h - E K_2h pi|| (1D)");
  add_experiment_options(lemma_cmd, lemma);
  auto* solve_cmd = app.add_subcommand("solve-compare", "CG against MGCG iteration counts and times");
  add_experiment_options(solve_cmd, solve);
  auto* check_cmd = app.add_subcommand("check", "Seed-pinned property suite");
  check_cmd->add_option("--seed", check.seed, "Seed for random vectors")->capture_default_str();
  check_cmd->add_option("--samples", check.samples, "Random vectors per property")->capture_default_str();

  // env flags can only be attached once a subcommand is named
  std::vector<std::string> args = raw_args;
  bool experiment = false;
  bool named = false;
  for (const std::string& a : raw_args) {
    if (a == "rate-table" || a == "lemma-rate" || a == "solve-compare") experiment = named = true;
    if (a == "check") named = true;
  }
  if (named && !has_flag(raw_args, "--help") && !has_flag(raw_args, "-h")) args = with_environment(raw_args, experiment);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*rate_cmd) return run_experiment_command(rate, out, err);
    if (*lemma_cmd) return run_experiment_command(lemma, out, err);
    if (*solve_cmd) return run_experiment_command(solve, out, err);
    return run_check_command(check, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace fracmg::cli
