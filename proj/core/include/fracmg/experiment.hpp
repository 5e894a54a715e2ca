#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracmg/control.hpp"
#include "fracmg/precond.hpp"
#include "fracmg/specdist.hpp"

namespace fracmg {

enum class ExperimentKind { rate_table, lemma_rate, solve_compare };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);
std::string to_string(InnerProduct inner);
InnerProduct parse_inner_product(const std::string& text);

/// Target data u_d: either a product of sines with one mode per axis, or a CSV
/// file of nodal values. A "{j}" in the path is replaced by the grid level.
struct TargetSpec {
  std::vector<int> modes;
  std::string csv_path;
  /// L2-project the analytic target instead of interpolating it.
  bool project = false;

  bool operator==(const TargetSpec&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::rate_table;
  int dim = 1;
  int j_min = 4;
  int j_base = 5;
  int j_max = 9;
  std::vector<double> s_values;
  std::vector<double> beta_values;
  double c_q = 1.0;
  double tol = 1e-6;
  int max_iter = 1000;
  InnerProduct inner_product = InnerProduct::euclidean;
  TargetSpec target;
  std::string out_dir = "fracmg-out";
  std::uint64_t seed = 20240521;
  int workers = 1;
  /// Dense Gram cap for rate_table / lemma_rate.
  Index dense_cap = kDefaultDenseCap;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws InvalidArgument on the first inconsistent field.
void validate(const ExperimentConfig& config);

/// Modes used when the config leaves both modes and csv_path empty.
std::vector<int> default_modes(int dim);

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

/// One grid of a solve_compare case.
struct SolveRow {
  int level = 0;
  Index grid = 0;  ///< intervals per axis
  std::optional<SolveReport> cg;
  std::optional<SolveReport> mgcg;
  /// Multigrid build: Hessians, dense base factorization, probes.
  double assembly_time = 0.0;
  std::vector<ProbeRecord> probes;
};

/// One (s, beta) cell of the parameter grid (one s for lemma_rate).
struct CaseResult {
  std::size_t index = 0;
  double s = 0.0;
  double beta = 0.0;
  bool ok = false;
  std::string error;
  double wall_time = 0.0;
  std::optional<SpectralDistanceReport> rate;
  std::optional<LemmaRateReport> lemma;
  std::vector<SolveRow> solves;
};

inline constexpr const char* kRunRecordSchema = "fracmg.run_record/1";

struct RunRecord {
  std::string schema = kRunRecordSchema;
  ExperimentConfig config;
  std::vector<CaseResult> cases;
  double wall_time = 0.0;

  bool all_ok() const;
};

/// Runs every case of the grid (up to config.workers at a time). Case failures
/// are recorded, never thrown. Does not write files.
RunRecord run_experiment(const ExperimentConfig& config);

std::string record_to_json(const RunRecord& record);

/// CSV table for the record's kind:
///   rate_table     s,beta,N,d,log2_ratio   (ratio of the previous level's d to this one)
///   lemma_rate     s,N,norm,log2_ratio
///   solve_compare  s,beta,grid,cg_iters,cg_time_s,mgcg_iters,mgcg_time_s
std::string table_csv(const RunRecord& record);

/// rate_table only: one "d" row and one "log2_ratio" row per (s, beta), one column per N.
std::string wide_rate_csv(const RunRecord& record);

/// Writes run_record.json, the table CSV (and the wide rate CSV or plot files)
/// into config.out_dir. Returns the paths written.
std::vector<std::string> write_outputs(const RunRecord& record);

/// Whitespace-delimited "h cg mgcg" files for iterations and solve seconds,
/// one pair per (s, beta); "NA" where a value is missing.
std::vector<std::string> emit_plot_data(const RunRecord& record, const std::string& dir);

/// Exit code convention: 0 all cases succeeded, 2 otherwise.
int exit_code(const RunRecord& record);

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

}  // namespace fracmg
