#include "fracmg/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fracmg/error.hpp"

namespace fracmg {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Index nodes(int dim, int j) {
  const Index n = (Index{1} << j) + 1;
  return dim == 1 ? n : n * n;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::rate_table: return "rate_table";
    case ExperimentKind::lemma_rate: return "lemma_rate";
    case ExperimentKind::solve_compare: return "solve_compare";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  if (text == "rate_table" || text == "rate-table") return ExperimentKind::rate_table;
  if (text == "lemma_rate" || text == "lemma-rate") return ExperimentKind::lemma_rate;
  if (text == "solve_compare" || text == "solve-compare") return ExperimentKind::solve_compare;
  throw InvalidArgument("unknown experiment kind '" + text + "'");
}

std::string to_string(InnerProduct inner) { return inner == InnerProduct::mass ? "mass" : "euclidean"; }

InnerProduct parse_inner_product(const std::string& text) {
  if (text == "euclidean") return InnerProduct::euclidean;
  if (text == "mass") return InnerProduct::mass;
  throw InvalidArgument("unknown inner product '" + text + "' (euclidean | mass)");
}

std::vector<int> default_modes(int dim) { return dim == 2 ? std::vector<int>{4, 3} : std::vector<int>{1}; }

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void validate(const ExperimentConfig& c) {
  require(c.dim == 1 || c.dim == 2, "dim must be 1 or 2");
  require(!c.s_values.empty(), "s list is empty");
  for (double s : c.s_values) require(s > 0.0 && s < 1.0, "s = " + format_number(s) + " outside (0,1)");
  if (c.kind != ExperimentKind::lemma_rate) {
    require(!c.beta_values.empty(), "beta list is empty");
    for (double b : c.beta_values) require(b > 0.0 && std::isfinite(b), "beta = " + format_number(b) + " must be positive");
  }
  require(c.c_q > 0.0 && std::isfinite(c.c_q), "c_q must be positive");
  require(c.tol > 0.0 && c.tol < 1.0, "tol must lie in (0,1)");
  require(c.max_iter >= 1, "max_iter must be at least 1");
  require(c.workers >= 1, "workers must be at least 1");
  require(!c.out_dir.empty(), "output directory is empty");

  switch (c.kind) {
    case ExperimentKind::rate_table:
    case ExperimentKind::lemma_rate: {
      require(c.dim == 1, to_string(c.kind) + " runs in 1D only (dense Gram matrices)");
      require(c.j_min >= 3, "j_min must be >= 3 (the coarse level of j_min must exist)");
      const int span = c.kind == ExperimentKind::rate_table ? 2 : 1;
      require(c.j_max - c.j_min >= span,
              to_string(c.kind) + " needs j_max - j_min >= " + std::to_string(span));
      require(c.j_max <= 20 && nodes(1, c.j_max) <= c.dense_cap,
              "level " + std::to_string(c.j_max) + " exceeds the dense cap " + std::to_string(c.dense_cap));
      break;
    }
    case ExperimentKind::solve_compare: {
      require(c.j_base >= 2, "j_base must be >= 2");
      require(c.j_min > c.j_base, "j_min must be above j_base");
      require(c.j_max >= c.j_min, "j_max must be >= j_min");
      const HierarchyOptions limits;
      require(c.j_max <= 20 && nodes(c.dim, c.j_max) <= limits.max_nodes,
              "level " + std::to_string(c.j_max) + " exceeds the node cap");
      const MultigridOptions mg;
      require(nodes(c.dim, c.j_base) <= mg.dense_cap, "base level " + std::to_string(c.j_base) + " too large for a dense solve");
      break;
    }
  }

  const TargetSpec& t = c.target;
  require(t.modes.empty() || t.csv_path.empty(), "target: give modes or a CSV path, not both");
  require(t.modes.empty() || static_cast<int>(t.modes.size()) == c.dim, "target: need one mode per axis");
  for (int k : t.modes) require(k >= 1, "target: modes must be positive integers");
}

// ---- JSON ---------------------------------------------------------------

namespace {

json config_json(const ExperimentConfig& c) {
  return json{{"kind", to_string(c.kind)},
              {"dim", c.dim},
              {"j_min", c.j_min},
              {"j_base", c.j_base},
              {"j_max", c.j_max},
              {"s", c.s_values},
              {"beta", c.beta_values},
              {"c_q", c.c_q},
              {"tol", c.tol},
              {"max_iter", c.max_iter},
              {"inner_product", to_string(c.inner_product)},
              {"target", {{"modes", c.target.modes}, {"csv", c.target.csv_path}, {"project", c.target.project}}},
              {"out_dir", c.out_dir},
              {"seed", c.seed},
              {"workers", c.workers},
              {"dense_cap", c.dense_cap}};
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

ExperimentConfig config_from(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config JSON must be an object");
  ExperimentConfig c;
  if (auto it = j.find("kind"); it != j.end()) c.kind = parse_experiment_kind(it->get<std::string>());
  read_field(j, "dim", c.dim);
  read_field(j, "j_min", c.j_min);
  read_field(j, "j_base", c.j_base);
  read_field(j, "j_max", c.j_max);
  read_field(j, "s", c.s_values);
  read_field(j, "beta", c.beta_values);
  read_field(j, "c_q", c.c_q);
  read_field(j, "tol", c.tol);
  read_field(j, "max_iter", c.max_iter);
  if (auto it = j.find("inner_product"); it != j.end()) c.inner_product = parse_inner_product(it->get<std::string>());
  if (auto it = j.find("target"); it != j.end()) {
    read_field(*it, "modes", c.target.modes);
    read_field(*it, "csv", c.target.csv_path);
    read_field(*it, "project", c.target.project);
  }
  read_field(j, "out_dir", c.out_dir);
  read_field(j, "seed", c.seed);
  read_field(j, "workers", c.workers);
  read_field(j, "dense_cap", c.dense_cap);
  return c;
}

json report_json(const SolveReport& r) {
  return json{{"iterations", r.iterations},
              {"converged", r.converged},
              {"solve_time_s", r.wall_time},
              {"residual_history", r.residual_history}};
}

json optional_report(const std::optional<SolveReport>& r) { return r ? report_json(*r) : json(nullptr); }

json case_json(const CaseResult& c) {
  json j{{"index", c.index}, {"s", c.s}, {"beta", c.beta}, {"ok", c.ok}, {"wall_time_s", c.wall_time}};
  if (!c.error.empty()) j["error"] = c.error;
  if (c.rate) {
    j["rate_table"] = {{"c_q", c.rate->c_q},
                       {"levels", c.rate->levels},
                       {"d", c.rate->distances},
                       {"log2_ratios", c.rate->log2_ratios}};
  }
  if (c.lemma) {
    j["lemma_rate"] = {{"c_q", c.lemma->c_q},
                       {"levels", c.lemma->levels},
                       {"norms", c.lemma->norms},
                       {"log2_ratios", c.lemma->log2_ratios}};
  }
  if (!c.solves.empty()) {
    json rows = json::array();
    for (const SolveRow& r : c.solves) {
      json probes = json::array();
      for (const ProbeRecord& p : r.probes) {
        probes.push_back({{"level", p.level}, {"min", p.min_quotient}, {"max", p.max_quotient}});
      }
      rows.push_back({{"level", r.level},
                      {"grid", r.grid},
                      {"assembly_time_s", r.assembly_time},
                      {"cg", optional_report(r.cg)},
                      {"mgcg", optional_report(r.mgcg)},
                      {"probes", probes}});
    }
    j["solve_compare"] = rows;
  }
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config JSON: ") + e.what());
  }
}

std::string record_to_json(const RunRecord& record) {
  json cases = json::array();
  for (const CaseResult& c : record.cases) cases.push_back(case_json(c));
  json j{{"schema", record.schema}, {"config", config_json(record.config)}, {"wall_time_s", record.wall_time},
         {"all_ok", record.all_ok()}, {"cases", cases}};
  return j.dump(2);
}

// ---- running ------------------------------------------------------------

bool RunRecord::all_ok() const {
  for (const CaseResult& c : cases)
    if (!c.ok) return false;
  return true;
}

int exit_code(const RunRecord& record) { return record.all_ok() ? 0 : 2; }

namespace {

struct CaseSpec {
  double s;
  double beta;
};

std::vector<CaseSpec> enumerate_cases(const ExperimentConfig& c) {
  std::vector<CaseSpec> out;
  for (double s : c.s_values) {
    if (c.kind == ExperimentKind::lemma_rate) {
      out.push_back({s, 0.0});
      continue;
    }
    for (double b : c.beta_values) out.push_back({s, b});
  }
  return out;
}

Vector make_target(const ExperimentConfig& c, const Level& level) {
  const TargetSpec& t = c.target;
  if (!t.csv_path.empty()) {
    std::string path = t.csv_path;
    if (auto pos = path.find("{j}"); pos != std::string::npos) {
      path.replace(pos, 3, std::to_string(level.mesh().level()));
    }
    return read_target_csv(path, level.mesh());
  }
  const std::vector<int> modes = t.modes.empty() ? default_modes(c.dim) : t.modes;
  return t.project ? project_sine_product(level, modes) : interpolate_sine_product(level.mesh(), modes);
}

void run_solve_case(const ExperimentConfig& c, const MeshHierarchy& hierarchy, CaseResult& out) {
  FractionalSolveOptions fopts;
  fopts.c_q = c.c_q;
  MultigridOptions mopts;
  mopts.j_base = c.j_base;
  mopts.seed = c.seed;
  mopts.fractional = fopts;
  SolveOptions sopts;
  sopts.tol = c.tol;
  sopts.max_iter = c.max_iter;
  sopts.inner_product = c.inner_product;

  std::vector<std::shared_ptr<const HessianOp>> hessians;
  double pending_assembly = 0.0;
  for (int j = c.j_base; j <= c.j_max; ++j) {
    const auto t0 = std::chrono::steady_clock::now();
    auto level = hierarchy.level_ptr(j);
    auto k = std::make_shared<const FractionalSolveOp>(level, out.s, fopts);
    hessians.push_back(std::make_shared<const HessianOp>(level, std::move(k), out.beta));
    if (j < c.j_min) pending_assembly += seconds_since(t0);

    if (j < c.j_min) continue;
    SolveRow row;
    row.level = j;
    row.grid = Index{1} << j;
    const MultigridPrecond mg = build_mg(hierarchy, hessians, mopts);
    const HessianOp& h = *hessians.back();
    ControlProblem problem{out.s, out.beta, level,
                           std::shared_ptr<const SolutionOperator>(hessians.back(), &h.solution()),
                           make_target(c, hierarchy.level(j))};
    const Vector rhs = assemble_rhs(problem);
    row.assembly_time = seconds_since(t0) + pending_assembly;
    pending_assembly = 0.0;
    row.probes = mg.probes();
    row.cg = cg_solve(h, rhs, sopts).report;
    row.mgcg = mgcg_solve(h, mg, rhs, sopts).report;
    out.solves.push_back(std::move(row));
  }
}

void run_case(const ExperimentConfig& c, const MeshHierarchy* hierarchy, CaseResult& out) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (c.kind) {
      case ExperimentKind::rate_table:
        out.rate = rate_table(out.s, out.beta, c.j_min, c.j_max, c.c_q, c.dense_cap);
        break;
      case ExperimentKind::lemma_rate:
        out.lemma = lemma_rate(out.s, c.j_min, c.j_max, c.c_q, c.dense_cap);
        break;
      case ExperimentKind::solve_compare:
        run_solve_case(c, *hierarchy, out);
        break;
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  out.wall_time = seconds_since(t0);
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord record;
  record.config = config;

  const std::vector<CaseSpec> specs = enumerate_cases(config);
  record.cases.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    record.cases[i].index = i;
    record.cases[i].s = specs[i].s;
    record.cases[i].beta = specs[i].beta;
  }

  std::optional<MeshHierarchy> hierarchy;
  if (config.kind == ExperimentKind::solve_compare) {
    try {
      hierarchy.emplace(build_hierarchy(config.dim, config.j_base, config.j_max));
    } catch (const std::exception& e) {
      for (CaseResult& c : record.cases) c.error = e.what();
      record.wall_time = seconds_since(t0);
      return record;
    }
  }
  const MeshHierarchy* hp = hierarchy ? &*hierarchy : nullptr;

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), specs.size());
  if (workers <= 1) {
    for (CaseResult& c : record.cases) run_case(config, hp, c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < record.cases.size(); i = next++) run_case(config, hp, record.cases[i]);
      });
    }
  }
  record.wall_time = seconds_since(t0);
  return record;
}

// ---- CSV and plot files ---------------------------------------------------

std::string table_csv(const RunRecord& record) {
  std::ostringstream os;
  switch (record.config.kind) {
    case ExperimentKind::rate_table:
      os << "s,beta,N,d,log2_ratio\n";
      for (const CaseResult& c : record.cases) {
        if (!c.rate) continue;
        const SpectralDistanceReport& r = *c.rate;
        for (std::size_t i = 0; i < r.levels.size(); ++i) {
          os << format_number(c.s) << ',' << format_number(c.beta) << ',' << (Index{1} << r.levels[i]) << ','
             << format_number(r.distances[i]) << ',' << (i == 0 ? "NA" : format_number(r.log2_ratios[i - 1])) << '\n';
        }
      }
      break;
    case ExperimentKind::lemma_rate:
      os << "s,N,norm,log2_ratio\n";
      for (const CaseResult& c : record.cases) {
        if (!c.lemma) continue;
        const LemmaRateReport& r = *c.lemma;
        for (std::size_t i = 0; i < r.levels.size(); ++i) {
          os << format_number(c.s) << ',' << (Index{1} << r.levels[i]) << ',' << format_number(r.norms[i]) << ','
             << (i == 0 ? "NA" : format_number(r.log2_ratios[i - 1])) << '\n';
        }
      }
      break;
    case ExperimentKind::solve_compare:
      os << "s,beta,grid,cg_iters,cg_time_s,mgcg_iters,mgcg_time_s\n";
      for (const CaseResult& c : record.cases) {
        for (const SolveRow& r : c.solves) {
          auto iters = [](const std::optional<SolveReport>& rep) {
            return rep ? std::to_string(rep->iterations) : std::string("NA");
          };
          auto secs = [](const std::optional<SolveReport>& rep) {
            return rep ? format_number(rep->wall_time) : std::string("NA");
          };
          os << format_number(c.s) << ',' << format_number(c.beta) << ',' << r.grid << ',' << iters(r.cg) << ','
             << secs(r.cg) << ',' << iters(r.mgcg) << ',' << secs(r.mgcg) << '\n';
        }
      }
      break;
  }
  return os.str();
}

std::string wide_rate_csv(const RunRecord& record) {
  if (record.config.kind != ExperimentKind::rate_table) throw InvalidArgument("wide layout needs a rate_table record");
  std::vector<int> levels;
  for (int j = record.config.j_min; j <= record.config.j_max; ++j) levels.push_back(j);
  std::ostringstream os;
  os << "s,beta,row";
  for (int j : levels) os << ",N=" << (Index{1} << j);
  os << '\n';
  for (const CaseResult& c : record.cases) {
    if (!c.rate) continue;
    const SpectralDistanceReport& r = *c.rate;
    std::map<int, std::size_t> at;
    for (std::size_t i = 0; i < r.levels.size(); ++i) at[r.levels[i]] = i;
    os << format_number(c.s) << ',' << format_number(c.beta) << ",d";
    for (int j : levels) os << ',' << (at.count(j) ? format_number(r.distances[at[j]]) : "NA");
    os << '\n' << format_number(c.s) << ',' << format_number(c.beta) << ",log2_ratio";
    for (int j : levels) {
      os << ',' << (at.count(j) && at[j] > 0 ? format_number(r.log2_ratios[at[j] - 1]) : "NA");
    }
    os << '\n';
  }
  return os.str();
}

namespace {

std::string write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
  return path.string();
}

}  // namespace

std::vector<std::string> emit_plot_data(const RunRecord& record, const std::string& dir) {
  if (record.config.kind != ExperimentKind::solve_compare) {
    throw InvalidArgument("plot data needs a solve_compare record");
  }
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const CaseResult& c : record.cases) {
    const std::string stem = "s" + format_number(c.s) + "_beta" + format_number(c.beta);
    std::ostringstream iters, times;
    iters << "# h cg_iters mgcg_iters\n";
    times << "# h cg_time_s mgcg_time_s\n";
    for (const SolveRow& r : c.solves) {
      const std::string h = format_number(1.0 / static_cast<double>(r.grid));
      auto it = [](const std::optional<SolveReport>& rep) {
        return rep ? std::to_string(rep->iterations) : std::string("NA");
      };
      auto tm = [](const std::optional<SolveReport>& rep) {
        return rep ? format_number(rep->wall_time) : std::string("NA");
      };
      iters << h << ' ' << it(r.cg) << ' ' << it(r.mgcg) << '\n';
      times << h << ' ' << tm(r.cg) << ' ' << tm(r.mgcg) << '\n';
    }
    const std::filesystem::path base(dir);
    written.push_back(write_file(base / ("iters_" + stem + ".dat"), iters.str()));
    written.push_back(write_file(base / ("times_" + stem + ".dat"), times.str()));
  }
  return written;
}

std::vector<std::string> write_outputs(const RunRecord& record) {
  const std::filesystem::path dir(record.config.out_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  written.push_back(write_file(dir / "run_record.json", record_to_json(record)));
  const std::string kind = to_string(record.config.kind);
  written.push_back(write_file(dir / (kind + ".csv"), table_csv(record)));
  if (record.config.kind == ExperimentKind::rate_table) {
    written.push_back(write_file(dir / "rate_table_wide.csv", wide_rate_csv(record)));
  }
  if (record.config.kind == ExperimentKind::solve_compare) {
    for (std::string& p : emit_plot_data(record, (dir / "plot").string())) written.push_back(std::move(p));
  }
  return written;
}

}  // namespace fracmg
