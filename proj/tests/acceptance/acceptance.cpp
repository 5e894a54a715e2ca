// Acceptance suite: one PASS/FAIL line per criterion.
//
//   fracmg_acceptance            run every criterion
//   fracmg_acceptance 1 4 9      run a subset
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fracmg/checks.hpp"
#include "fracmg/control.hpp"
#include "fracmg/experiment.hpp"
#include "fracmg/fracop.hpp"
#include "fracmg/specdist.hpp"

using namespace fracmg;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok) { pass = pass && ok; }
};

void log(const std::string& line) {
  std::fprintf(stderr, "  %s\n", line.c_str());
  std::fflush(stderr);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// 1D rate table, beta = 1, final log2 ratio within 0.05 of 4s
void rate_below_half(Verdict& v) {
  for (double s : {0.25, 0.3, 0.4}) {
    const SpectralDistanceReport r = rate_table(s, 1.0, 4, 9);
    const double last = r.log2_ratios.back();
    log("s=" + fmt(s) + " d(N=512)=" + fmt(r.distances.back()) + " final ratio " + fmt(last, 5));
    v.require(std::abs(last - 4 * s) <= 0.05);
    v.detail << "s=" << s << ":" << fmt(last, 5) << " ";
  }
}

// 1D rate table up to N = 1024, final ratio in [1.9, 2.2]
void rate_above_half(Verdict& v) {
  for (double s : {0.5, 0.6, 0.7}) {
    const SpectralDistanceReport r = rate_table(s, 1.0, 6, 10);
    const double last = r.log2_ratios.back();
    log("s=" + fmt(s) + " d(N=1024)=" + fmt(r.distances.back()) + " final ratio " + fmt(last, 5));
    v.require(last >= 1.9 && last <= 2.2);
    v.detail << "s=" << s << ":" << fmt(last, 5) << " ";
  }
}

// d(beta = 0.1) / d(beta = 1) in [3, 30] for N = 16, 32, 64
void beta_scaling(Verdict& v) {
  double lo = INFINITY;
  double hi = 0.0;
  for (double s : {0.25, 0.3, 0.4}) {
    const SpectralDistanceReport one = rate_table(s, 1.0, 4, 6);
    const SpectralDistanceReport tenth = rate_table(s, 0.1, 4, 6);
    for (std::size_t i = 0; i < one.distances.size(); ++i) {
      const double ratio = tenth.distances[i] / one.distances[i];
      log("s=" + fmt(s) + " N=" + std::to_string(1 << one.levels[i]) + " ratio " + fmt(ratio));
      v.require(ratio >= 3.0 && ratio <= 30.0);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  v.detail << "ratios in [" << fmt(lo) << ", " << fmt(hi) << "]";
}

// every consecutive log2 decay of ||K_h - E K_2h pi|| on j = 5..8 is >= 2s - 0.15
void lemma_decay(Verdict& v) {
  for (double s : {0.25, 0.5, 0.75}) {
    const LemmaRateReport r = lemma_rate(s, 5, 8);
    const double worst = *std::min_element(r.log2_ratios.begin(), r.log2_ratios.end());
    std::string line = "s=" + fmt(s) + " rates";
    for (double x : r.log2_ratios) line += " " + fmt(x);
    log(line);
    v.require(worst >= 2 * s - 0.15);
    v.detail << "s=" << s << ":min " << fmt(worst) << " ";
  }
}

ExperimentConfig table_two_config(double s, double beta) {
  ExperimentConfig c;
  c.kind = ExperimentKind::solve_compare;
  c.dim = 2;
  c.j_base = 5;
  c.j_min = 6;
  c.j_max = 8;
  c.s_values = {s};
  c.beta_values = {beta};
  return c;
}

// CG counts for the reference row are shared between criteria 5 and 6
std::map<std::pair<double, double>, std::vector<int>> cg_counts;

// 2D, s = 0.5, beta = 1e-3, base 32^2, grids 64^2..256^2
void cg_mgcg_contrast(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunRecord record = run_experiment(table_two_config(0.5, 1e-3));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const CaseResult& c = record.cases.front();
  if (!c.ok) {
    v.require(false);
    v.detail << "case failed: " << c.error;
    return;
  }
  std::vector<int> cg, mg;
  for (const SolveRow& row : c.solves) {
    log(std::to_string(row.grid) + "^2 CG " + std::to_string(row.cg->iterations) + " (" + fmt(row.cg->wall_time) +
        " s)  MGCG " + std::to_string(row.mgcg->iterations) + " (" + fmt(row.mgcg->wall_time) + " s)");
    v.require(row.cg->converged && row.mgcg->converged);
    cg.push_back(row.cg->iterations);
    mg.push_back(row.mgcg->iterations);
  }
  for (int n : cg) v.require(n >= 15 && n <= 35);
  for (int n : mg) v.require(n <= 6);
  v.require(mg.size() == 3 && mg[2] <= mg[1]);
  v.require(elapsed <= 3600.0);
  cg_counts[{0.5, 1e-3}] = cg;
  v.detail << "CG";
  for (int n : cg) v.detail << " " << n;
  v.detail << ", MGCG";
  for (int n : mg) v.detail << " " << n;
  v.detail << ", " << fmt(elapsed, 3) << " s";
}

std::vector<int> cg_row(double s, double beta) {
  const MeshHierarchy hierarchy = build_hierarchy(2, 6, 8);
  std::vector<int> counts;
  for (int j = 6; j <= 8; ++j) {
    auto level = hierarchy.level_ptr(j);
    auto k = std::make_shared<const FractionalSolveOp>(level, s);
    const HessianOp h(level, k, beta);
    const ControlProblem p{s, beta, level, k, interpolate_sine_product(level->mesh(), {4, 3})};
    const SolveResult r = cg_solve(h, assemble_rhs(p));
    log("s=" + fmt(s) + " beta=" + fmt(beta) + " " + std::to_string(1 << j) + "^2 CG " +
        std::to_string(r.report.iterations) + (r.report.converged ? "" : " (not converged)") + " in " +
        fmt(r.report.wall_time) + " s");
    counts.push_back(r.report.converged ? r.report.iterations : -1);
  }
  return counts;
}

// each (s, beta) row: CG counts on 64^2..256^2 within 3 of the row median
void cg_mesh_independence(Verdict& v) {
  const std::vector<std::pair<double, double>> rows{{0.25, 1e-2}, {0.3, 1e-2}, {0.4, 1e-3}, {0.5, 1e-3},
                                                    {0.5, 1e-4},  {0.6, 1e-4}, {0.7, 1e-4}};
  for (const auto& row : rows) {
    auto it = cg_counts.find(row);
    const std::vector<int> counts = it != cg_counts.end() ? it->second : cg_row(row.first, row.second);
    std::vector<int> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    const int median = sorted[sorted.size() / 2];
    bool ok = sorted.front() > 0;
    for (int n : counts) ok = ok && std::abs(n - median) <= 3;
    v.require(ok);
    v.detail << "(" << row.first << "," << row.second << "):";
    for (std::size_t i = 0; i < counts.size(); ++i) v.detail << (i ? "/" : "") << counts[i];
    v.detail << " ";
  }
}

// quadrature K with m = 0.05 against the eigen-oracle K on 1D j = 6
void oracle_equivalence(Verdict& v) {
  const MeshHierarchy h = build_hierarchy(1, 6, 6);
  auto level = h.level_ptr(6);
  auto eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*level));
  FractionalSolveOptions opts;
  opts.spacing = 0.05;
  for (double s : {0.3, 0.5, 0.7}) {
    const double diff = operator_difference_norm(FractionalSolveOp(level, s, opts), ExactSolutionOp(level, eig, s), *level);
    log("s=" + fmt(s) + " ||K_quad - K_exact|| = " + fmt(diff));
    v.require(diff <= 1e-5);
    v.detail << "s=" << s << ":" << fmt(diff, 3) << " ";
  }
}

// scalar sinc error along m = 0.4, 0.2, 0.1, 0.05: monotone and below 1e-8 by the end
void scalar_sinc(Verdict& v) {
  double worst = 0.0;
  for (double s : {0.25, 0.5, 0.75}) {
    for (double lambda : {10.0, 1e3, 1e6}) {
      double previous = INFINITY;
      std::string line = "s=" + fmt(s) + " lambda=" + fmt(lambda) + " errors";
      for (double m : {0.4, 0.2, 0.1, 0.05}) {
        const double err = std::abs(scalar_quadrature(quad_params_with_spacing(s, m), lambda) - std::pow(lambda, -s));
        line += " " + fmt(err, 3);
        v.require(err < previous);
        previous = err;
      }
      log(line);
      v.require(previous < 1e-8);
      worst = std::max(worst, previous);
    }
  }
  v.detail << "largest error at m=0.05: " << fmt(worst, 3);
}

void property_suite(Verdict& v) {
  int failed = 0;
  const std::vector<CheckResult> results = run_property_checks();
  for (const CheckResult& r : results) {
    if (!r.passed) {
      ++failed;
      log("failed: " + r.name + " [" + r.detail + "] " + fmt(r.measured) + " > " + fmt(r.threshold));
    }
  }
  v.require(failed == 0 && !results.empty());
  v.detail << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " checks";
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "rate_table_s_below_half", rate_below_half},
      {2, "rate_table_s_above_half", rate_above_half},
      {3, "beta_scaling", beta_scaling},
      {4, "lemma_decay", lemma_decay},
      {5, "cg_vs_mgcg_2d", cg_mgcg_contrast},
      {6, "cg_mesh_independence", cg_mesh_independence},
      {7, "oracle_equivalence", oracle_equivalence},
      {8, "scalar_sinc_convergence", scalar_sinc},
      {9, "property_suite", property_suite},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("AC%d %-26s %s  %s [%.1f s]\n", c.id, c.name, v.pass ? "PASS" : "FAIL", v.detail.str().c_str(),
                elapsed);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
