#include "fracmg/control.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fracmg/error.hpp"

namespace fracmg {

namespace {

double sine_product(const std::vector<int>& modes, double x, double y) {
  double v = std::sin(modes[0] * std::numbers::pi * x);
  if (modes.size() > 1) v *= std::sin(modes[1] * std::numbers::pi * y);
  return v;
}

void check_modes(const MeshLevel& level, const std::vector<int>& modes) {
  if (static_cast<int>(modes.size()) != level.dim()) {
    throw InvalidArgument("target needs one mode index per axis (" + std::to_string(level.dim()) + "), got " +
                          std::to_string(modes.size()));
  }
}

using OperatorFn = std::function<Vector(const Vector&)>;
using DotFn = std::function<double(const Vector&, const Vector&)>;

SolveResult conjugate_gradient(const OperatorFn& op, const OperatorFn& prec, const DotFn& dot, const Vector& b,
                               const SolveOptions& options) {
  if (!(options.tol > 0.0 && options.tol < 1.0)) throw InvalidArgument("CG tolerance must lie in (0,1)");
  if (options.max_iter < 0) throw InvalidArgument("max_iter must be non-negative");
  const auto start = std::chrono::steady_clock::now();
  SolveResult result;
  result.solution = Vector::Zero(b.size());
  auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) {
    result.report.residual_history.push_back(0.0);
    result.report.converged = true;
    result.report.wall_time = elapsed();
    return result;
  }

  Vector r = b;
  Vector z = prec ? prec(r) : r;
  Vector p = z;
  double rz = dot(r, z);
  result.report.residual_history.push_back(1.0);

  for (int it = 0; it < options.max_iter; ++it) {
    const Vector q = op(p);
    const double curvature = dot(p, q);
    if (!(curvature > 0.0)) {
      throw NumericalError("CG lost positivity at iteration " + std::to_string(it + 1) +
                           ": p^T H p = " + std::to_string(curvature));
    }
    const double alpha = rz / curvature;
    result.solution.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    const double rel = std::sqrt(std::max(dot(r, r), 0.0)) / b_norm;
    result.report.residual_history.push_back(rel);
    result.report.iterations = it + 1;
    if (rel <= options.tol) {
      result.report.converged = true;
      break;
    }
    z = prec ? prec(r) : r;
    const double rz_next = dot(r, z);
    if (!(rz_next > 0.0)) throw NumericalError("preconditioner is not positive definite");
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  result.report.wall_time = elapsed();
  return result;
}

SolveResult run_solver(const HessianOp& hessian, const PreconditionerFn& preconditioner, const Vector& rhs,
                       const SolveOptions& options) {
  if (rhs.size() != hessian.size()) throw InvalidArgument("right-hand side has wrong size");
  const Level& level = hessian.level();
  const SparseMatrix& mass = level.operators().mass;
  if (options.inner_product == InnerProduct::mass) {
    const DotFn dot = [&mass](const Vector& a, const Vector& b) { return a.dot(mass * b); };
    return conjugate_gradient([&hessian](const Vector& z) { return hessian.apply(z); }, preconditioner, dot, rhs,
                              options);
  }
  const DotFn dot = [](const Vector& a, const Vector& b) { return a.dot(b); };
  OperatorFn prec;
  if (preconditioner) {
    prec = [&level, &preconditioner](const Vector& r) { return preconditioner(level.solve_mass(r)); };
  }
  const Vector b = mass * rhs;
  return conjugate_gradient([&hessian](const Vector& z) { return hessian.apply_gram(z); }, prec, dot, b, options);
}

}  // namespace

Vector interpolate_sine_product(const MeshLevel& level, const std::vector<int>& modes) {
  check_modes(level, modes);
  Vector out(level.n_nodes());
  for (Index g = 0; g < level.n_nodes(); ++g) {
    const double y = level.dim() == 2 ? level.coordinate(g, 1) : 0.0;
    out(g) = sine_product(modes, level.coordinate(g, 0), y);
  }
  return out;
}

Vector project_sine_product(const Level& level, const std::vector<int>& modes) {
  const MeshLevel& mesh = level.mesh();
  check_modes(mesh, modes);
  const double h = mesh.h();
  Vector load = Vector::Zero(mesh.n_nodes());
  if (mesh.dim() == 1) {
    // 5-point Gauss-Legendre on [-1, 1]
    constexpr std::array<double, 5> xg{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                       0.9061798459386640};
    constexpr std::array<double, 5> wg{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                       0.2369268850561891, 0.2369268850561891};
    for (Index e = 0; e < mesh.intervals(); ++e) {
      const double x0 = static_cast<double>(e) * h;
      for (std::size_t q = 0; q < xg.size(); ++q) {
        const double t = 0.5 * (xg[q] + 1.0);
        const double f = sine_product(modes, x0 + t * h, 0.0) * wg[q] * 0.5 * h;
        load(e) += f * (1.0 - t);
        load(e + 1) += f * t;
      }
    }
  } else {
    // 7-point degree-5 rule in barycentric coordinates, weights sum to 1
    constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    const std::array<std::array<double, 4>, 7> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
                                                     {a1, b1, b1, w1},
                                                     {b1, a1, b1, w1},
                                                     {b1, b1, a1, w1},
                                                     {a2, b2, b2, w2},
                                                     {b2, a2, b2, w2},
                                                     {b2, b2, a2, w2}}};
    const Index stride = mesh.nodes_per_axis();
    const double area = 0.5 * h * h;
    auto integrate = [&](const std::array<std::array<Index, 2>, 3>& v) {
      for (const auto& q : rule) {
        double x = 0.0;
        double y = 0.0;
        for (int a = 0; a < 3; ++a) {
          x += q[a] * static_cast<double>(v[a][0]) * h;
          y += q[a] * static_cast<double>(v[a][1]) * h;
        }
        const double f = sine_product(modes, x, y) * q[3] * area;
        for (int a = 0; a < 3; ++a) load(v[a][1] * stride + v[a][0]) += f * q[a];
      }
    };
    for (Index k = 0; k < mesh.intervals(); ++k) {
      for (Index i = 0; i < mesh.intervals(); ++i) {
        integrate({{{i, k}, {i + 1, k}, {i + 1, k + 1}}});
        integrate({{{i, k}, {i + 1, k + 1}, {i, k + 1}}});
      }
    }
  }
  return level.solve_mass(load);
}

Vector read_target_csv(const std::string& path, const MeshLevel& level) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open target data file " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw InvalidArgument("target data file " + path + " lacks the '# dim j n_nodes' header");
  }
  std::istringstream header(line.substr(1));
  int dim = 0;
  int j = 0;
  Index n_nodes = 0;
  if (!(header >> dim >> j >> n_nodes)) throw InvalidArgument("malformed header in " + path);
  if (dim != level.dim() || j != level.level() || n_nodes != level.n_nodes()) {
    throw InvalidArgument("target data in " + path + " is for dim=" + std::to_string(dim) + " j=" +
                          std::to_string(j) + ", expected dim=" + std::to_string(level.dim()) +
                          " j=" + std::to_string(level.level()));
  }
  Vector values(n_nodes);
  Index count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (count >= n_nodes) throw InvalidArgument("target data in " + path + " has too many values");
    try {
      values(count++) = std::stod(line);
    } catch (const std::exception&) {
      throw InvalidArgument("non-numeric value '" + line + "' in " + path);
    }
  }
  if (count != n_nodes) {
    throw InvalidArgument("target data in " + path + " has " + std::to_string(count) + " values, expected " +
                          std::to_string(n_nodes));
  }
  return values;
}

void write_target_csv(const std::string& path, const MeshLevel& level, const Vector& values) {
  if (values.size() != level.n_nodes()) throw InvalidArgument("target vector has wrong size");
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write target data file " + path);
  out << "# " << level.dim() << ' ' << level.level() << ' ' << level.n_nodes() << '\n';
  out.precision(17);
  for (Index g = 0; g < values.size(); ++g) out << values(g) << '\n';
}

HessianOp::HessianOp(std::shared_ptr<const Level> level, std::shared_ptr<const SolutionOperator> solution,
                     double beta)
    : level_(std::move(level)), solution_(std::move(solution)), beta_(beta) {
  if (!(beta_ > 0.0)) throw InvalidArgument("regularization beta must be positive");
  if (solution_->control_size() != level_->mesh().n_nodes() ||
      solution_->state_size() != level_->mesh().n_interior()) {
    throw InvalidArgument("solution operator does not match the Hessian level");
  }
}

Vector HessianOp::apply_gram(const Vector& z) const {
  if (z.size() != size()) throw InvalidArgument("Hessian input has wrong size");
  const Vector state = solution_->apply(z);
  return solution_->apply_transpose(level_->operators().mass0 * state) + beta_ * (level_->operators().mass * z);
}

Vector HessianOp::apply(const Vector& z) const {
  if (z.size() != size()) throw InvalidArgument("Hessian input has wrong size");
  const Vector state = solution_->apply(z);
  return level_->solve_mass(solution_->apply_transpose(level_->operators().mass0 * state)) + beta_ * z;
}

DenseMatrix HessianOp::gram_matrix() const {
  const Index n = size();
  const DenseMatrix kc = solution_->apply(DenseMatrix(DenseMatrix::Identity(n, n)));
  DenseMatrix gram = kc.transpose() * (level_->operators().mass0 * kc);
  gram += beta_ * DenseMatrix(level_->operators().mass);
  return gram;
}

Vector assemble_rhs(const ControlProblem& problem) {
  const Level& level = *problem.level;
  if (problem.target.size() != level.mesh().n_nodes()) throw InvalidArgument("target data has wrong size");
  return level.solve_mass(problem.solution->apply_transpose(level.operators().cross * problem.target));
}

SolveResult cg_solve(const HessianOp& hessian, const Vector& rhs, const SolveOptions& options) {
  return run_solver(hessian, PreconditionerFn{}, rhs, options);
}

SolveResult pcg_solve(const HessianOp& hessian, const PreconditionerFn& preconditioner, const Vector& rhs,
                      const SolveOptions& options) {
  if (!preconditioner) throw InvalidArgument("pcg_solve needs a preconditioner");
  return run_solver(hessian, preconditioner, rhs, options);
}

}  // namespace fracmg
