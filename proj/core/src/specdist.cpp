#include "fracmg/specdist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fracmg/error.hpp"

namespace fracmg {

namespace {

void check_cap(const Level& level, Index cap) {
  if (level.mesh().n_nodes() > cap) {
    throw CapacityError("level " + std::to_string(level.mesh().level()) + " has " +
                        std::to_string(level.mesh().n_nodes()) + " nodes, above the dense cap " +
                        std::to_string(cap));
  }
}

GramMatrix symmetrized(DenseMatrix m, int level, std::string tag) {
  GramMatrix g;
  const double scale = m.cwiseAbs().maxCoeff();
  g.asymmetry = scale > 0.0 ? (m - m.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  g.matrix = 0.5 * (m + m.transpose());
  g.level = level;
  g.tag = std::move(tag);
  return g;
}

std::vector<double> log2_ratios(const std::vector<double>& values) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) out.push_back(std::log2(values[i] / values[i + 1]));
  return out;
}

}  // namespace

GramMatrix materialize(const LinearOperatorFn& op, const Level& level, std::string tag, Index dense_cap) {
  check_cap(level, dense_cap);
  const Index n = level.mesh().n_nodes();
  DenseMatrix cols(n, n);
  Vector e = Vector::Zero(n);
  for (Index k = 0; k < n; ++k) {
    e(k) = 1.0;
    cols.col(k) = op(e);
    e(k) = 0.0;
  }
  return symmetrized(level.operators().mass * cols, level.mesh().level(), std::move(tag));
}

GramMatrix materialize_hessian(const HessianOp& hessian, Index dense_cap) {
  check_cap(hessian.level(), dense_cap);
  return symmetrized(hessian.gram_matrix(), hessian.level().mesh().level(), "H");
}

GramMatrix two_grid_gram(const GramMatrix& coarse_hessian, const Level& fine, const Level& coarse,
                         const Prolongation& prolongation, double beta) {
  const DenseMatrix r = l2_projection_matrix(fine, coarse, prolongation);
  const DenseMatrix mc = DenseMatrix(coarse.operators().mass);
  DenseMatrix g = beta * (DenseMatrix(fine.operators().mass) - r.transpose() * mc * r);
  g += r.transpose() * coarse_hessian.matrix * r;
  return symmetrized(std::move(g), fine.mesh().level(), "G");
}

Vector generalized_eigenvalues(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw InvalidArgument("generalized eigenproblem needs square matrices of equal size");
  }
  Eigen::LLT<DenseMatrix> chol(b);
  if (chol.info() != Eigen::Success) {
    throw NumericalError("right-hand matrix of the pencil is not positive definite");
  }
  // C = L^{-1} A L^{-T}
  DenseMatrix c = chol.matrixL().solve(a);
  c = chol.matrixL().solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(c, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolve failed");
  return eig.eigenvalues();
}

double spectral_distance(const DenseMatrix& a, const DenseMatrix& b) {
  const Vector lambda = generalized_eigenvalues(a, b);
  if (lambda(0) <= 0.0) {
    throw NumericalError("pencil has a non-positive eigenvalue " + std::to_string(lambda(0)) +
                         "; spectral distance needs two SPD operators");
  }
  return std::max(std::abs(std::log(lambda(0))), std::abs(std::log(lambda(lambda.size() - 1))));
}

double spectral_distance(const GramMatrix& a, const GramMatrix& b) {
  if (a.level != b.level) throw InvalidArgument("spectral distance needs Gram matrices on the same level");
  return spectral_distance(a.matrix, b.matrix);
}

SpectralDistanceReport rate_table(double s, double beta, int j_min, int j_max, double c_q, Index dense_cap) {
  if (j_max - j_min < 2) throw InvalidArgument("rate table needs j_max - j_min >= 2");
  if (j_min < 3) throw InvalidArgument("rate table needs j_min >= 3 (its coarse level must be >= 2)");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  const MeshHierarchy hierarchy = build_hierarchy(1, j_min - 1, j_max);
  FractionalSolveOptions fopts;
  fopts.c_q = c_q;

  auto hessian_gram = [&](int j) {
    auto level = hierarchy.level_ptr(j);
    check_cap(*level, dense_cap);
    auto k = std::make_shared<const FractionalSolveOp>(level, s, fopts);
    return materialize_hessian(HessianOp(level, k, beta), dense_cap);
  };

  SpectralDistanceReport report;
  report.s = s;
  report.beta = beta;
  report.c_q = c_q;
  GramMatrix coarse = hessian_gram(j_min - 1);
  for (int j = j_min; j <= j_max; ++j) {
    GramMatrix fine = hessian_gram(j);
    const GramMatrix g =
        two_grid_gram(coarse, hierarchy.level(j), hierarchy.level(j - 1), hierarchy.prolongation(j), beta);
    report.levels.push_back(j);
    report.distances.push_back(spectral_distance(fine, g));
    coarse = std::move(fine);
  }
  report.log2_ratios = log2_ratios(report.distances);
  return report;
}

namespace {

// sqrt(lambda_max(D^T M0 D, M)) for a coefficient matrix D: V_h -> V_h^0.
double coefficient_norm(const DenseMatrix& d, const Level& level) {
  const DenseMatrix dtmd = d.transpose() * (level.operators().mass0 * d);
  const Vector lambda = generalized_eigenvalues(0.5 * (dtmd + dtmd.transpose()), DenseMatrix(level.operators().mass));
  return std::sqrt(std::max(lambda(lambda.size() - 1), 0.0));
}

DenseMatrix identity_of(const Level& level) {
  const Index n = level.mesh().n_nodes();
  return DenseMatrix::Identity(n, n);
}

}  // namespace

double two_level_difference_norm(const SolutionOperator& fine_solution, const SolutionOperator& coarse_solution,
                                 const Level& fine, const Level& coarse, const Prolongation& prolongation) {
  const DenseMatrix r = l2_projection_matrix(fine, coarse, prolongation);
  const DenseMatrix d = fine_solution.apply(identity_of(fine)) - prolongation.interior * coarse_solution.apply(r);
  return coefficient_norm(d, fine);
}

double solution_operator_norm(const SolutionOperator& solution, const Level& level) {
  return coefficient_norm(solution.apply(identity_of(level)), level);
}

double operator_difference_norm(const SolutionOperator& a, const SolutionOperator& b, const Level& level) {
  const DenseMatrix id = identity_of(level);
  return coefficient_norm(a.apply(id) - b.apply(id), level);
}

LemmaRateReport lemma_rate(double s, int j_min, int j_max, double c_q, Index dense_cap) {
  if (j_max <= j_min) throw InvalidArgument("lemma rate needs j_max > j_min");
  if (j_min < 3) throw InvalidArgument("lemma rate needs j_min >= 3");
  const MeshHierarchy hierarchy = build_hierarchy(1, j_min - 1, j_max);
  FractionalSolveOptions fopts;
  fopts.c_q = c_q;
  LemmaRateReport report;
  report.s = s;
  report.c_q = c_q;
  auto coarse_k = std::make_shared<const FractionalSolveOp>(hierarchy.level_ptr(j_min - 1), s, fopts);
  for (int j = j_min; j <= j_max; ++j) {
    check_cap(hierarchy.level(j), dense_cap);
    auto fine_k = std::make_shared<const FractionalSolveOp>(hierarchy.level_ptr(j), s, fopts);
    report.levels.push_back(j);
    report.norms.push_back(two_level_difference_norm(*fine_k, *coarse_k, hierarchy.level(j), hierarchy.level(j - 1),
                                                     hierarchy.prolongation(j)));
    coarse_k = std::move(fine_k);
  }
  report.log2_ratios = log2_ratios(report.norms);
  return report;
}

}  // namespace fracmg
