#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Cholesky>

#include "fracmg/control.hpp"
#include "fracmg/error.hpp"
#include "fracmg/specdist.hpp"

using namespace fracmg;

namespace {

Vector random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

struct ExactSetup {
  std::shared_ptr<const Level> level;
  std::shared_ptr<const DiscreteEigensystem> eig;
  std::shared_ptr<const SolutionOperator> k;
};

ExactSetup exact_setup(int j, double s) {
  ExactSetup e;
  e.level = build_hierarchy(1, j, j).level_ptr(j);
  e.eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*e.level));
  e.k = std::make_shared<const ExactSolutionOp>(e.level, e.eig, s);
  return e;
}

Vector dense_solve(const HessianOp& h, const Vector& rhs) {
  Eigen::LLT<DenseMatrix> llt(materialize_hessian(h).matrix);
  return llt.solve(h.level().operators().mass * rhs);
}

double m_norm(const Level& level, const Vector& v) { return std::sqrt(v.dot(level.operators().mass * v)); }

}  // namespace

TEST(Target, SineProductInterpolant) {
  const MeshLevel mesh(2, 3);
  const Vector u = interpolate_sine_product(mesh, {4, 3});
  for (Index g = 0; g < mesh.n_nodes(); ++g) {
    const double expected = std::sin(4 * M_PI * mesh.coordinate(g, 0)) * std::sin(3 * M_PI * mesh.coordinate(g, 1));
    EXPECT_NEAR(u(g), expected, 1e-15);
  }
  EXPECT_THROW(interpolate_sine_product(mesh, {1}), InvalidArgument);
}

TEST(Target, ProjectionIsCloseToInterpolant) {
  const MeshHierarchy h = build_hierarchy(1, 7, 7);
  const Vector p = project_sine_product(h.level(7), {1});
  const Vector i = interpolate_sine_product(h.level(7).mesh(), {1});
  EXPECT_LT((p - i).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_GT((p - i).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Target, CsvRoundTrip) {
  const MeshLevel mesh(2, 3);
  const Vector u = random_vector(mesh.n_nodes(), 7);
  const auto path = (std::filesystem::temp_directory_path() / "fracmg_target_roundtrip.csv").string();
  write_target_csv(path, mesh, u);
  EXPECT_EQ(read_target_csv(path, mesh), u);
  EXPECT_THROW(read_target_csv(path, MeshLevel(2, 4)), InvalidArgument);
  EXPECT_THROW(read_target_csv(path, MeshLevel(1, 3)), InvalidArgument);
  std::filesystem::remove(path);
  EXPECT_THROW(read_target_csv(path, mesh), InvalidArgument);
}

TEST(Target, CsvRejectsMissingHeaderAndShortFiles) {
  const MeshLevel mesh(1, 2);
  const auto path = (std::filesystem::temp_directory_path() / "fracmg_target_bad.csv").string();
  {
    std::ofstream out(path);
    out << "1\n2\n3\n4\n5\n";
  }
  EXPECT_THROW(read_target_csv(path, mesh), InvalidArgument);
  {
    std::ofstream out(path);
    out << "# 1 2 5\n1\n2\n";
  }
  EXPECT_THROW(read_target_csv(path, mesh), InvalidArgument);
  std::filesystem::remove(path);
}

TEST(HessianOp, ZeroInputAndZeroOperator) {
  const MeshHierarchy h = build_hierarchy(1, 4, 4);
  auto level = h.level_ptr(4);
  const HessianOp with_k(level, std::make_shared<const FractionalSolveOp>(level, 0.5), 0.3);
  EXPECT_EQ(with_k.apply(Vector::Zero(17)).norm(), 0.0);

  const HessianOp no_k(level, std::make_shared<const ZeroSolutionOp>(17, 15), 0.3);
  const DenseMatrix expected = 0.3 * DenseMatrix(level->operators().mass);
  EXPECT_LT((no_k.gram_matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);
  const Vector z = random_vector(17, 1);
  EXPECT_LT((no_k.apply(z) - 0.3 * z).norm(), 1e-12 * z.norm());
}

TEST(HessianOp, RejectsBadArguments) {
  const MeshHierarchy h = build_hierarchy(1, 4, 5);
  auto level = h.level_ptr(4);
  auto k = std::make_shared<const FractionalSolveOp>(level, 0.5);
  EXPECT_THROW(HessianOp(level, k, 0.0), InvalidArgument);
  EXPECT_THROW(HessianOp(level, k, -1.0), InvalidArgument);
  EXPECT_THROW(HessianOp(h.level_ptr(5), k, 1.0), InvalidArgument);
  const HessianOp ok(level, k, 1.0);
  EXPECT_THROW(ok.apply(Vector::Zero(5)), InvalidArgument);
}

TEST(HessianOp, EigenvectorsWithExactK) {
  const double s = 0.4;
  const double beta = 0.05;
  const ExactSetup e = exact_setup(5, s);
  const HessianOp h(e.level, e.k, beta);
  for (Index idx : {0, 3, 20}) {
    const Vector z = e.level->mesh().embed_interior(e.eig->eigenvectors.col(idx));
    const double factor = std::pow(e.eig->eigenvalues(idx), -2 * s) + beta;
    EXPECT_LT((h.apply(z) - factor * z).norm(), 1e-10 * factor * z.norm());
  }
}

TEST(HessianOp, GramSymmetryAndCoercivity) {
  for (int dim : {1, 2}) {
    const int j = dim == 1 ? 6 : 4;
    const MeshHierarchy hier = build_hierarchy(dim, j, j);
    auto level = hier.level_ptr(j);
    const double beta = 1e-2;
    const HessianOp h(level, std::make_shared<const FractionalSolveOp>(level, 0.35), beta);
    const SparseMatrix& m = level->operators().mass;
    for (unsigned t = 0; t < 20; ++t) {
      const Vector z = random_vector(h.size(), 100 + t);
      const Vector w = random_vector(h.size(), 200 + t);
      EXPECT_NEAR(h.apply(z).dot(m * w), z.dot(m * h.apply(w)), 1e-11 * z.norm() * w.norm());
      const double hzz = h.apply(z).dot(m * z);
      EXPECT_GE(hzz, beta * z.dot(m * z) * (1.0 - 1e-13));
    }
  }
}

TEST(AssembleRhs, ZeroTargetGivesZero) {
  const ExactSetup e = exact_setup(4, 0.5);
  const ControlProblem p{0.5, 1.0, e.level, e.k, Vector::Zero(17)};
  EXPECT_EQ(assemble_rhs(p).norm(), 0.0);
}

TEST(AssembleRhs, FirstEigenfunctionWithExactK) {
  const double s = 0.6;
  const ExactSetup e = exact_setup(5, s);
  const Vector phi = e.level->mesh().embed_interior(e.eig->eigenvectors.col(0));
  const ControlProblem p{s, 1.0, e.level, e.k, phi};
  const Vector rhs = assemble_rhs(p);
  EXPECT_LT((rhs - std::pow(e.eig->eigenvalues(0), -s) * phi).norm(), 1e-10 * phi.norm());
}

TEST(AssembleRhs, SineProductDataIsNonzero2D) {
  const MeshHierarchy hier = build_hierarchy(2, 4, 4);
  auto level = hier.level_ptr(4);
  const ControlProblem p{0.5, 1e-3, level, std::make_shared<const FractionalSolveOp>(level, 0.5),
                         interpolate_sine_product(level->mesh(), {4, 3})};
  EXPECT_GT(assemble_rhs(p).norm(), 0.0);
}

TEST(CgSolve, ZeroRhs) {
  const ExactSetup e = exact_setup(4, 0.5);
  const HessianOp h(e.level, e.k, 0.1);
  for (InnerProduct ip : {InnerProduct::euclidean, InnerProduct::mass}) {
    SolveOptions opts;
    opts.inner_product = ip;
    const SolveResult r = cg_solve(h, Vector::Zero(17), opts);
    EXPECT_EQ(r.report.iterations, 0);
    EXPECT_TRUE(r.report.converged);
    EXPECT_EQ(r.solution.norm(), 0.0);
  }
}

TEST(CgSolve, MatchesDenseDirectWithExactK) {
  const double s = 0.5;
  const ExactSetup e = exact_setup(6, s);
  const HessianOp h(e.level, e.k, 0.1);
  const ControlProblem p{s, 0.1, e.level, e.k, interpolate_sine_product(e.level->mesh(), {1})};
  const Vector rhs = assemble_rhs(p);
  const Vector direct = dense_solve(h, rhs);
  for (InnerProduct ip : {InnerProduct::euclidean, InnerProduct::mass}) {
    SolveOptions opts;
    opts.tol = 1e-13;
    opts.inner_product = ip;
    const SolveResult r = cg_solve(h, rhs, opts);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LT(m_norm(*e.level, r.solution - direct), 1e-8 * m_norm(*e.level, direct));
  }
}

TEST(CgSolve, ReportIsConsistent) {
  const MeshHierarchy hier = build_hierarchy(1, 7, 7);
  auto level = hier.level_ptr(7);
  auto k = std::make_shared<const FractionalSolveOp>(level, 0.3);
  const HessianOp h(level, k, 1e-3);
  const ControlProblem p{0.3, 1e-3, level, k, interpolate_sine_product(level->mesh(), {2})};
  const Vector rhs = assemble_rhs(p);
  const SolveResult r = cg_solve(h, rhs);
  ASSERT_TRUE(r.report.converged);
  ASSERT_EQ(r.report.residual_history.size(), static_cast<std::size_t>(r.report.iterations) + 1);
  EXPECT_EQ(r.report.residual_history.front(), 1.0);
  EXPECT_LE(r.report.residual_history.back(), 1e-6);
  for (double v : r.report.residual_history) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(r.report.wall_time, 0.0);

  // scaling the data by a positive constant leaves the count unchanged up to one
  const SolveResult scaled = cg_solve(h, 37.0 * rhs);
  EXPECT_LE(std::abs(scaled.report.iterations - r.report.iterations), 1);
}

TEST(CgSolve, NonConvergenceIsReported) {
  const MeshHierarchy hier = build_hierarchy(1, 6, 6);
  auto level = hier.level_ptr(6);
  auto k = std::make_shared<const FractionalSolveOp>(level, 0.3);
  const HessianOp h(level, k, 1e-6);
  const ControlProblem p{0.3, 1e-6, level, k, interpolate_sine_product(level->mesh(), {3})};
  SolveOptions opts;
  opts.max_iter = 2;
  opts.tol = 1e-12;
  const SolveResult r = cg_solve(h, assemble_rhs(p), opts);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 2);
}

TEST(CgSolve, RejectsBadOptionsAndIndefinitePreconditioner) {
  const ExactSetup e = exact_setup(4, 0.5);
  const HessianOp h(e.level, e.k, 0.1);
  const Vector rhs = Vector::Ones(17);
  SolveOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(cg_solve(h, rhs, bad), InvalidArgument);
  EXPECT_THROW(cg_solve(h, Vector::Ones(3)), InvalidArgument);
  EXPECT_THROW(pcg_solve(h, [](const Vector& r) -> Vector { return -r; }, rhs), NumericalError);
}
