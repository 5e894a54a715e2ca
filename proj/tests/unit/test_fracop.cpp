#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>

#include "fracmg/error.hpp"
#include "fracmg/fracop.hpp"
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

std::shared_ptr<const Level> make_level(int dim, int j) { return build_hierarchy(dim, j, j).level_ptr(j); }

}  // namespace

TEST(QuadParams, TermCountsFollowTheCeilingFormulas) {
  const QuadratureRule half = quad_params_with_spacing(0.5, 0.5);
  EXPECT_EQ(half.n_plus, 20);
  EXPECT_EQ(half.n_minus, 20);
  EXPECT_EQ(half.size(), 41u);
  const QuadratureRule quarter = quad_params_with_spacing(0.25, 0.5);
  EXPECT_EQ(quarter.n_plus, 40);
  EXPECT_EQ(quarter.n_minus, 14);
  for (double s : {0.1, 0.3, 0.45}) {
    for (double m : {0.07, 0.2, 0.4}) {
      EXPECT_EQ(quad_params_with_spacing(s, m).n_plus, quad_params_with_spacing(1.0 - s, m).n_minus);
    }
  }
}

TEST(QuadParams, SpacingFromMeshSize) {
  const QuadratureRule rule = quad_params(0.5, 1.0 / 64.0);
  EXPECT_NEAR(rule.spacing, 1.0 / std::log(64.0), 1e-15);
  EXPECT_NEAR(quad_params(0.5, 1.0 / 64.0, 0.5).spacing, 0.5 / std::log(64.0), 1e-15);
  ASSERT_EQ(rule.nodes.size(), rule.weights.size());
  for (std::size_t l = 0; l < rule.size(); ++l) {
    EXPECT_NEAR(rule.nodes[l], rule.spacing * (static_cast<double>(l) - rule.n_minus), 1e-12);
  }
}

TEST(QuadParams, WeightsArePositive) {
  for (double s = 0.05; s < 1.0; s += 0.05) {
    for (double w : quad_params_with_spacing(s, 0.3).weights) EXPECT_GT(w, 0.0);
  }
}

TEST(QuadParams, RejectsDegenerateInputs) {
  EXPECT_THROW(quad_params(0.0, 0.25), InvalidArgument);
  EXPECT_THROW(quad_params(1.0, 0.25), InvalidArgument);
  EXPECT_THROW(quad_params(0.5, 1.5), InvalidArgument);
  EXPECT_THROW(quad_params(0.5, 0.25, -1.0), InvalidArgument);
  EXPECT_THROW(quad_params_with_spacing(0.5, 0.0), InvalidArgument);
}

TEST(ScalarQuadrature, KnownValues) {
  const QuadratureRule rule = quad_params_with_spacing(0.5, 0.1);
  EXPECT_NEAR(scalar_quadrature(rule, 1.0), 1.0, 1e-6);
  EXPECT_NEAR(scalar_quadrature(rule, 4.0), 0.5, 1e-6);
}

TEST(ScalarQuadrature, ErrorDropsTenfoldWhenSpacingHalves) {
  for (double s : {0.25, 0.5, 0.75}) {
    for (double lambda : {9.87, 10.0, 1e3, 1e6}) {
      const double e1 = std::abs(scalar_quadrature(quad_params_with_spacing(s, 0.4), lambda) - std::pow(lambda, -s));
      const double e2 = std::abs(scalar_quadrature(quad_params_with_spacing(s, 0.2), lambda) - std::pow(lambda, -s));
      EXPECT_LE(10.0 * e2, e1) << "s=" << s << " lambda=" << lambda;
    }
  }
}

TEST(FractionalSolveOp, ZeroMapsToZero) {
  FractionalSolveOp k(make_level(1, 4), 0.4);
  EXPECT_EQ(k.apply(Vector(Vector::Zero(17))).norm(), 0.0);
  EXPECT_EQ(k.state_size(), 15);
  EXPECT_EQ(k.control_size(), 17);
}

TEST(FractionalSolveOp, AdjointPairingIsSymmetric) {
  for (int dim : {1, 2}) {
    auto level = make_level(dim, 4);
    FractionalSolveOp k(level, 0.3);
    const Index n = level->mesh().n_nodes();
    const Vector z = random_vector(n, 1);
    const Vector w = random_vector(n, 2);
    const SparseMatrix& b = level->operators().cross;
    // <K z, w> in L2 is (K z)^T B w
    const double lhs = k.apply(z).dot(b * w);
    const double rhs = k.apply(w).dot(b * z);
    EXPECT_NEAR(lhs, rhs, 1e-12 * z.norm() * w.norm());
    const Vector y = random_vector(k.state_size(), 3);
    EXPECT_NEAR(y.dot(k.apply(z)), k.apply_transpose(y).dot(z), 1e-12 * y.norm() * z.norm());
  }
}

TEST(FractionalSolveOp, BlockApplyMatchesColumnApply) {
  auto level = make_level(2, 3);
  FractionalSolveOp k(level, 0.6);
  const DenseMatrix z = DenseMatrix::Random(level->mesh().n_nodes(), 3);
  const DenseMatrix block = k.apply(z);
  for (Index c = 0; c < 3; ++c) EXPECT_LT((block.col(c) - k.apply(Vector(z.col(c)))).norm(), 1e-13);
}

TEST(FractionalSolveOp, EigenvectorIsScaledByLambdaToMinusS) {
  auto level = make_level(1, 6);
  auto eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*level));
  FractionalSolveOptions opts;
  opts.spacing = 0.05;
  const double s = 0.5;
  FractionalSolveOp k(level, s, opts);
  for (Index idx : {0, 5, 40}) {
    const Vector phi = eig->eigenvectors.col(idx);
    const Vector out = k.apply(level->mesh().embed_interior(phi));
    const Vector expected = std::pow(eig->eigenvalues(idx), -s) * phi;
    EXPECT_LT((out - expected).norm(), 1e-6 * expected.norm()) << "mode " << idx;
  }
}

TEST(FractionalSolveOp, SpectralBackendMatchesDirect2D) {
  auto level = make_level(2, 4);
  for (double s : {0.25, 0.5, 0.8}) {
    FractionalSolveOptions direct;
    direct.backend = ShiftedSolveBackend::direct;
    FractionalSolveOptions spectral;
    spectral.backend = ShiftedSolveBackend::spectral;
    FractionalSolveOp kd(level, s, direct);
    FractionalSolveOp ks(level, s, spectral);
    EXPECT_EQ(kd.backend(), ShiftedSolveBackend::direct);
    EXPECT_EQ(ks.backend(), ShiftedSolveBackend::spectral);
    const Vector z = random_vector(level->mesh().n_nodes(), 8);
    const Vector a = kd.apply(z);
    EXPECT_LT((ks.apply(z) - a).norm(), 1e-10 * a.norm()) << "s=" << s;
    const Vector y = random_vector(kd.state_size(), 9);
    EXPECT_LT((ks.apply_transpose(y) - kd.apply_transpose(y)).norm(), 1e-10 * kd.apply_transpose(y).norm());
  }
}

TEST(FractionalSolveOp, AutomaticBackendChoice) {
  EXPECT_EQ(FractionalSolveOp(make_level(1, 8), 0.5).backend(), ShiftedSolveBackend::direct);
  EXPECT_EQ(FractionalSolveOp(make_level(2, 5), 0.5).backend(), ShiftedSolveBackend::direct);
  EXPECT_EQ(FractionalSolveOp(make_level(2, 6), 0.5).backend(), ShiftedSolveBackend::spectral);
  FractionalSolveOptions spectral;
  spectral.backend = ShiftedSolveBackend::spectral;
  EXPECT_THROW(FractionalSolveOp(make_level(1, 4), 0.5, spectral), InvalidArgument);
}

TEST(ExactSolutionOp, EigenvectorsAreScaledExactly) {
  auto level = make_level(1, 5);
  auto eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*level));
  const double s = 0.3;
  for (Index idx : {0, 10, 30}) {
    const Vector phi = eig->eigenvectors.col(idx);
    const Vector out = apply_K_exact(*level, *eig, s, level->mesh().embed_interior(phi));
    EXPECT_LT((out - std::pow(eig->eigenvalues(idx), -s) * phi).norm(), 1e-10 * phi.norm());
  }
}

TEST(ExactSolutionOp, OrderOneIsTheDirichletSolve) {
  auto level = make_level(1, 5);
  auto eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*level));
  ExactSolutionOp k(level, eig, 1.0);
  Eigen::SimplicialLDLT<SparseMatrix> a0(level->operators().stiffness0);
  const Vector z = random_vector(level->mesh().n_nodes(), 4);
  const Vector direct = a0.solve(level->operators().cross * z);
  EXPECT_LT((k.apply(z) - direct).norm(), 1e-10 * direct.norm());
}

TEST(ExactSolutionOp, EigenOracleCap) {
  EigenOracleOptions opts;
  opts.max_level_1d = 4;
  EXPECT_THROW(compute_eigensystem(*make_level(1, 5), opts), CapacityError);
  EXPECT_THROW(compute_eigensystem(*make_level(2, 6)), CapacityError);
}

TEST(FractionalSolveOp, QuadratureMatchesOracleInOperatorNorm) {
  auto level = make_level(1, 6);
  auto eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*level));
  FractionalSolveOptions opts;
  opts.spacing = 0.05;
  for (double s : {0.3, 0.5, 0.7}) {
    const FractionalSolveOp quad(level, s, opts);
    const ExactSolutionOp exact(level, eig, s);
    EXPECT_LE(operator_difference_norm(quad, exact, *level), 1e-5) << "s=" << s;
  }
}

TEST(FractionalSolveOp, OperatorNormStaysBounded) {
  const MeshHierarchy h = build_hierarchy(1, 3, 7);
  for (double s : {0.25, 0.75}) {
    const double first = solution_operator_norm(FractionalSolveOp(h.level_ptr(3), s), h.level(3));
    for (int j = 4; j <= 7; ++j) {
      EXPECT_LT(solution_operator_norm(FractionalSolveOp(h.level_ptr(j), s), h.level(j)), 2.0 * first);
    }
  }
}

TEST(FractionalSolveOp, RejectsBadOrder) {
  EXPECT_THROW(FractionalSolveOp(make_level(1, 3), 1.0), InvalidArgument);
  auto level = make_level(1, 3);
  auto eig = std::make_shared<const DiscreteEigensystem>(compute_eigensystem(*level));
  EXPECT_THROW(ExactSolutionOp(level, eig, 0.0), InvalidArgument);
}
