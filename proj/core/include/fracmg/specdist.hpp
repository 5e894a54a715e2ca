#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fracmg/control.hpp"
#include "fracmg/fracop.hpp"
#include "fracmg/meshfem.hpp"

namespace fracmg {

/// Dense matrix of L2 pairings A_ij = <A phi_j, phi_i> for one operator on one level.
struct GramMatrix {
  DenseMatrix matrix;
  int level = 0;
  std::string tag;
  /// max |A - A^T| / max |A| before symmetrization.
  double asymmetry = 0.0;
};

using LinearOperatorFn = std::function<Vector(const Vector&)>;

inline constexpr Index kDefaultDenseCap = 4097;

/// Column k is M * op(e_k); the result is symmetrized and the asymmetry recorded.
GramMatrix materialize(const LinearOperatorFn& op, const Level& level, std::string tag,
                       Index dense_cap = kDefaultDenseCap);

/// Gram matrix of the reduced Hessian using blocked solution-operator solves.
GramMatrix materialize_hessian(const HessianOp& hessian, Index dense_cap = kDefaultDenseCap);

/// Gram matrix of the two-grid preconditioner with an exact coarse Hessian:
/// beta (M - R^T M_c R) + R^T H_c R with R = M_c^{-1} P^T M.
GramMatrix two_grid_gram(const GramMatrix& coarse_hessian, const Level& fine, const Level& coarse,
                         const Prolongation& prolongation, double beta);

/// Eigenvalues of A u = lambda B u (ascending) through a Cholesky congruence of B.
Vector generalized_eigenvalues(const DenseMatrix& a, const DenseMatrix& b);

/// max |ln lambda| over the generalized spectrum of (A, B).
double spectral_distance(const DenseMatrix& a, const DenseMatrix& b);
double spectral_distance(const GramMatrix& a, const GramMatrix& b);

struct SpectralDistanceReport {
  double s = 0.0;
  double beta = 0.0;
  double c_q = 1.0;
  std::vector<int> levels;
  std::vector<double> distances;
  /// log2(d_j / d_{j+1}) for consecutive levels.
  std::vector<double> log2_ratios;
};

/// d(H_h, G_h) on 1D levels j_min..j_max with direct coarse solves.
SpectralDistanceReport rate_table(double s, double beta, int j_min, int j_max, double c_q = 1.0,
                                  Index dense_cap = kDefaultDenseCap);

/// sup_z ||D z|| / ||z|| in L2 for D = K_h - E K_2h pi (interior embedding E).
double two_level_difference_norm(const SolutionOperator& fine_solution, const SolutionOperator& coarse_solution,
                                 const Level& fine, const Level& coarse, const Prolongation& prolongation);

struct LemmaRateReport {
  double s = 0.0;
  double c_q = 1.0;
  std::vector<int> levels;
  std::vector<double> norms;
  std::vector<double> log2_ratios;
};

LemmaRateReport lemma_rate(double s, int j_min, int j_max, double c_q = 1.0, Index dense_cap = kDefaultDenseCap);

/// L2 operator norm of a solution operator, sqrt(lambda_max(Kc^T M0 Kc, M)).
double solution_operator_norm(const SolutionOperator& solution, const Level& level);

/// L2 operator norm of the difference of two solution operators on one level.
double operator_difference_norm(const SolutionOperator& a, const SolutionOperator& b, const Level& level);

}  // namespace fracmg
