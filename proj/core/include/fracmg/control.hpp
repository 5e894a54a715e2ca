#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fracmg/fracop.hpp"
#include "fracmg/meshfem.hpp"
#include "fracmg/types.hpp"

namespace fracmg {

/// Nodal interpolant of prod_i sin(k_i pi x_i); one mode index per axis.
Vector interpolate_sine_product(const MeshLevel& level, const std::vector<int>& modes);

/// L2 projection of the same function onto V_h (Gauss quadrature load vector).
Vector project_sine_product(const Level& level, const std::vector<int>& modes);

/// Target-data CSV: header "# dim j n_nodes", then one nodal value per line
/// in lexicographic node order.
Vector read_target_csv(const std::string& path, const MeshLevel& level);
void write_target_csv(const std::string& path, const MeshLevel& level, const Vector& values);

/// Reduced Hessian H = K^* K + beta I on V_h.
///
/// With Kc the coefficient matrix of K, the Gram form is
/// <H z, w> = (Kc z)^T M0 (Kc w) + beta z^T M w, so H z = M^{-1} Kc^T M0 Kc z + beta z.
class HessianOp {
 public:
  HessianOp(std::shared_ptr<const Level> level, std::shared_ptr<const SolutionOperator> solution, double beta);

  /// H z.
  Vector apply(const Vector& z) const;
  /// M H z = Kc^T M0 Kc z + beta M z; no mass solve.
  Vector apply_gram(const Vector& z) const;
  /// Dense Gram matrix Kc^T M0 Kc + beta M (entries <H phi_j, phi_i>).
  DenseMatrix gram_matrix() const;

  double beta() const { return beta_; }
  const Level& level() const { return *level_; }
  std::shared_ptr<const Level> level_ptr() const { return level_; }
  const SolutionOperator& solution() const { return *solution_; }
  Index size() const { return level_->mesh().n_nodes(); }

 private:
  std::shared_ptr<const Level> level_;
  std::shared_ptr<const SolutionOperator> solution_;
  double beta_;
};

/// The discrete optimal control problem on one level.
struct ControlProblem {
  double s = 0.5;
  double beta = 1.0;
  std::shared_ptr<const Level> level;
  std::shared_ptr<const SolutionOperator> solution;
  Vector target;  ///< u_d as V_h coefficients
};

/// L2 representation in V_h of K^* u_d: M^{-1} Kc^T B u_d.
Vector assemble_rhs(const ControlProblem& problem);

enum class InnerProduct {
  /// CG on the symmetric coefficient system (Kc^T M0 Kc + beta M) z = M rhs,
  /// stopping on the Euclidean residual.
  euclidean,
  /// CG on H z = rhs in the M inner product, stopping on the M-norm residual.
  mass,
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 1000;
  InnerProduct inner_product = InnerProduct::euclidean;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  ///< relative residuals, entry 0 is 1 (or 0 for zero rhs)
  double wall_time = 0.0;                ///< seconds
  bool converged = false;
};

struct SolveResult {
  Vector solution;
  SolveReport report;
};

/// r -> approximate H^{-1} r, acting on L2 representations.
using PreconditionerFn = std::function<Vector(const Vector&)>;

SolveResult cg_solve(const HessianOp& hessian, const Vector& rhs, const SolveOptions& options = {});

/// Preconditioned CG; the preconditioner must be self-adjoint in the M inner product.
SolveResult pcg_solve(const HessianOp& hessian, const PreconditionerFn& preconditioner, const Vector& rhs,
                      const SolveOptions& options = {});

}  // namespace fracmg
