#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "fracmg/meshfem.hpp"
#include "fracmg/types.hpp"

namespace fracmg {

/// Sinc quadrature for the resolvent integral representation of L^{-s}:
///
///   L^{-s} ~ sum_l w_l (e^{y_l} + L)^{-1},   y_l = m l,  l = -N_minus..N_plus,
///   w_l = sin(s pi)/pi * m * e^{(1-s) y_l}.
///
/// N_plus = ceil(pi^2 / (4 s m^2)) and N_minus = ceil(pi^2 / (4 (1-s) m^2))
/// balance the two truncation tails against the discretization error.
struct QuadratureRule {
  double s = 0.5;
  double spacing = 0.0;  ///< m
  int n_minus = 0;
  int n_plus = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Rule with spacing m = c_q / ln(1/h).
QuadratureRule quad_params(double s, double h, double c_q = 1.0);
/// Rule with an explicitly chosen spacing m.
QuadratureRule quad_params_with_spacing(double s, double spacing);

/// sum_l w_l / (e^{y_l} + lambda), the scalar counterpart of the operator sum.
double scalar_quadrature(const QuadratureRule& rule, double lambda);

/// Discrete control-to-state map K: V_h -> V_h^0 in coefficient form.
///
/// apply() returns interior coefficients of K z for a control z given on all
/// nodes; apply_transpose() is the plain matrix transpose of that map.
class SolutionOperator {
 public:
  virtual ~SolutionOperator() = default;

  virtual Index control_size() const = 0;
  virtual Index state_size() const = 0;

  virtual Vector apply(const Vector& control) const = 0;
  virtual Vector apply_transpose(const Vector& state) const = 0;

  /// Column-wise apply; overridden where a blocked solve is cheaper.
  virtual DenseMatrix apply(const DenseMatrix& controls) const;
};

enum class ShiftedSolveBackend {
  automatic,  ///< direct in 1D and on small 2D grids, spectral otherwise
  direct,     ///< one sparse LDL^T factorization per quadrature node
  spectral,   ///< 2D only: CG per node, preconditioned by a sine-basis diagonal
};

struct FractionalSolveOptions {
  double c_q = 1.0;
  /// Overrides c_q / ln(1/h) when set.
  std::optional<double> spacing;
  ShiftedSolveBackend backend = ShiftedSolveBackend::automatic;
  /// Largest 2D level that `automatic` still factorizes directly.
  int direct_max_level_2d = 5;
  double inner_tol = 1e-12;
  int inner_max_iter = 500;
};

/// Computes sum_l w_l S_l^{-1} b with S_l = e^{y_l} M0 + A0 on interior nodes.
class ShiftedSolves {
 public:
  virtual ~ShiftedSolves() = default;
  virtual Vector weighted_sum(const Vector& rhs) const = 0;
  virtual DenseMatrix weighted_sum(const DenseMatrix& rhs) const;
};

std::unique_ptr<ShiftedSolves> make_direct_shifted_solves(const Level& level, const QuadratureRule& rule);
std::unique_ptr<ShiftedSolves> make_spectral_shifted_solves(const Level& level, const QuadratureRule& rule,
                                                            double tol, int max_iter);

/// Quadrature realization of K: K z = sum_l w_l S_l^{-1} (B z).
class FractionalSolveOp final : public SolutionOperator {
 public:
  FractionalSolveOp(std::shared_ptr<const Level> level, double s, const FractionalSolveOptions& options = {});

  Index control_size() const override { return level_->mesh().n_nodes(); }
  Index state_size() const override { return level_->mesh().n_interior(); }

  Vector apply(const Vector& control) const override;
  Vector apply_transpose(const Vector& state) const override;
  DenseMatrix apply(const DenseMatrix& controls) const override;

  const QuadratureRule& rule() const { return rule_; }
  const Level& level() const { return *level_; }
  ShiftedSolveBackend backend() const { return backend_; }

 private:
  std::shared_ptr<const Level> level_;
  QuadratureRule rule_;
  ShiftedSolveBackend backend_;
  std::unique_ptr<ShiftedSolves> solves_;
};

/// Generalized eigenpairs of A0 phi = lambda M0 phi, M0-orthonormal, ascending.
struct DiscreteEigensystem {
  int level = 0;
  Vector eigenvalues;
  DenseMatrix eigenvectors;  ///< columns, interior coefficients
};

struct EigenOracleOptions {
  int max_level_1d = 8;
  int max_level_2d = 5;
};

DiscreteEigensystem compute_eigensystem(const Level& level, const EigenOracleOptions& options = {});

/// Closed-form 1D eigenvalues 6(1 - cos(k pi h)) / (h^2 (2 + cos(k pi h))).
Vector closed_form_eigenvalues_1d(const MeshLevel& level);

/// Spectral realization sum_k lambda_k^{-s} <z, phi_k> phi_k; the oracle for K.
class ExactSolutionOp final : public SolutionOperator {
 public:
  ExactSolutionOp(std::shared_ptr<const Level> level, std::shared_ptr<const DiscreteEigensystem> eig, double s);

  Index control_size() const override { return level_->mesh().n_nodes(); }
  Index state_size() const override { return level_->mesh().n_interior(); }

  Vector apply(const Vector& control) const override;
  Vector apply_transpose(const Vector& state) const override;
  DenseMatrix apply(const DenseMatrix& controls) const override;

 private:
  std::shared_ptr<const Level> level_;
  std::shared_ptr<const DiscreteEigensystem> eig_;
  Vector scale_;  ///< lambda_k^{-s}
};

/// apply_K_exact: the oracle applied to one control vector.
Vector apply_K_exact(const Level& level, const DiscreteEigensystem& eig, double s, const Vector& control);

/// K that maps everything to zero; isolates the regularization term.
class ZeroSolutionOp final : public SolutionOperator {
 public:
  ZeroSolutionOp(Index control_size, Index state_size) : n_control_(control_size), n_state_(state_size) {}
  Index control_size() const override { return n_control_; }
  Index state_size() const override { return n_state_; }
  Vector apply(const Vector&) const override { return Vector::Zero(n_state_); }
  Vector apply_transpose(const Vector&) const override { return Vector::Zero(n_control_); }

 private:
  Index n_control_;
  Index n_state_;
};

}  // namespace fracmg
