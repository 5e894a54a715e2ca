#include "fracmg/fracop.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "fracmg/error.hpp"

namespace fracmg {

namespace {

void check_order(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("fractional order must lie in (0,1), got " + std::to_string(s));
}

class DirectShiftedSolves final : public ShiftedSolves {
 public:
  DirectShiftedSolves(const Level& level, const QuadratureRule& rule) : weights_(rule.weights) {
    const FEOperators& ops = level.operators();
    factors_.reserve(rule.size());
    Eigen::SimplicialLDLT<SparseMatrix> pattern;
    pattern.analyzePattern(ops.stiffness0 + ops.mass0);
    for (std::size_t l = 0; l < rule.size(); ++l) {
      const SparseMatrix shifted = std::exp(rule.nodes[l]) * ops.mass0 + ops.stiffness0;
      auto factor = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
      factor->compute(shifted);
      if (factor->info() != Eigen::Success || (factor->vectorD().array() <= 0.0).any()) {
        throw NumericalError("shifted system at node y=" + std::to_string(rule.nodes[l]) + " on level " +
                             std::to_string(level.mesh().level()) + " is not SPD");
      }
      factors_.push_back(std::move(factor));
    }
  }

  Vector weighted_sum(const Vector& rhs) const override {
    Vector out = Vector::Zero(rhs.size());
    for (std::size_t l = 0; l < factors_.size(); ++l) out.noalias() += weights_[l] * factors_[l]->solve(rhs);
    return out;
  }

  DenseMatrix weighted_sum(const DenseMatrix& rhs) const override {
    DenseMatrix out = DenseMatrix::Zero(rhs.rows(), rhs.cols());
    for (std::size_t l = 0; l < factors_.size(); ++l) out.noalias() += weights_[l] * factors_[l]->solve(rhs);
    return out;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> factors_;
};

}  // namespace

DenseMatrix SolutionOperator::apply(const DenseMatrix& controls) const {
  DenseMatrix out(state_size(), controls.cols());
  for (Index c = 0; c < controls.cols(); ++c) out.col(c) = apply(Vector(controls.col(c)));
  return out;
}

DenseMatrix ShiftedSolves::weighted_sum(const DenseMatrix& rhs) const {
  DenseMatrix out(rhs.rows(), rhs.cols());
  for (Index c = 0; c < rhs.cols(); ++c) out.col(c) = weighted_sum(Vector(rhs.col(c)));
  return out;
}

QuadratureRule quad_params_with_spacing(double s, double spacing) {
  check_order(s);
  if (!(spacing > 0.0)) throw InvalidArgument("quadrature spacing must be positive");
  constexpr double pi = std::numbers::pi;
  QuadratureRule rule;
  rule.s = s;
  rule.spacing = spacing;
  rule.n_plus = static_cast<int>(std::ceil(pi * pi / (4.0 * s * spacing * spacing)));
  rule.n_minus = static_cast<int>(std::ceil(pi * pi / (4.0 * (1.0 - s) * spacing * spacing)));
  const double prefactor = std::sin(s * pi) / pi * spacing;
  const std::size_t count = static_cast<std::size_t>(rule.n_minus + rule.n_plus + 1);
  rule.nodes.reserve(count);
  rule.weights.reserve(count);
  for (int l = -rule.n_minus; l <= rule.n_plus; ++l) {
    const double y = spacing * l;
    rule.nodes.push_back(y);
    rule.weights.push_back(prefactor * std::exp((1.0 - s) * y));
  }
  return rule;
}

QuadratureRule quad_params(double s, double h, double c_q) {
  check_order(s);
  if (!(h > 0.0 && h < 1.0)) throw InvalidArgument("mesh size must lie in (0,1)");
  if (!(c_q > 0.0)) throw InvalidArgument("quadrature constant c_q must be positive");
  return quad_params_with_spacing(s, c_q / std::log(1.0 / h));
}

double scalar_quadrature(const QuadratureRule& rule, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("scalar quadrature needs lambda > 0");
  double sum = 0.0;
  for (std::size_t l = 0; l < rule.size(); ++l) sum += rule.weights[l] / (std::exp(rule.nodes[l]) + lambda);
  return sum;
}

std::unique_ptr<ShiftedSolves> make_direct_shifted_solves(const Level& level, const QuadratureRule& rule) {
  return std::make_unique<DirectShiftedSolves>(level, rule);
}

FractionalSolveOp::FractionalSolveOp(std::shared_ptr<const Level> level, double s,
                                     const FractionalSolveOptions& options)
    : level_(std::move(level)) {
  check_order(s);
  rule_ = options.spacing ? quad_params_with_spacing(s, *options.spacing)
                          : quad_params(s, level_->mesh().h(), options.c_q);
  backend_ = options.backend;
  if (backend_ == ShiftedSolveBackend::automatic) {
    const bool small = level_->mesh().dim() == 1 || level_->mesh().level() <= options.direct_max_level_2d;
    backend_ = small ? ShiftedSolveBackend::direct : ShiftedSolveBackend::spectral;
  }
  if (backend_ == ShiftedSolveBackend::direct) {
    solves_ = make_direct_shifted_solves(*level_, rule_);
  } else {
    solves_ = make_spectral_shifted_solves(*level_, rule_, options.inner_tol, options.inner_max_iter);
  }
}

Vector FractionalSolveOp::apply(const Vector& control) const {
  if (control.size() != control_size()) throw InvalidArgument("control vector has wrong size");
  return solves_->weighted_sum(Vector(level_->operators().cross * control));
}

DenseMatrix FractionalSolveOp::apply(const DenseMatrix& controls) const {
  if (controls.rows() != control_size()) throw InvalidArgument("control block has wrong row count");
  return solves_->weighted_sum(DenseMatrix(level_->operators().cross * controls));
}

Vector FractionalSolveOp::apply_transpose(const Vector& state) const {
  if (state.size() != state_size()) throw InvalidArgument("state vector has wrong size");
  return level_->operators().cross.transpose() * solves_->weighted_sum(state);
}

DiscreteEigensystem compute_eigensystem(const Level& level, const EigenOracleOptions& options) {
  const MeshLevel& mesh = level.mesh();
  const int cap = mesh.dim() == 1 ? options.max_level_1d : options.max_level_2d;
  if (mesh.level() > cap) {
    throw CapacityError("dense eigensolve refused on level " + std::to_string(mesh.level()) + " (cap " +
                        std::to_string(cap) + ")");
  }
  const DenseMatrix a = DenseMatrix(level.operators().stiffness0);
  const DenseMatrix m = DenseMatrix(level.operators().mass0);
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> solver(a, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalError("generalized eigensolve of (A0, M0) failed");
  DiscreteEigensystem eig;
  eig.level = mesh.level();
  eig.eigenvalues = solver.eigenvalues();
  eig.eigenvectors = solver.eigenvectors();
  return eig;
}

Vector closed_form_eigenvalues_1d(const MeshLevel& level) {
  if (level.dim() != 1) throw InvalidArgument("closed-form eigenvalues are available in 1D only");
  const double h = level.h();
  Vector out(level.n_interior());
  for (Index k = 1; k <= level.n_interior(); ++k) {
    const double c = std::cos(static_cast<double>(k) * std::numbers::pi * h);
    out(k - 1) = 6.0 * (1.0 - c) / (h * h * (2.0 + c));
  }
  return out;
}

ExactSolutionOp::ExactSolutionOp(std::shared_ptr<const Level> level, std::shared_ptr<const DiscreteEigensystem> eig,
                                 double s)
    : level_(std::move(level)), eig_(std::move(eig)) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("exact solution operator needs s in (0,1]");
  if (eig_->level != level_->mesh().level() || eig_->eigenvalues.size() != level_->mesh().n_interior()) {
    throw InvalidArgument("eigensystem does not belong to this level");
  }
  scale_ = eig_->eigenvalues.array().pow(-s);
}

Vector ExactSolutionOp::apply(const Vector& control) const {
  const Vector coeffs = eig_->eigenvectors.transpose() * (level_->operators().cross * control);
  return eig_->eigenvectors * scale_.cwiseProduct(coeffs);
}

DenseMatrix ExactSolutionOp::apply(const DenseMatrix& controls) const {
  const DenseMatrix coeffs = eig_->eigenvectors.transpose() * (level_->operators().cross * controls);
  return eig_->eigenvectors * (scale_.asDiagonal() * coeffs);
}

Vector ExactSolutionOp::apply_transpose(const Vector& state) const {
  const Vector coeffs = eig_->eigenvectors.transpose() * state;
  return level_->operators().cross.transpose() * (eig_->eigenvectors * scale_.cwiseProduct(coeffs));
}

Vector apply_K_exact(const Level& level, const DiscreteEigensystem& eig, double s, const Vector& control) {
  if (control.size() != level.mesh().n_nodes()) throw InvalidArgument("control vector has wrong size");
  const Vector coeffs = eig.eigenvectors.transpose() * (level.operators().cross * control);
  return eig.eigenvectors * (eig.eigenvalues.array().pow(-s).matrix().cwiseProduct(coeffs));
}

}  // namespace fracmg
