#include "fracmg/precond.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "fracmg/error.hpp"

namespace fracmg {

DenseHessianInverse::DenseHessianInverse(const HessianOp& hessian, Index dense_cap) : level_(hessian.level_ptr()) {
  if (hessian.size() > dense_cap) {
    throw CapacityError("coarsest Hessian on level " + std::to_string(level_->mesh().level()) + " has " +
                        std::to_string(hessian.size()) + " unknowns, above the dense cap " +
                        std::to_string(dense_cap));
  }
  DenseMatrix gram = hessian.gram_matrix();
  gram = 0.5 * (gram + gram.transpose()).eval();
  factor_.compute(gram);
  if (factor_.info() != Eigen::Success) {
    throw NumericalError("dense Cholesky of the coarsest Hessian failed on level " +
                         std::to_string(level_->mesh().level()));
  }
}

Vector DenseHessianInverse::solve(const Vector& w) const { return factor_.solve(level_->operators().mass * w); }

TwoGridPrecond::TwoGridPrecond(std::shared_ptr<const Level> fine, std::shared_ptr<const Level> coarse,
                               std::shared_ptr<const Prolongation> prolongation,
                               std::shared_ptr<const HessianOp> coarse_hessian,
                               std::shared_ptr<const CoarseInverse> coarse_inverse, double beta)
    : fine_(std::move(fine)),
      coarse_(std::move(coarse)),
      prolongation_(std::move(prolongation)),
      coarse_hessian_(std::move(coarse_hessian)),
      coarse_inverse_(std::move(coarse_inverse)),
      beta_(beta) {
  if (!(beta_ > 0.0)) throw InvalidArgument("two-grid preconditioner needs beta > 0");
  if (coarse_->mesh().level() + 1 != fine_->mesh().level()) {
    throw InvalidArgument("two-grid levels must be consecutive");
  }
  if (prolongation_->full.rows() != fine_->mesh().n_nodes() ||
      prolongation_->full.cols() != coarse_->mesh().n_nodes()) {
    throw InvalidArgument("prolongation does not match the two-grid levels");
  }
  if (coarse_hessian_ && coarse_hessian_->size() != coarse_->mesh().n_nodes()) {
    throw InvalidArgument("coarse Hessian does not live on the coarse level");
  }
}

Vector TwoGridPrecond::project(const Vector& z) const { return l2_project_coarse(*fine_, *coarse_, *prolongation_, z); }

Vector TwoGridPrecond::embed(const Vector& w) const { return prolongation_->full * w; }

Vector TwoGridPrecond::apply(const Vector& z) const {
  if (!coarse_hessian_) throw InvalidArgument("two-grid preconditioner has no coarse Hessian");
  const Vector coarse = project(z);
  const Vector embedded = embed(coarse);
  return beta_ * (z - embedded) + embed(coarse_hessian_->apply(coarse));
}

Vector TwoGridPrecond::apply_inverse(const Vector& r) const {
  if (!coarse_inverse_) throw InvalidArgument("two-grid preconditioner has no coarse inverse");
  const Vector coarse = project(r);
  Vector coarse_solution;
  try {
    coarse_solution = coarse_inverse_->solve(coarse);
  } catch (const NumericalError& e) {
    throw NumericalError("coarse solve below level " + std::to_string(fine_level()) + " failed: " + e.what());
  }
  return (r - embed(coarse)) / beta_ + embed(coarse_solution);
}

TwoGridPrecond build_two_grid(const MeshHierarchy& hierarchy, int j_fine,
                              std::shared_ptr<const HessianOp> coarse_hessian) {
  auto inverse = std::make_shared<const DenseHessianInverse>(*coarse_hessian);
  const double beta = coarse_hessian->beta();
  return TwoGridPrecond(hierarchy.level_ptr(j_fine), hierarchy.level_ptr(j_fine - 1),
                        hierarchy.prolongation_ptr(j_fine), std::move(coarse_hessian), std::move(inverse), beta);
}

WCycleInverse::WCycleInverse(std::shared_ptr<const HessianOp> hessian,
                             std::shared_ptr<const TwoGridPrecond> preconditioner)
    : hessian_(std::move(hessian)), preconditioner_(std::move(preconditioner)) {}

Vector WCycleInverse::solve(const Vector& w) const {
  const Vector x = preconditioner_->apply_inverse(w);
  return 2.0 * x - preconditioner_->apply_inverse(hessian_->apply(x));
}

std::shared_ptr<const HessianOp> MultigridPrecond::hessian_ptr(int j) const {
  if (j < j_base_ || j > j_fine_) throw InvalidArgument("multigrid has no Hessian on level " + std::to_string(j));
  return hessians_[static_cast<std::size_t>(j - j_base_)];
}

const TwoGridPrecond& MultigridPrecond::two_grid(int j) const {
  if (j <= j_base_ || j > j_fine_) throw InvalidArgument("multigrid has no two-grid operator on level " + std::to_string(j));
  return *levels_[static_cast<std::size_t>(j - j_base_ - 1)];
}

Vector MultigridPrecond::apply_inverse(const Vector& r) const { return levels_.back()->apply_inverse(r); }

MultigridPrecond build_mg(const MeshHierarchy& hierarchy, std::vector<std::shared_ptr<const HessianOp>> hessians,
                          const MultigridOptions& options) {
  const int j_base = options.j_base;
  const int j_fine = j_base + static_cast<int>(hessians.size()) - 1;
  if (j_base < hierarchy.j_min()) {
    throw InvalidArgument("j_base " + std::to_string(j_base) + " is below the coarsest level " +
                          std::to_string(hierarchy.j_min()));
  }
  if (j_fine <= j_base || j_fine > hierarchy.j_max()) {
    throw InvalidArgument("multigrid needs Hessians for at least two levels inside the hierarchy");
  }
  const double beta = hessians.front()->beta();
  for (int j = j_base; j <= j_fine; ++j) {
    const auto& h = hessians[static_cast<std::size_t>(j - j_base)];
    if (h->level().mesh().level() != j || h->level().mesh().dim() != hierarchy.dim()) {
      throw InvalidArgument("Hessian list does not match levels " + std::to_string(j_base) + ".." +
                            std::to_string(j_fine));
    }
    if (h->beta() != beta) throw InvalidArgument("all multigrid Hessians must share beta");
  }

  MultigridPrecond mg;
  mg.j_base_ = j_base;
  mg.j_fine_ = j_fine;
  mg.hessians_ = std::move(hessians);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::shared_ptr<const CoarseInverse> coarse_inverse =
      std::make_shared<const DenseHessianInverse>(*mg.hessians_.front(), options.dense_cap);
  for (int j = j_base + 1; j <= j_fine; ++j) {
    auto tg = std::make_shared<const TwoGridPrecond>(hierarchy.level_ptr(j), hierarchy.level_ptr(j - 1),
                                                     hierarchy.prolongation_ptr(j), mg.hessian_ptr(j - 1),
                                                     coarse_inverse, beta);
    mg.levels_.push_back(tg);
    if (j == j_fine) break;

    // The W-step on this level is SPD only if sigma(G^{-1} H) lies in (0, 2).
    const HessianOp& h = mg.hessian(j);
    const SparseMatrix& mass = h.level().operators().mass;
    ProbeRecord probe{j, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int k = 0; k < options.probe_count; ++k) {
      Vector r(h.size());
      for (Index i = 0; i < r.size(); ++i) r(i) = normal(rng);
      const Vector x = tg->apply_inverse(r);
      const double gxx = r.dot(mass * x);  // <G x, x> with G x = r
      const double hxx = h.apply_gram(x).dot(x);
      const double q = hxx / gxx;
      probe.min_quotient = std::min(probe.min_quotient, q);
      probe.max_quotient = std::max(probe.max_quotient, q);
      if (!(gxx > 0.0) || !(q > 0.0 && q < 2.0)) {
        throw NumericalError("spectral safety check failed on level " + std::to_string(j) +
                             ": Rayleigh quotient of G^{-1}H = " + std::to_string(q) +
                             " outside (0,2); choose a finer base level");
      }
    }
    if (options.probe_count > 0) mg.probes_.push_back(probe);
    coarse_inverse = std::make_shared<const WCycleInverse>(mg.hessian_ptr(j), tg);
  }
  return mg;
}

MultigridPrecond build_mg(const MeshHierarchy& hierarchy, double s, double beta, const MultigridOptions& options) {
  if (options.j_base >= hierarchy.j_max()) {
    throw InvalidArgument("j_base must be below the finest level " + std::to_string(hierarchy.j_max()));
  }
  if (options.j_base < hierarchy.j_min()) {
    throw InvalidArgument("j_base " + std::to_string(options.j_base) + " is below the coarsest level");
  }
  std::vector<std::shared_ptr<const HessianOp>> hessians;
  for (int j = options.j_base; j <= hierarchy.j_max(); ++j) {
    auto level = hierarchy.level_ptr(j);
    auto k = std::make_shared<const FractionalSolveOp>(level, s, options.fractional);
    hessians.push_back(std::make_shared<const HessianOp>(level, std::move(k), beta));
  }
  return build_mg(hierarchy, std::move(hessians), options);
}

SolveResult mgcg_solve(const HessianOp& hessian, const MultigridPrecond& preconditioner, const Vector& rhs,
                       const SolveOptions& options) {
  if (hessian.size() != preconditioner.hessian(preconditioner.j_fine()).size()) {
    throw InvalidArgument("preconditioner does not match the Hessian level");
  }
  return pcg_solve(hessian, [&preconditioner](const Vector& r) { return preconditioner.apply_inverse(r); }, rhs,
                   options);
}

}  // namespace fracmg
