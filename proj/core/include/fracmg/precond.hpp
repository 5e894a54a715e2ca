#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Cholesky>

#include "fracmg/control.hpp"
#include "fracmg/fracop.hpp"
#include "fracmg/meshfem.hpp"

namespace fracmg {

/// Approximate or exact H^{-1} on a coarse level, acting on L2 representations.
class CoarseInverse {
 public:
  virtual ~CoarseInverse() = default;
  virtual Vector solve(const Vector& w) const = 0;
};

/// Exact inverse from a dense Cholesky factorization of the materialized Gram matrix.
class DenseHessianInverse final : public CoarseInverse {
 public:
  explicit DenseHessianInverse(const HessianOp& hessian, Index dense_cap = 4225);
  Vector solve(const Vector& w) const override;

 private:
  std::shared_ptr<const Level> level_;
  Eigen::LLT<DenseMatrix> factor_;
};

/// Two-grid preconditioner
///
///   G = beta (I - E pi) + E H_c pi,
///
/// where E embeds the coarse space and pi is the coarse L2 projection. The
/// two terms act on L2-orthogonal subspaces, so
///
///   G^{-1} = beta^{-1} (I - E pi) + E H_c^{-1} pi.
class TwoGridPrecond {
 public:
  TwoGridPrecond(std::shared_ptr<const Level> fine, std::shared_ptr<const Level> coarse,
                 std::shared_ptr<const Prolongation> prolongation, std::shared_ptr<const HessianOp> coarse_hessian,
                 std::shared_ptr<const CoarseInverse> coarse_inverse, double beta);

  /// pi z
  Vector project(const Vector& z) const;
  /// E w
  Vector embed(const Vector& w) const;

  Vector apply(const Vector& z) const;
  Vector apply_inverse(const Vector& r) const;

  double beta() const { return beta_; }
  int fine_level() const { return fine_->mesh().level(); }
  const Level& fine() const { return *fine_; }
  const Level& coarse() const { return *coarse_; }

 private:
  std::shared_ptr<const Level> fine_;
  std::shared_ptr<const Level> coarse_;
  std::shared_ptr<const Prolongation> prolongation_;
  std::shared_ptr<const HessianOp> coarse_hessian_;
  std::shared_ptr<const CoarseInverse> coarse_inverse_;
  double beta_;
};

/// Two-grid preconditioner on level j_fine with a dense direct coarse solve.
TwoGridPrecond build_two_grid(const MeshHierarchy& hierarchy, int j_fine,
                              std::shared_ptr<const HessianOp> coarse_hessian);

/// W-step H~^{-1} = 2 G^{-1} - G^{-1} H G^{-1} on one level: two applications
/// of that level's preconditioner and one Hessian product. SPD whenever the
/// spectrum of G^{-1} H lies in (0, 2).
class WCycleInverse final : public CoarseInverse {
 public:
  WCycleInverse(std::shared_ptr<const HessianOp> hessian, std::shared_ptr<const TwoGridPrecond> preconditioner);
  Vector solve(const Vector& w) const override;

 private:
  std::shared_ptr<const HessianOp> hessian_;
  std::shared_ptr<const TwoGridPrecond> preconditioner_;
};

struct MultigridOptions {
  int j_base = 5;
  /// Random Rayleigh quotients of G^{-1} H checked per W-step level at build time.
  int probe_count = 10;
  std::uint64_t seed = 20240521;
  Index dense_cap = 4225;
  FractionalSolveOptions fractional{};
};

/// Rayleigh quotients <H x, x> / <G x, x> observed by the build-time probe.
struct ProbeRecord {
  int level = 0;
  double min_quotient = 0.0;
  double max_quotient = 0.0;
};

/// Recursive multigrid preconditioner: dense exact solve on j_base, two-grid
/// operators above it, W-step coarse inverses on every intermediate level.
class MultigridPrecond {
 public:
  int j_base() const { return j_base_; }
  int j_fine() const { return j_fine_; }

  /// Preconditioner on the finest level.
  Vector apply_inverse(const Vector& r) const;

  const HessianOp& hessian(int j) const { return *hessian_ptr(j); }
  std::shared_ptr<const HessianOp> hessian_ptr(int j) const;
  const TwoGridPrecond& two_grid(int j) const;
  const std::vector<ProbeRecord>& probes() const { return probes_; }

  friend MultigridPrecond build_mg(const MeshHierarchy& hierarchy,
                                   std::vector<std::shared_ptr<const HessianOp>> hessians,
                                   const MultigridOptions& options);

 private:
  int j_base_ = 0;
  int j_fine_ = 0;
  std::vector<std::shared_ptr<const HessianOp>> hessians_;      // j_base..j_fine
  std::vector<std::shared_ptr<const TwoGridPrecond>> levels_;  // j_base+1..j_fine
  std::vector<ProbeRecord> probes_;
};

/// Builds Hessians for levels j_base..j_max of the hierarchy and the multigrid on top.
MultigridPrecond build_mg(const MeshHierarchy& hierarchy, double s, double beta, const MultigridOptions& options = {});

/// Same, with caller-supplied Hessians for levels j_base..j_base + hessians.size() - 1.
MultigridPrecond build_mg(const MeshHierarchy& hierarchy, std::vector<std::shared_ptr<const HessianOp>> hessians,
                          const MultigridOptions& options);

/// Preconditioned CG with the multigrid preconditioner on the finest level.
SolveResult mgcg_solve(const HessianOp& hessian, const MultigridPrecond& preconditioner, const Vector& rhs,
                       const SolveOptions& options = {});

}  // namespace fracmg
