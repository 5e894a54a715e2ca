// Shifted solves (e^y M0 + A0) u = b on the uniform 2D P1 grid without
// stored factorizations.
//
// In the orthonormal 2D sine basis the stiffness matrix is diagonal, and the
// mass matrix splits into a diagonal part P plus a term (h^2/24) Dx Dy built
// from the skew difference operators. Its symbol is -h^2/6 sin(a) sin(b), so
// |M0 - P| <= h^2/6 while P >= h^2/3. Preconditioning CG with the diagonal
// e^y P + A0 therefore gives a spectrum inside [1/2, 3/2] for every shift.

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "fracmg/error.hpp"
#include "fracmg/fracop.hpp"

namespace fracmg {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class SpectralShiftedSolves final : public ShiftedSolves {
 public:
  SpectralShiftedSolves(const Level& level, const QuadratureRule& rule, double tol, int max_iter)
      : mass0_(level.operators().mass0),
        stiffness0_(level.operators().stiffness0),
        weights_(rule.weights),
        tol_(tol),
        max_iter_(max_iter),
        level_index_(level.mesh().level()) {
    const MeshLevel& mesh = level.mesh();
    if (mesh.dim() != 2) throw InvalidArgument("spectral shifted solves are implemented for 2D grids only");
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("inner tolerance must lie in (0,1)");
    n_ = static_cast<int>(mesh.intervals() - 1);
    shifts_.reserve(rule.size());
    for (double y : rule.nodes) shifts_.push_back(std::exp(y));

    const Index count = static_cast<Index>(n_) * n_;
    mass_symbol_.resize(count);
    stiffness_symbol_.resize(count);
    const double h = mesh.h();
    for (int q = 0; q < n_; ++q) {
      const double cq = std::cos((q + 1) * std::numbers::pi / (n_ + 1));
      for (int p = 0; p < n_; ++p) {
        const double cp = std::cos((p + 1) * std::numbers::pi / (n_ + 1));
        const Index idx = static_cast<Index>(q) * n_ + p;
        stiffness_symbol_(idx) = (2.0 - 2.0 * cp) + (2.0 - 2.0 * cq);
        mass_symbol_(idx) = h * h / 12.0 * (6.0 + 2.0 * cp + 2.0 * cq + 2.0 * cp * cq);
      }
    }
    // Two unnormalized RODFT00 passes scale by (2(n+1))^2.
    const double norm = 2.0 * (n_ + 1);
    transform_scale_ = 1.0 / (norm * norm);

    Vector scratch_in = Vector::Zero(count);
    Vector scratch_out = Vector::Zero(count);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_r2r_2d(n_, n_, scratch_in.data(), scratch_out.data(), FFTW_RODFT00, FFTW_RODFT00,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw NumericalError("FFTW could not plan the 2D sine transform");
  }

  ~SpectralShiftedSolves() override {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  SpectralShiftedSolves(const SpectralShiftedSolves&) = delete;
  SpectralShiftedSolves& operator=(const SpectralShiftedSolves&) = delete;

  Vector weighted_sum(const Vector& rhs) const override {
    Vector out = Vector::Zero(rhs.size());
    if (rhs.squaredNorm() == 0.0) return out;
    for (std::size_t l = 0; l < shifts_.size(); ++l) out.noalias() += weights_[l] * solve(shifts_[l], rhs);
    return out;
  }

 private:
  Vector precondition(double shift, const Vector& r) const {
    Vector t(r.size());
    fftw_execute_r2r(plan_, const_cast<double*>(r.data()), t.data());
    t.array() /= shift * mass_symbol_.array() + stiffness_symbol_.array();
    Vector out(r.size());
    fftw_execute_r2r(plan_, t.data(), out.data());
    out *= transform_scale_;
    return out;
  }

  Vector solve(double shift, const Vector& b) const {
    Vector x = Vector::Zero(b.size());
    Vector r = b;
    Vector z = precondition(shift, r);
    Vector p = z;
    double rz = r.dot(z);
    const double target = tol_ * b.norm();
    for (int it = 0; it < max_iter_; ++it) {
      const Vector q = shift * (mass0_ * p) + stiffness0_ * p;
      const double alpha = rz / p.dot(q);
      x.noalias() += alpha * p;
      r.noalias() -= alpha * q;
      if (r.norm() <= target) return x;
      z = precondition(shift, r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    throw NumericalError("shifted CG did not converge on level " + std::to_string(level_index_) +
                         " for shift " + std::to_string(shift));
  }

  const SparseMatrix& mass0_;
  const SparseMatrix& stiffness0_;
  std::vector<double> weights_;
  std::vector<double> shifts_;
  double tol_;
  int max_iter_;
  int level_index_;
  int n_ = 0;
  Vector mass_symbol_;
  Vector stiffness_symbol_;
  double transform_scale_ = 1.0;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::unique_ptr<ShiftedSolves> make_spectral_shifted_solves(const Level& level, const QuadratureRule& rule,
                                                            double tol, int max_iter) {
  return std::make_unique<SpectralShiftedSolves>(level, rule, tol, max_iter);
}

}  // namespace fracmg
