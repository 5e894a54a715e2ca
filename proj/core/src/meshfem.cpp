#include "fracmg/meshfem.hpp"

#include <array>
#include <string>

#include "fracmg/error.hpp"

namespace fracmg {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Selection matrix picking interior rows out of a full-node vector.
SparseMatrix interior_selector(const MeshLevel& level) {
  SparseMatrix sel(level.n_interior(), level.n_nodes());
  Triplets t;
  t.reserve(static_cast<std::size_t>(level.n_interior()));
  for (Index i = 0; i < level.n_interior(); ++i) t.emplace_back(i, level.interior_to_global(i), 1.0);
  sel.setFromTriplets(t.begin(), t.end());
  return sel;
}

void assemble_1d(const MeshLevel& level, Triplets& mass, Triplets& stiff) {
  const double h = level.h();
  const std::array<std::array<double, 2>, 2> me{{{2.0 * h / 6.0, h / 6.0}, {h / 6.0, 2.0 * h / 6.0}}};
  const std::array<std::array<double, 2>, 2> ae{{{1.0 / h, -1.0 / h}, {-1.0 / h, 1.0 / h}}};
  for (Index e = 0; e < level.intervals(); ++e) {
    const std::array<Index, 2> ids{e, e + 1};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        mass.emplace_back(ids[a], ids[b], me[a][b]);
        stiff.emplace_back(ids[a], ids[b], ae[a][b]);
      }
    }
  }
}

void assemble_2d(const MeshLevel& level, Triplets& mass, Triplets& stiff) {
  const Index n = level.intervals();
  const Index stride = level.nodes_per_axis();
  const double h = level.h();
  const double area = 0.5 * h * h;
  auto node = [stride](Index i, Index k) { return k * stride + i; };

  // Both triangle orientations share the same local matrices up to vertex
  // order, but computing the gradients keeps this honest.
  auto add_triangle = [&](const std::array<std::array<Index, 2>, 3>& v) {
    Eigen::Matrix3d coords;
    for (int a = 0; a < 3; ++a) {
      coords(a, 0) = 1.0;
      coords(a, 1) = static_cast<double>(v[a][0]) * h;
      coords(a, 2) = static_cast<double>(v[a][1]) * h;
    }
    const Eigen::Matrix3d inv = coords.inverse();
    const Eigen::Matrix<double, 2, 3> grads = inv.bottomRows<2>();
    const Eigen::Matrix3d ke = area * grads.transpose() * grads;
    std::array<Index, 3> ids{};
    for (int a = 0; a < 3; ++a) ids[a] = node(v[a][0], v[a][1]);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        mass.emplace_back(ids[a], ids[b], area / 12.0 * (a == b ? 2.0 : 1.0));
        if (ke(a, b) != 0.0) stiff.emplace_back(ids[a], ids[b], ke(a, b));
      }
    }
  };

  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      add_triangle({{{i, k}, {i + 1, k}, {i + 1, k + 1}}});
      add_triangle({{{i, k}, {i + 1, k + 1}, {i, k + 1}}});
    }
  }
}

}  // namespace

MeshLevel::MeshLevel(int dim, int j) : dim_(dim), j_(j) {
  if (dim != 1 && dim != 2) throw InvalidArgument("dimension must be 1 or 2, got " + std::to_string(dim));
  if (j < 1 || j > 30) throw InvalidArgument("level index out of range: " + std::to_string(j));
  const Index per_axis = nodes_per_axis();
  n_nodes_ = dim == 1 ? per_axis : per_axis * per_axis;
  global_to_interior_.assign(static_cast<std::size_t>(n_nodes_), -1);
  const Index n_int_axis = per_axis - 2;
  interior_.reserve(static_cast<std::size_t>(dim == 1 ? n_int_axis : n_int_axis * n_int_axis));
  for (Index g = 0; g < n_nodes_; ++g) {
    bool interior = true;
    for (int axis = 0; axis < dim_; ++axis) {
      const Index gi = grid_index(g, axis);
      interior = interior && gi > 0 && gi < per_axis - 1;
    }
    if (interior) {
      global_to_interior_[static_cast<std::size_t>(g)] = static_cast<Index>(interior_.size());
      interior_.push_back(g);
    }
  }
}

Index MeshLevel::grid_index(Index g, int axis) const {
  const Index per_axis = nodes_per_axis();
  return axis == 0 ? g % per_axis : g / per_axis;
}

Vector MeshLevel::embed_interior(const Vector& interior) const {
  Vector full = Vector::Zero(n_nodes_);
  for (Index i = 0; i < n_interior(); ++i) full(interior_to_global(i)) = interior(i);
  return full;
}

Vector MeshLevel::restrict_to_interior(const Vector& full) const {
  Vector out(n_interior());
  for (Index i = 0; i < n_interior(); ++i) out(i) = full(interior_to_global(i));
  return out;
}

FEOperators assemble_operators(const MeshLevel& level) {
  Triplets mass;
  Triplets stiff;
  if (level.dim() == 1) {
    assemble_1d(level, mass, stiff);
  } else {
    assemble_2d(level, mass, stiff);
  }
  FEOperators ops;
  ops.mass.resize(level.n_nodes(), level.n_nodes());
  ops.mass.setFromTriplets(mass.begin(), mass.end());
  SparseMatrix stiffness(level.n_nodes(), level.n_nodes());
  stiffness.setFromTriplets(stiff.begin(), stiff.end());

  const SparseMatrix sel = interior_selector(level);
  const SparseMatrix sel_t = sel.transpose();
  ops.cross = sel * ops.mass;
  ops.mass0 = ops.cross * sel_t;
  ops.stiffness0 = sel * stiffness * sel_t;
  ops.stiffness0.prune(0.0);
  for (SparseMatrix* m : {&ops.mass, &ops.mass0, &ops.stiffness0, &ops.cross}) m->makeCompressed();
  return ops;
}

Prolongation build_prolongation(const MeshLevel& coarse, const MeshLevel& fine) {
  if (coarse.dim() != fine.dim() || coarse.level() + 1 != fine.level()) {
    throw InvalidArgument("prolongation requires consecutive levels of equal dimension");
  }
  const Index cstride = coarse.nodes_per_axis();
  Triplets t;
  t.reserve(static_cast<std::size_t>(fine.n_nodes()) * 2);
  for (Index g = 0; g < fine.n_nodes(); ++g) {
    const Index fi = fine.grid_index(g, 0);
    if (fine.dim() == 1) {
      if (fi % 2 == 0) {
        t.emplace_back(g, fi / 2, 1.0);
      } else {
        t.emplace_back(g, fi / 2, 0.5);
        t.emplace_back(g, fi / 2 + 1, 0.5);
      }
      continue;
    }
    const Index fk = fine.grid_index(g, 1);
    auto cnode = [cstride](Index i, Index k) { return k * cstride + i; };
    const bool odd_x = fi % 2 != 0;
    const bool odd_y = fk % 2 != 0;
    if (!odd_x && !odd_y) {
      t.emplace_back(g, cnode(fi / 2, fk / 2), 1.0);
    } else if (odd_x && !odd_y) {
      t.emplace_back(g, cnode(fi / 2, fk / 2), 0.5);
      t.emplace_back(g, cnode(fi / 2 + 1, fk / 2), 0.5);
    } else if (!odd_x && odd_y) {
      t.emplace_back(g, cnode(fi / 2, fk / 2), 0.5);
      t.emplace_back(g, cnode(fi / 2, fk / 2 + 1), 0.5);
    } else {
      // midpoint of the coarse diagonal edge
      t.emplace_back(g, cnode(fi / 2, fk / 2), 0.5);
      t.emplace_back(g, cnode(fi / 2 + 1, fk / 2 + 1), 0.5);
    }
  }
  Prolongation p;
  p.full.resize(fine.n_nodes(), coarse.n_nodes());
  p.full.setFromTriplets(t.begin(), t.end());
  p.full.makeCompressed();
  p.interior = interior_selector(fine) * p.full * SparseMatrix(interior_selector(coarse).transpose());
  p.interior.makeCompressed();
  return p;
}

Level::Level(MeshLevel mesh) : mesh_(std::move(mesh)), ops_(assemble_operators(mesh_)) {
  mass_factor_.compute(ops_.mass);
  if (mass_factor_.info() != Eigen::Success) {
    throw NumericalError("mass matrix factorization failed on level " + std::to_string(mesh_.level()));
  }
}

Vector Level::solve_mass(const Vector& x) const { return mass_factor_.solve(x); }

DenseMatrix Level::solve_mass(const DenseMatrix& x) const { return mass_factor_.solve(x); }

std::shared_ptr<const Level> MeshHierarchy::level_ptr(int j) const {
  if (!has_level(j)) throw InvalidArgument("hierarchy has no level " + std::to_string(j));
  return levels_[static_cast<std::size_t>(j - j_min_)];
}

std::shared_ptr<const Prolongation> MeshHierarchy::prolongation_ptr(int j_fine) const {
  if (!has_level(j_fine) || j_fine == j_min_) {
    throw InvalidArgument("hierarchy has no prolongation into level " + std::to_string(j_fine));
  }
  return prolongations_[static_cast<std::size_t>(j_fine - j_min_)];
}

MeshHierarchy build_hierarchy(int dim, int j_min, int j_max, const HierarchyOptions& options) {
  if (dim != 1 && dim != 2) throw InvalidArgument("dimension must be 1 or 2");
  if (j_min < 2) throw InvalidArgument("coarsest level must satisfy j_min >= 2, got " + std::to_string(j_min));
  if (j_max < j_min) throw InvalidArgument("j_max must be >= j_min");
  if (j_max > 30) throw InvalidArgument("j_max too large");
  const Index per_axis = (Index{1} << j_max) + 1;
  const Index finest_nodes = dim == 1 ? per_axis : per_axis * per_axis;
  if (finest_nodes > options.max_nodes) {
    throw CapacityError("finest level has " + std::to_string(finest_nodes) + " nodes, above the cap of " +
                        std::to_string(options.max_nodes));
  }

  MeshHierarchy h;
  h.dim_ = dim;
  h.j_min_ = j_min;
  h.j_max_ = j_max;
  for (int j = j_min; j <= j_max; ++j) {
    h.levels_.push_back(std::make_shared<const Level>(MeshLevel(dim, j)));
    if (j == j_min) {
      h.prolongations_.push_back(nullptr);
    } else {
      h.prolongations_.push_back(std::make_shared<const Prolongation>(
          build_prolongation(h.levels_[h.levels_.size() - 2]->mesh(), h.levels_.back()->mesh())));
    }
  }
  return h;
}

Vector l2_project_coarse(const Level& fine, const Level& coarse, const Prolongation& p, const Vector& z) {
  const Vector rhs = p.full.transpose() * (fine.operators().mass * z);
  return coarse.solve_mass(rhs);
}

Vector l2_project_coarse(const MeshHierarchy& hierarchy, int j_fine, const Vector& z) {
  return l2_project_coarse(hierarchy.level(j_fine), hierarchy.level(j_fine - 1), hierarchy.prolongation(j_fine), z);
}

DenseMatrix l2_projection_matrix(const Level& fine, const Level& coarse, const Prolongation& p) {
  const DenseMatrix rhs = DenseMatrix(p.full.transpose() * fine.operators().mass);
  return coarse.solve_mass(rhs);
}

}  // namespace fracmg
