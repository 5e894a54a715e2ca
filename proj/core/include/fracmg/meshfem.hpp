#pragma once

#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "fracmg/types.hpp"

namespace fracmg {

/// Uniform dyadic grid on (0,1)^dim with mesh size h = 2^-j.
///
/// Nodes are numbered lexicographically with the x index running fastest.
/// Interior nodes keep the same relative order in the interior numbering.
/// In 2D each grid square is split into two right triangles along the
/// (0,0)-(1,1) diagonal.
class MeshLevel {
 public:
  MeshLevel(int dim, int j);

  int dim() const { return dim_; }
  int level() const { return j_; }
  Index intervals() const { return Index{1} << j_; }
  double h() const { return 1.0 / static_cast<double>(intervals()); }

  Index nodes_per_axis() const { return intervals() + 1; }
  Index n_nodes() const { return n_nodes_; }
  Index n_interior() const { return static_cast<Index>(interior_.size()); }

  Index interior_to_global(Index i) const { return interior_[static_cast<std::size_t>(i)]; }
  /// -1 for boundary nodes.
  Index global_to_interior(Index g) const { return global_to_interior_[static_cast<std::size_t>(g)]; }
  bool is_boundary(Index g) const { return global_to_interior(g) < 0; }

  /// Grid index of node g along an axis (0 = x, 1 = y).
  Index grid_index(Index g, int axis) const;
  double coordinate(Index g, int axis) const { return static_cast<double>(grid_index(g, axis)) * h(); }

  /// Zero-extends interior coefficients to all nodes.
  Vector embed_interior(const Vector& interior) const;
  Vector restrict_to_interior(const Vector& full) const;

 private:
  int dim_;
  int j_;
  Index n_nodes_;
  std::vector<Index> interior_;
  std::vector<Index> global_to_interior_;
};

/// Assembled P1 operators on one level. All matrices use consistent mass.
struct FEOperators {
  SparseMatrix mass;        ///< M, all nodes
  SparseMatrix mass0;       ///< M0, interior nodes
  SparseMatrix stiffness0;  ///< A0, interior nodes (Dirichlet)
  SparseMatrix cross;       ///< B, interior rows x all columns
};

FEOperators assemble_operators(const MeshLevel& level);

/// Natural embedding of the coarse P1 space into the fine one.
struct Prolongation {
  SparseMatrix full;      ///< n_fine x n_coarse over all nodes
  SparseMatrix interior;  ///< interior fine x interior coarse
};

Prolongation build_prolongation(const MeshLevel& coarse, const MeshLevel& fine);

/// One level of a hierarchy: grid, operators and a prefactored mass matrix.
class Level {
 public:
  explicit Level(MeshLevel mesh);
  Level(const Level&) = delete;
  Level& operator=(const Level&) = delete;

  const MeshLevel& mesh() const { return mesh_; }
  const FEOperators& operators() const { return ops_; }

  /// M^{-1} x on all nodes.
  Vector solve_mass(const Vector& x) const;
  DenseMatrix solve_mass(const DenseMatrix& x) const;

 private:
  MeshLevel mesh_;
  FEOperators ops_;
  Eigen::SimplicialLDLT<SparseMatrix> mass_factor_;
};

struct HierarchyOptions {
  /// Finest-level node count above which construction is refused.
  Index max_nodes = Index{1} << 21;
};

/// Nested uniform levels j_min..j_max with prolongations between neighbours.
class MeshHierarchy {
 public:
  int dim() const { return dim_; }
  int j_min() const { return j_min_; }
  int j_max() const { return j_max_; }
  bool has_level(int j) const { return j >= j_min_ && j <= j_max_; }

  const Level& level(int j) const { return *level_ptr(j); }
  std::shared_ptr<const Level> level_ptr(int j) const;

  /// Embedding from level j-1 into level j.
  const Prolongation& prolongation(int j_fine) const { return *prolongation_ptr(j_fine); }
  std::shared_ptr<const Prolongation> prolongation_ptr(int j_fine) const;

  friend MeshHierarchy build_hierarchy(int dim, int j_min, int j_max, const HierarchyOptions& options);

 private:
  int dim_ = 1;
  int j_min_ = 0;
  int j_max_ = -1;
  std::vector<std::shared_ptr<const Level>> levels_;
  std::vector<std::shared_ptr<const Prolongation>> prolongations_;  // index 0 unused
};

MeshHierarchy build_hierarchy(int dim, int j_min, int j_max, const HierarchyOptions& options = {});

/// L2-orthogonal projection onto the coarse space: M_c^{-1} P^T M z.
Vector l2_project_coarse(const Level& fine, const Level& coarse, const Prolongation& p, const Vector& z);
Vector l2_project_coarse(const MeshHierarchy& hierarchy, int j_fine, const Vector& z);

/// Dense matrix of the coarse projection (n_coarse x n_fine).
DenseMatrix l2_projection_matrix(const Level& fine, const Level& coarse, const Prolongation& p);

}  // namespace fracmg
