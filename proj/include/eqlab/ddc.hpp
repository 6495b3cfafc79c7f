#pragma once
// Discrete dd^c on the quadrature grid.
//
// The grid rings, ordered by t = log|ζ|, form a cylinder R × S^1 on which the
// Laplacian is conformally flat. Each node owns a finite-volume cell in
// (t, θ); the two poles own small disks and couple to their innermost ring.
// For a global weight u (continuous on P^1) the quantity
//     (L u)_n + g_n,    g_n = L(ρ_chart(n)) at n,
// is ∫_cell Δ(u + ρ_chart) dλ, i.e. 2π times the mass of ω_FS + dd^c u on the
// cell. The stencil of node n always uses the frame of n's own chart, so the
// total mass telescopes to exactly 1.

#include <Eigen/Sparse>

#include <array>
#include <span>
#include <vector>

#include "eqlab/geometry.hpp"

namespace eqlab {

class DiscreteDdc {
 public:
  explicit DiscreteDdc(const QuadratureGrid& grid);

  /// Grid nodes followed by the poles 0 and ∞.
  std::size_t size() const { return n_nodes_ + 2; }
  std::size_t pole_zero() const { return n_nodes_; }
  std::size_t pole_infinity() const { return n_nodes_ + 1; }

  /// Symmetric flux matrix L (negative diagonal).
  const Eigen::SparseMatrix<double>& matrix() const { return L_; }
  /// Curvature source g.
  const Eigen::VectorXd& source() const { return g_; }
  /// |L_nn|, used for Jacobi-scaled residuals.
  const Eigen::VectorXd& diagonal() const { return diag_; }

  /// Masses of ω_FS + dd^c u on every cell (size() entries).
  Eigen::VectorXd masses(const Eigen::VectorXd& u_with_poles) const;

 private:
  std::size_t n_nodes_;
  Eigen::SparseMatrix<double> L_;
  Eigen::VectorXd g_;
  Eigen::VectorXd diag_;
};

}  // namespace eqlab
