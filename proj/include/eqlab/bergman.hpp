#pragma once
// Weighted Bergman spaces H^0_(2)(P^1, O(p)) ≅ C_p[ζ] with
//   ‖s‖_p² = ∫ |s|² e^{-2pψ} ω_FS,
// their Bergman kernel functions P_p and Fubini–Study potentials φ_p.
//
// All matrices are kept in a shifted gauge: with c = min φ over the grid,
// stored values are G̃ = e^{2pc}·G and coefficients C̃ = e^{-pc}·C. This keeps
// e^{-2p(ψ-c)} ≤ 1 at every node; P_p itself does not depend on the gauge.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqlab/envelope.hpp"
#include "eqlab/geometry.hpp"
#include "eqlab/measure.hpp"
#include "eqlab/weight.hpp"

namespace eqlab {

inline constexpr double kMaxGramCond = 1e14;
inline constexpr int kDefaultDegreeCap = 200;

/// Smallest angular count accepted for degree p.
inline int min_angular_for_degree(int p) { return 4 * p + 8; }

struct GramMatrix {
  int degree = 0;
  GridShape shape;
  std::string weight_hash;
  double shift = 0.0;       // c
  Eigen::MatrixXcd values;  // e^{2pc}·G, Hermitian

  /// G itself (may underflow for large p·c).
  Eigen::MatrixXcd unshifted() const;
};

struct BergmanBasis {
  int degree = 0;
  int dimension = 1;  // d_p = p + 1
  GridShape shape;
  std::string weight_hash;
  double shift = 0.0;
  /// Row j holds the monomial coefficients of S_j (same gauge as GramMatrix::values).
  Eigen::MatrixXcd coeffs;
  /// Condition number of the Gram matrix after diagonal equilibration.
  double gram_cond = 1.0;
};

struct KernelField {
  int degree = 0;
  GridShape shape;
  std::string weight_hash;
  std::vector<double> values;        // P_p
  std::vector<double> log_values;    // log P_p
  std::vector<double> log_half_p;    // (1/2p) log P_p; empty for p = 0
  std::vector<double> fs_potential;  // φ_p = φ + (1/2p) log P_p; empty for p = 0
  double fs_potential_at_zero = 0.0;
  double fs_potential_at_infinity = 0.0;
};

/// G_jk = ∫ ζ^j ζ̄^k e^{-2pψ} ω_FS. Requires N_θ ≥ 4p + 8.
GramMatrix gram_matrix(int p, const WeightField& w, const QuadratureGrid& grid, int threads = 1);

/// Equilibrated Cholesky factor: coeffs lower-triangular, positive diagonal,
/// coeffs·G·coeffsᴴ = I. Throws ConditioningError above kMaxGramCond.
BergmanBasis orthonormal_basis(const GramMatrix& G);
BergmanBasis orthonormal_basis(const Eigen::MatrixXcd& G);

/// P_p at every node, evaluated ring by ring with FFTs and a scaled sum of squares.
KernelField bergman_kernel(const BergmanBasis& basis, const WeightField& w, const QuadratureGrid& grid,
                           int threads = 1);

/// ∫ |(1/2p) log P_p − Ψ_h| ω_FS. Throws Usage on a grid or weight mismatch.
double kernel_vs_envelope(const KernelField& kf, const EnvelopeResult& env, const QuadratureGrid& grid);

struct RateFit {
  double c_hat = 0.0;          // max error·p / log p
  double max_violation = 0.0;  // always 0: c_hat is the envelope constant
  double c_min = 0.0;          // min error·p / log p
};

/// Envelope constant of errors against (log p)/p. Needs ≥ 4 points with p ≥ 5.
RateFit rate_fit(const std::vector<std::pair<int, double>>& errors);

/// Cell masses of γ_p = ω_FS + dd^c φ_p. Throws SolverQuality below −1e−6.
EmpiricalMeasure fs_current_measure(const KernelField& kf, const QuadratureGrid& grid);

/// Unit-norm section value |S(x)|²_{h^p} at every node for S = Σ_j α_j S_j (α normalised).
std::vector<double> section_norm_squared(const BergmanBasis& basis, const Eigen::VectorXcd& alpha,
                                         const WeightField& w, const QuadratureGrid& grid);

/// Basis cache in CSV: header row with metadata, then one row per (j, m) entry.
void write_basis_csv(const BergmanBasis& basis, const std::string& path);
std::optional<BergmanBasis> read_basis_csv(const std::string& path);

}  // namespace eqlab
