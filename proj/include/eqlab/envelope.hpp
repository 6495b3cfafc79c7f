#pragma once
// Equilibrium weights: the ω_FS-psh envelope V_φ = sup{u psh : u ≤ φ}, its
// gap Ψ_h = φ_eq − φ and the equilibrium measure ω_FS + dd^c φ_eq.

#include <cstdint>
#include <string>
#include <vector>

#include "eqlab/geometry.hpp"
#include "eqlab/measure.hpp"
#include "eqlab/weight.hpp"

namespace eqlab {

inline constexpr double kDefaultEnvelopeTol = 1e-8;
inline constexpr int kDefaultSlopeSamples = 1024;

struct EnvelopeResult {
  GridShape shape;
  std::string weight_label;
  std::string weight_hash;  // SHA-256 of the sampled φ

  // Node fields. ψ values are in the frame of the affine chart ζ.
  std::vector<double> phi;
  std::vector<double> phi_eq;
  std::vector<double> psi;
  std::vector<double> psi_eq;
  std::vector<double> psi_h;
  std::vector<std::uint8_t> contact_mask;

  double phi_eq_at_zero = 0.0;      // V_φ(0)
  double phi_eq_at_infinity = 0.0;  // V_φ(∞)

  double tol = kDefaultEnvelopeTol;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest convex nondecreasing minorant of u with slope ≤ 1, by the double
/// Legendre transform over slopes {0, 1/K, ..., 1}. Throws InadmissibleWeight
/// if the samples do not show slope 0 on the left and slope 1 on the right.
RadialWeight radial_envelope(const RadialWeight& w, int slope_samples = kDefaultSlopeSamples);

/// Discrete obstacle problem on the grid: maximise u ≤ φ subject to
/// ω_FS + dd^c u ≥ 0 cell by cell. max_iter ≤ 0 selects 200·N_r.
/// Non-convergence is reported through EnvelopeResult::converged.
EnvelopeResult psh_envelope(const WeightField& phi, const QuadratureGrid& grid,
                            double tol = kDefaultEnvelopeTol, int max_iter = 0);

/// Ψ_h = φ_eq − φ. Throws Usage if env did not converge.
std::vector<double> psi_h(const EnvelopeResult& env);

/// Cell masses of ω_FS + dd^c φ_eq, including the two pole cells.
/// Throws SolverQuality if a mass is below −1e−8.
EmpiricalMeasure equilibrium_measure(const EnvelopeResult& env, const QuadratureGrid& grid);

}  // namespace eqlab
