#pragma once
// Probability laws on coefficient space C^k and Monte-Carlo estimates of the
// moment condition  ∫ |log|⟨a,u⟩||^ν dσ_k(a) ≤ C_k  over unit vectors u.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "eqlab/geometry.hpp"
#include "eqlab/rng.hpp"

namespace eqlab {

enum class Family { GaussianComplex, GaussianReal, FubiniStudy, SphereComplex, SphereReal, IIDComplex, IIDReal };

/// Law of a single i.i.d. coefficient.
struct TailSpec {
  enum class Kind { UniformDisk, ParetoLog };
  Kind kind = Kind::UniformDisk;
  double radius = 1.0;  // UniformDisk
  double rho = 2.0;     // ParetoLog: P(|a| > e^R) ≤ min(1, c R^{-ρ})
  double c = 1.0;

  static TailSpec uniform_disk(double radius);
  static TailSpec pareto_log(double rho, double c);
  /// Knee R₀ = c^{1/ρ} of the ParetoLog law.
  double knee() const;
  std::string describe() const;
};

struct MeasureSpec {
  Family family = Family::GaussianComplex;
  double alpha = 1.0;  // FubiniStudy
  TailSpec tail;       // IID families

  static MeasureSpec gaussian_complex() { return {Family::GaussianComplex, 1.0, {}}; }
  static MeasureSpec gaussian_real() { return {Family::GaussianReal, 1.0, {}}; }
  static MeasureSpec fubini_study(double alpha);
  static MeasureSpec sphere_complex() { return {Family::SphereComplex, 1.0, {}}; }
  static MeasureSpec sphere_real() { return {Family::SphereReal, 1.0, {}}; }
  static MeasureSpec iid_complex(TailSpec tail);
  static MeasureSpec iid_real(TailSpec tail);

  bool is_real() const;
  /// "GaussianComplex", "FubiniStudy{1}", "IIDComplex{ParetoLog{4,1}}", ...
  std::string describe() const;
  static MeasureSpec parse(const std::string& text);
};

/// Density of FubiniStudy{α} on C^k against Lebesgue measure:
/// Γ(k+α)/(Γ(α)π^k) · (1+‖a‖²)^{-(k+α)}.
double fubini_study_density(double alpha, const Eigen::VectorXcd& a);

/// One draw a ∈ C^k from the law.
Eigen::VectorXcd sample(const MeasureSpec& spec, int k, Rng& rng);

/// s_m = 2π^{m/2}/Γ(m/2), by the recurrence s_{m+2} = 2π s_m / m.
double sphere_area_constant(int m);

struct MomentReport {
  MeasureSpec spec;
  int k = 0;
  double nu = 1.0;
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // 95%
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo mean of |log|⟨a,u⟩||^ν with ⟨a,u⟩ = Σ a_j u_j.
MomentReport moment_estimate(const MeasureSpec& spec, int k, double nu, const Eigen::VectorXcd& u,
                             std::int64_t trials, std::uint64_t seed, int threads = 1);

/// The fixed probe set: all coordinate vectors, the flat vector and 8 seeded Haar-random unit vectors.
struct ProbeSet {
  int k = 0;
  std::vector<Eigen::VectorXcd> dense;  // flat vector first, then the random ones
};
ProbeSet probe_set(int k, std::uint64_t seed);

struct ScalingRow {
  int k = 0;
  double estimate = 0.0;  // worst case over the probe set
  double ci_halfwidth = 0.0;
  std::string worst_probe;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  double loglog_slope = 0.0;  // least-squares slope of log estimate against log k
};

/// Worst-case moment over the probe set for i.i.d. coefficients at each k.
ScalingTable iid_scaling_probe(const TailSpec& tail, double nu, const std::vector<int>& ks, std::int64_t trials,
                               std::uint64_t seed, bool real = false, int threads = 1);

enum class BHypothesis { SummableHypothesis, CesaroOnly, Fails };
std::string to_string(BHypothesis h);

/// Fit C_p ≈ A p^β and classify: β < ν − 1 summable, β < ν Cesàro only, otherwise fails.
BHypothesis bhyp_check(double nu, const std::vector<std::pair<int, double>>& c_table);
/// The fitted exponent β used by bhyp_check.
double fitted_growth_exponent(const std::vector<std::pair<int, double>>& c_table);

}  // namespace eqlab
