#pragma once
// Random sections s_p = Σ a_j S_j, their zero divisors on P^1 and the
// statistics that compare them with the equilibrium measure and Ψ_h.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eqlab/bergman.hpp"
#include "eqlab/geometry.hpp"
#include "eqlab/measure.hpp"
#include "eqlab/randsec.hpp"
#include "eqlab/weight.hpp"

namespace eqlab {

/// Leading coefficients with |c_j|/binom(p,j)^{1/2} below this fraction of the largest such value count as roots at ∞.
inline constexpr double kLeadingStripThreshold = 1e-13;
inline constexpr double kMaxRootCondition = 1e-6;
inline constexpr double kRootMaskRadius = 1e-9;
inline constexpr double kMaxMaskedFraction = 0.01;

struct SectionSample {
  int p = 0;
  /// f_p = s_p / z_0^p in monomials, in the gauge of the basis (true f = e^{p·shift}·f̃).
  Eigen::VectorXcd monomial_coeffs;
  Eigen::VectorXcd basis_coeffs;
  double shift = 0.0;
  MeasureSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::uint64_t attempt = 0;
};

/// Draw a ∈ C^{d_p} from the stream (seed, "section", trial, attempt); redraws on a = 0.
SectionSample sample_section(const BergmanBasis& basis, const MeasureSpec& spec, std::uint64_t seed,
                             std::uint64_t trial, std::uint64_t attempt = 0);
/// s = Σ a_j S_j for given coefficients.
SectionSample section_from_coefficients(const BergmanBasis& basis, const Eigen::VectorXcd& a);
/// A degree-p section given directly by its polynomial (gauge shift 0).
SectionSample polynomial_section(int p, const Eigen::VectorXcd& monomial_coeffs);

struct ZeroSet {
  int p = 0;
  std::vector<cplx> finite_roots;
  int mult_at_infinity = 0;
  /// max over roots of |f(z)| / Σ|c_m||z|^m, evaluated in the root's own chart.
  double root_condition = 0.0;
  double strip_threshold = kLeadingStripThreshold;
};

/// Roots of f_p on P^1. Throws IllConditionedSample when root_condition > 1e−6 after polishing.
ZeroSet find_roots(const SectionSample& s);
ZeroSet find_roots(const Eigen::VectorXcd& monomial_coeffs, int p);

/// (1/p)[s_p = 0]: mass 1/p per finite root, mult_at_infinity/p at ∞.
EmpiricalMeasure empirical_zero_measure(const ZeroSet& z, int p);

struct LogNormField {
  std::vector<double> values;         // (1/p) log|s_p|_{h^p}
  std::vector<std::uint8_t> masked;   // nodes within 1e−9 of a root
  double masked_fraction = 0.0;
};

/// (1/p) log|f_p| − ψ at every node, computed in each node's own chart.
LogNormField lognorm_field(const SectionSample& s, const WeightField& w, const QuadratureGrid& grid);
LogNormField lognorm_field(const SectionSample& s, const ZeroSet& roots, const WeightField& w,
                           const QuadratureGrid& grid);

/// ∫ |field − target| ω_FS over unmasked nodes (FS mass renormalised).
double lognorm_l1(const LogNormField& f, const std::vector<double>& target, const QuadratureGrid& grid);

struct RegionMass {
  std::string region;
  double mean = 0.0;
  double ci_halfwidth = 0.0;  // 95%
};

struct ExpectationReport {
  std::vector<RegionMass> regions;
  int trials = 0;
  int discarded = 0;  // ill-conditioned draws replaced by a fresh attempt
};

/// Monte-Carlo estimate of (1/p) E[s_p = 0](R) for each region.
ExpectationReport expectation_current(const BergmanBasis& basis, const MeasureSpec& spec, int trials,
                                      const std::vector<RadialRegion>& regions, std::uint64_t seed,
                                      int threads = 1);

/// The fixed weak-convergence test family: 16 dyadic radial indicators and 8 Gaussian bumps in log|ζ|.
struct TestFunction {
  std::string name;
  std::function<double(const SpherePoint&)> f;
};
const std::vector<TestFunction>& weak_test_family();

/// max over the test family of |∫ f d(em) − ∫ f d(eq)|.
double weak_convergence_stat(const EmpiricalMeasure& em, const EmpiricalMeasure& eq, const QuadratureGrid& grid);

}  // namespace eqlab
