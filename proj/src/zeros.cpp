#include "eqlab/zeros.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "eqlab/error.hpp"
#include "eqlab/parallel.hpp"

namespace eqlab {

namespace {

// Parlett–Reinsch balancing (radix 2) of a dense matrix, in place.
void balance(Eigen::MatrixXcd& A) {
  const Eigen::Index n = A.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(A(j, i));
        r += std::abs(A(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0, g = r / 2.0;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c > g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        A.row(i) /= f;
        A.col(i) *= f;
      }
    }
  }
}

// Newton correction f/f' and backward error of h (coefficients h_0..h_n) at z,
// using the reversed polynomial w^n h(1/w) outside the unit disk.
struct Eval {
  cplx newton;
  double backward_error;
};

Eval evaluate(const std::vector<cplx>& h, cplx z) {
  const int n = static_cast<int>(h.size()) - 1;
  if (std::abs(z) <= 1.0) {
    cplx f = 0.0, df = 0.0;
    double scale = 0.0;
    const double az = std::abs(z);
    for (int m = n; m >= 0; --m) {
      df = df * z + f;
      f = f * z + h[m];
      scale = scale * az + std::abs(h[m]);
    }
    return {f / df, std::abs(f) / scale};
  }
  const cplx w = 1.0 / z;
  const double aw = std::abs(w);
  cplx g = 0.0, dg = 0.0;
  double scale = 0.0;
  for (int m = 0; m <= n; ++m) {
    dg = dg * w + g;
    g = g * w + h[m];
    scale = scale * aw + std::abs(h[m]);
  }
  return {z * g / (static_cast<double>(n) * g - w * dg), std::abs(g) / scale};
}

// Chart-local evaluation of f (degree ≤ p) at a node: returns log|f(ζ)| for the Zero
// chart and log|Σ c_m w^{p-m}| for the ∞ chart.
double chart_log_abs(const Eigen::VectorXcd& c, int p, const SpherePoint& pt) {
  cplx v = 0.0;
  if (pt.chart == Chart::Zero)
    for (int m = p; m >= 0; --m) v = v * pt.coord + c[m];
  else
    for (int m = 0; m <= p; ++m) v = v * pt.coord + c[m];
  return std::log(std::abs(v));
}

void mask_near_roots(const QuadratureGrid& grid, const std::vector<cplx>& roots, std::vector<std::uint8_t>& masked) {
  const int R = grid.radial_count(), A = grid.angular_count();
  std::vector<double> radii(R);
  for (int i = 0; i < R; ++i) radii[i] = grid.radius(i);
  const double h = 2.0 * std::numbers::pi / A;
  auto scan = [&](Chart chart, cplx coord) {
    const double rc = std::abs(coord);
    if (rc > 1.0 + kRootMaskRadius) return;
    const int hi = static_cast<int>(std::lower_bound(radii.begin(), radii.end(), rc) - radii.begin());
    double theta = std::arg(coord);
    if (theta < 0) theta += 2.0 * std::numbers::pi;
    const int k0 = static_cast<int>(std::lround(theta / h));
    for (int i = std::max(0, hi - 1); i <= std::min(R - 1, hi); ++i)
      for (int dk = -1; dk <= 1; ++dk) {
        const int k = ((k0 + dk) % A + A) % A;
        const std::size_t n = grid.index(chart, i, k);
        if (std::abs(grid.nodes()[n].coord - coord) <= kRootMaskRadius) masked[n] = 1;
      }
  };
  for (const cplx& z : roots) {
    scan(Chart::Zero, z);
    if (z != cplx{0.0, 0.0}) scan(Chart::Infinity, 1.0 / z);
  }
}

}  // namespace

SectionSample section_from_coefficients(const BergmanBasis& basis, const Eigen::VectorXcd& a) {
  if (a.size() != basis.dimension) fail(ErrorKind::Usage, "section: coefficient vector has the wrong length");
  SectionSample s;
  s.p = basis.degree;
  s.basis_coeffs = a;
  s.monomial_coeffs = basis.coeffs.transpose() * a;
  s.shift = basis.shift;
  return s;
}

SectionSample sample_section(const BergmanBasis& basis, const MeasureSpec& spec, std::uint64_t seed,
                             std::uint64_t trial, std::uint64_t attempt) {
  for (;; ++attempt) {
    Rng rng(seed, "section", trial, attempt);
    const Eigen::VectorXcd a = sample(spec, basis.dimension, rng);
    if (a.cwiseAbs().maxCoeff() == 0.0) continue;  // measure-zero event
    SectionSample s = section_from_coefficients(basis, a);
    s.spec = spec;
    s.seed = seed;
    s.trial = trial;
    s.attempt = attempt;
    return s;
  }
}

SectionSample polynomial_section(int p, const Eigen::VectorXcd& monomial_coeffs) {
  if (p < 0 || monomial_coeffs.size() != p + 1)
    fail(ErrorKind::Usage, "polynomial_section: need p + 1 coefficients");
  SectionSample s;
  s.p = p;
  s.monomial_coeffs = monomial_coeffs;
  s.basis_coeffs = monomial_coeffs;
  return s;
}

ZeroSet find_roots(const Eigen::VectorXcd& c, int p) {
  if (c.size() != p + 1) fail(ErrorKind::Usage, "find_roots: need p + 1 coefficients");
  const double cmax = c.cwiseAbs().maxCoeff();
  if (!(cmax > 0.0)) fail(ErrorKind::Usage, "find_roots: polynomial is identically zero");
  if (!std::isfinite(cmax)) fail(ErrorKind::Numeric, "find_roots: non-finite coefficient");

  ZeroSet z;
  z.p = p;
  // Degree is decided on c_j / binom(p, j)^{1/2}, the scale in which the coefficients of
  // an FS-Gaussian section are i.i.d.; raw magnitudes of such sections span 10^{0.15p}.
  std::vector<double> scaled(p + 1);
  for (int j = 0; j <= p; ++j) {
    const double log_binom = std::lgamma(p + 1.0) - std::lgamma(j + 1.0) - std::lgamma(p - j + 1.0);
    scaled[j] = std::abs(c[j]) * std::exp(-0.5 * log_binom);
  }
  const double smax = *std::max_element(scaled.begin(), scaled.end());
  int d = p;
  while (scaled[d] <= kLeadingStripThreshold * smax) --d;
  z.mult_at_infinity = p - d;
  int lo = 0;
  while (c[lo] == cplx{0.0, 0.0}) ++lo;
  z.finite_roots.assign(lo, cplx{0.0, 0.0});
  const int n = d - lo;
  if (n == 0) return z;

  std::vector<cplx> h(c.data() + lo, c.data() + d + 1);
  std::vector<cplx> roots(n);
  if (n == 1) {
    roots[0] = -h[0] / h[1];
  } else {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (int m = 0; m < n; ++m) comp(0, m) = -h[n - 1 - m] / h[n];
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    balance(comp);
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(comp, false);
    if (ces.info() != Eigen::Success) fail(ErrorKind::Numeric, "find_roots: eigenvalue iteration failed");
    for (int i = 0; i < n; ++i) roots[i] = ces.eigenvalues()[i];
  }

  // Aberth polishing; a root only moves when its backward error improves.
  std::vector<double> err(n);
  for (int i = 0; i < n; ++i) err[i] = evaluate(h, roots[i]).backward_error;
  for (int round = 0; round < 3; ++round) {
    if (*std::max_element(err.begin(), err.end()) <= 1e-15) break;
    std::vector<cplx> next = roots;
    for (int i = 0; i < n; ++i) {
      const cplx N = evaluate(h, roots[i]).newton;
      cplx S = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) S += 1.0 / (roots[i] - roots[j]);
      const cplx step = N / (1.0 - N * S);
      if (std::isfinite(step.real()) && std::isfinite(step.imag())) next[i] = roots[i] - step;
    }
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      const double e = evaluate(h, next[i]).backward_error;
      if (e < err[i]) {
        roots[i] = next[i];
        err[i] = e;
        improved = true;
      }
    }
    if (!improved) break;
  }
  z.root_condition = *std::max_element(err.begin(), err.end());
  if (!(z.root_condition <= kMaxRootCondition))
    fail(ErrorKind::IllConditionedSample,
         "find_roots: backward error " + std::to_string(z.root_condition) + " after polishing");
  z.finite_roots.insert(z.finite_roots.end(), roots.begin(), roots.end());
  return z;
}

ZeroSet find_roots(const SectionSample& s) { return find_roots(s.monomial_coeffs, s.p); }

EmpiricalMeasure empirical_zero_measure(const ZeroSet& z, int p) {
  if (p < 1 || static_cast<int>(z.finite_roots.size()) + z.mult_at_infinity != p)
    fail(ErrorKind::Usage, "empirical_zero_measure: zero count does not match the degree");
  EmpiricalMeasure mu;
  for (const cplx& r : z.finite_roots) mu.add(SpherePoint::from_affine(r), 1.0 / p);
  if (z.mult_at_infinity > 0) mu.add(SpherePoint::infinity(), static_cast<double>(z.mult_at_infinity) / p);
  return mu;
}

LogNormField lognorm_field(const SectionSample& s, const ZeroSet& roots, const WeightField& w,
                           const QuadratureGrid& grid) {
  if (s.p < 1) fail(ErrorKind::Usage, "lognorm_field: degree must be >= 1");
  const auto phi = w.sample(grid);
  const std::size_t N = grid.size();
  LogNormField out;
  out.values.assign(N, 0.0);
  out.masked.assign(N, 0);
  mask_near_roots(grid, roots.finite_roots, out.masked);
  std::size_t count = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const double v = chart_log_abs(s.monomial_coeffs, s.p, grid.nodes()[n]) / s.p + s.shift -
                     (phi[n] + grid.chart_potential(n));
    if (!std::isfinite(v)) out.masked[n] = 1;
    if (out.masked[n]) {
      ++count;
      continue;
    }
    out.values[n] = v;
  }
  out.masked_fraction = static_cast<double>(count) / N;
  if (out.masked_fraction > kMaxMaskedFraction)
    fail(ErrorKind::Configuration, "lognorm_field: " + std::to_string(count) +
                                       " nodes sit on roots; grid too coarse for degree " + std::to_string(s.p));
  return out;
}

LogNormField lognorm_field(const SectionSample& s, const WeightField& w, const QuadratureGrid& grid) {
  return lognorm_field(s, find_roots(s), w, grid);
}

double lognorm_l1(const LogNormField& f, const std::vector<double>& target, const QuadratureGrid& grid) {
  if (target.size() != f.values.size()) fail(ErrorKind::Usage, "lognorm_l1: size mismatch");
  std::vector<double> diff(f.values.size());
  for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = f.masked[n] ? 0.0 : std::abs(f.values[n] - target[n]);
  return fs_integral_masked(grid, diff, f.masked);
}

ExpectationReport expectation_current(const BergmanBasis& basis, const MeasureSpec& spec, int trials,
                                      const std::vector<RadialRegion>& regions, std::uint64_t seed, int threads) {
  if (trials < 100) fail(ErrorKind::Usage, "expectation_current: need at least 100 trials");
  if (basis.degree < 1) fail(ErrorKind::Usage, "expectation_current: degree must be >= 1");
  const std::size_t Rn = regions.size();
  // Zero counts per region; masses are counts / p, so sums stay exact.
  std::vector<std::int64_t> count(static_cast<std::size_t>(trials) * Rn);
  std::vector<int> discarded(trials, 0);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      const SectionSample s = sample_section(basis, spec, seed, t, attempt);
      try {
        const ZeroSet z = find_roots(s);
        for (std::size_t r = 0; r < Rn; ++r) {
          std::int64_t c = 0;
          for (const cplx& root : z.finite_roots) c += regions[r].contains(SpherePoint::from_affine(root));
          if (regions[r].contains(SpherePoint::infinity())) c += z.mult_at_infinity;
          count[t * Rn + r] = c;
        }
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::IllConditionedSample) throw;
        ++discarded[t];
      }
    }
  });
  ExpectationReport rep;
  rep.trials = trials;
  for (int d : discarded) rep.discarded += d;
  for (std::size_t r = 0; r < Rn; ++r) {
    std::int64_t total = 0;
    for (int t = 0; t < trials; ++t) total += count[t * Rn + r];
    const double p = basis.degree;
    const double mean = static_cast<double>(total) / (p * trials);
    double ss = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double d = count[t * Rn + r] / p - mean;
      ss += d * d;
    }
    rep.regions.push_back({regions[r].name, mean, 1.96 * std::sqrt(ss / (trials - 1) / trials)});
  }
  return rep;
}

const std::vector<TestFunction>& weak_test_family() {
  static const std::vector<TestFunction> family = [] {
    std::vector<TestFunction> f;
    const double l2 = std::numbers::ln2;
    f.push_back({"disk(2^-7)", [l2](const SpherePoint& p) { return p.log_modulus() <= -7 * l2 ? 1.0 : 0.0; }});
    for (int k = -7; k < 7; ++k)
      f.push_back({"annulus(2^" + std::to_string(k) + ",2^" + std::to_string(k + 1) + ")",
                   [l2, k](const SpherePoint& p) {
                     const double t = p.log_modulus();
                     return t > k * l2 && t <= (k + 1) * l2 ? 1.0 : 0.0;
                   }});
    f.push_back({"exterior(2^7)", [l2](const SpherePoint& p) { return p.log_modulus() > 7 * l2 ? 1.0 : 0.0; }});
    for (int i = 0; i < 8; ++i) {
      const double c = -3.5 + i;
      char name[32];
      std::snprintf(name, sizeof name, "bump(%+.1f)", c);
      f.push_back({name, [c](const SpherePoint& p) {
                     const double x = (p.log_modulus() - c) / 0.5;
                     return std::exp(-0.5 * x * x);
                   }});
    }
    return f;
  }();
  return family;
}

double weak_convergence_stat(const EmpiricalMeasure& em, const EmpiricalMeasure& eq,
                             [[maybe_unused]] const QuadratureGrid& grid) {
  double worst = 0.0;
  for (const auto& tf : weak_test_family()) {
    double a = 0.0, b = 0.0;
    for (const auto& atom : em.atoms()) a += atom.mass * tf.f(atom.point);
    for (const auto& atom : eq.atoms()) b += atom.mass * tf.f(atom.point);
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

}  // namespace eqlab
