#include "eqlab/bergman.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "eqlab/ddc.hpp"
#include "eqlab/error.hpp"
#include "eqlab/parallel.hpp"

namespace eqlab {

namespace {

// Rings of both charts: q < R is ring q of the Zero chart, q ≥ R ring q − R of the ∞ chart.
struct RingRef {
  Chart chart;
  int ring;
};

RingRef ring_ref(const QuadratureGrid& grid, int q) {
  const int R = grid.radial_count();
  return q < R ? RingRef{Chart::Zero, q} : RingRef{Chart::Infinity, q - R};
}

// Scaled sum of squares: value = scale² · ssq.
struct ScaledSsq {
  double scale = 0.0;
  double ssq = 1.0;

  void add(double a) {
    a = std::abs(a);
    if (a == 0.0) return;
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  double log_value() const {
    return scale == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(scale) + std::log(ssq);
  }
};

void check_lineage(const GridShape& shape, const std::string& hash, const QuadratureGrid& grid,
                   const std::vector<double>& phi, const char* what) {
  if (!(shape == grid.shape())) fail(ErrorKind::Usage, std::string(what) + ": grid does not match basis");
  if (hash != weight_fingerprint(grid, phi))
    fail(ErrorKind::Usage, std::string(what) + ": weight does not match basis");
}

}  // namespace

Eigen::MatrixXcd GramMatrix::unshifted() const { return values * std::exp(-2.0 * degree * shift); }

GramMatrix gram_matrix(int p, const WeightField& w, const QuadratureGrid& grid, int threads) {
  if (p < 0) fail(ErrorKind::Configuration, "gram_matrix: negative degree");
  if (grid.angular_count() < min_angular_for_degree(p))
    fail(ErrorKind::Configuration, "gram_matrix: N_theta = " + std::to_string(grid.angular_count()) +
                                       " too small for p = " + std::to_string(p) + " (need " +
                                       std::to_string(min_angular_for_degree(p)) + ")");
  GramMatrix G;
  G.degree = p;
  G.shape = grid.shape();
  const auto phi = w.sample(grid);
  G.weight_hash = weight_fingerprint(grid, phi);
  G.shift = *std::min_element(phi.begin(), phi.end());

  const int R = grid.radial_count(), A = grid.angular_count(), rings = 2 * R, d = p + 1;
  // F[q][m] = Σ_a e^{-2p(ψ_loc - c)} e^{i m θ_a}, m = 0..p
  std::vector<std::vector<cplx>> F(rings, std::vector<cplx>(d));
  parallel_for(rings, threads, [&](std::size_t q) {
    const RingRef rr = ring_ref(grid, static_cast<int>(q));
    std::vector<cplx> e(A), spec;
    for (int a = 0; a < A; ++a) {
      const std::size_t n = grid.index(rr.chart, rr.ring, a);
      e[a] = std::exp(-2.0 * p * (phi[n] + grid.chart_potential(n) - G.shift));
    }
    Eigen::FFT<double> fft;
    fft.fwd(spec, e);
    for (int m = 0; m < d; ++m) F[q][m] = std::conj(spec[m]);
  });
  // r^e for e = 0..2p
  std::vector<std::vector<double>> pw(rings, std::vector<double>(2 * p + 1));
  for (int q = 0; q < rings; ++q) {
    const RingRef rr = ring_ref(grid, q);
    for (int e = 0; e <= 2 * p; ++e) pw[q][e] = std::exp(e * grid.log_radius(rr.ring));
  }

  G.values.resize(d, d);
  parallel_for(d, threads, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    for (int k = j; k < d; ++k) {
      cplx acc = 0.0;
      for (int q = 0; q < rings; ++q) {
        const RingRef rr = ring_ref(grid, q);
        const double wq = grid.ring_node_weight(rr.ring);
        // Zero chart: ζ^j ζ̄^k → r^{j+k} e^{i(j-k)θ}; ∞ chart: w^{p-j} w̄^{p-k} → r^{2p-j-k} e^{i(k-j)θ}
        if (rr.chart == Chart::Zero)
          acc += wq * pw[q][j + k] * std::conj(F[q][k - j]);
        else
          acc += wq * pw[q][2 * p - j - k] * F[q][k - j];
      }
      G.values(j, k) = acc;
    }
  });
  for (int j = 0; j < d; ++j) {
    G.values(j, j) = G.values(j, j).real();
    for (int k = j + 1; k < d; ++k) G.values(k, j) = std::conj(G.values(j, k));
  }
  return G;
}

BergmanBasis orthonormal_basis(const Eigen::MatrixXcd& G) {
  const Eigen::Index d = G.rows();
  if (d == 0 || G.cols() != d) fail(ErrorKind::Usage, "orthonormal_basis: Gram matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd D(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double g = G(j, j).real();
    if (!(g > 0.0) || !std::isfinite(g))
      throw ConditioningError("orthonormal_basis: non-positive Gram diagonal at " + std::to_string(j), inf);
    D[j] = 1.0 / std::sqrt(g);
  }
  Eigen::MatrixXcd Gh = D.asDiagonal() * G * D.asDiagonal();
  Gh = (0.5 * (Gh + Gh.adjoint())).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Gh, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  const double cond = lmin > 0.0 ? lmax / lmin : inf;
  if (!(cond <= kMaxGramCond))
    throw ConditioningError("Gram matrix condition " + std::to_string(cond) +
                                " exceeds double precision; use a smaller degree",
                            cond);
  const Eigen::LLT<Eigen::MatrixXcd> llt(Gh);
  if (llt.info() != Eigen::Success) throw ConditioningError("Gram matrix is not positive definite", cond);

  BergmanBasis B;
  B.degree = static_cast<int>(d) - 1;
  B.dimension = static_cast<int>(d);
  B.gram_cond = cond;
  const Eigen::MatrixXcd Dm = D.cast<cplx>().asDiagonal();
  B.coeffs = llt.matrixL().solve(Dm);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) B.coeffs(j, k) = 0.0;
  return B;
}

BergmanBasis orthonormal_basis(const GramMatrix& G) {
  BergmanBasis B = orthonormal_basis(G.values);
  B.shape = G.shape;
  B.weight_hash = G.weight_hash;
  B.shift = G.shift;
  return B;
}

KernelField bergman_kernel(const BergmanBasis& basis, const WeightField& w, const QuadratureGrid& grid,
                           int threads) {
  const auto phi = w.sample(grid);
  check_lineage(basis.shape, basis.weight_hash, grid, phi, "bergman_kernel");
  const int p = basis.degree, d = basis.dimension;
  const int R = grid.radial_count(), A = grid.angular_count(), rings = 2 * R;
  if (A < d) fail(ErrorKind::Configuration, "bergman_kernel: angular count below dimension");
  const double c = basis.shift;
  const auto& C = basis.coeffs;

  KernelField kf;
  kf.degree = p;
  kf.shape = grid.shape();
  kf.weight_hash = basis.weight_hash;
  const std::size_t N = grid.size();
  kf.values.resize(N);
  kf.log_values.resize(N);
  if (p > 0) {
    kf.log_half_p.resize(N);
    kf.fs_potential.resize(N);
  }

  parallel_for(rings, threads, [&](std::size_t qq) {
    const RingRef rr = ring_ref(grid, static_cast<int>(qq));
    const double lr = grid.log_radius(rr.ring);
    std::vector<ScaledSsq> acc(A);
    std::vector<cplx> X(A), x;
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    for (int j = 0; j < d; ++j) {
      std::fill(X.begin(), X.end(), cplx{0.0, 0.0});
      for (int m = 0; m <= j; ++m) {
        const int e = rr.chart == Chart::Zero ? m : p - m;  // power of the chart coordinate
        X[e] = C(j, m) * std::exp(e * lr);
      }
      fft.inv(x, X);
      for (int a = 0; a < A; ++a) {
        acc[a].add(x[a].real());
        acc[a].add(x[a].imag());
      }
    }
    for (int a = 0; a < A; ++a) {
      const std::size_t n = grid.index(rr.chart, rr.ring, a);
      const double log_k = acc[a].log_value();
      const double rho = grid.chart_potential(n);
      const double lp = log_k - 2.0 * p * (phi[n] + rho - c);
      if (!std::isfinite(lp))
        fail(ErrorKind::Numeric, "bergman_kernel: non-finite log P_p at node " + std::to_string(n));
      kf.log_values[n] = lp;
      kf.values[n] = std::exp(lp);
      if (p > 0) {
        kf.log_half_p[n] = lp / (2.0 * p);
        kf.fs_potential[n] = log_k / (2.0 * p) + c - rho;
      }
    }
  });
  if (p > 0) {
    ScaledSsq k0, kinf;
    for (int j = 0; j < d; ++j) {
      k0.add(C(j, 0).real());
      k0.add(C(j, 0).imag());
      kinf.add(C(j, p).real());
      kinf.add(C(j, p).imag());
    }
    kf.fs_potential_at_zero = k0.log_value() / (2.0 * p) + c;
    kf.fs_potential_at_infinity = kinf.log_value() / (2.0 * p) + c;
  }
  return kf;
}

double kernel_vs_envelope(const KernelField& kf, const EnvelopeResult& env, const QuadratureGrid& grid) {
  if (!(kf.shape == grid.shape()) || !(env.shape == grid.shape()))
    fail(ErrorKind::Usage, "kernel_vs_envelope: grid mismatch");
  if (kf.weight_hash != env.weight_hash) fail(ErrorKind::Usage, "kernel_vs_envelope: weight mismatch");
  if (kf.degree == 0) fail(ErrorKind::Usage, "kernel_vs_envelope: degree 0 has no (1/2p) log P_p");
  std::vector<double> diff(grid.size());
  for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = std::abs(kf.log_half_p[n] - env.psi_h[n]);
  return fs_integral(grid, diff);
}

RateFit rate_fit(const std::vector<std::pair<int, double>>& errors) {
  if (errors.size() < 4) fail(ErrorKind::Usage, "rate_fit: need at least four (p, error) points");
  RateFit fit;
  fit.c_min = std::numeric_limits<double>::infinity();
  for (const auto& [p, err] : errors) {
    if (p < 5) fail(ErrorKind::Usage, "rate_fit: degrees must be >= 5");
    if (!(err >= 0.0)) fail(ErrorKind::Usage, "rate_fit: errors must be nonnegative");
    const double ratio = err * p / std::log(static_cast<double>(p));
    fit.c_hat = std::max(fit.c_hat, ratio);
    fit.c_min = std::min(fit.c_min, ratio);
  }
  return fit;
}

EmpiricalMeasure fs_current_measure(const KernelField& kf, const QuadratureGrid& grid) {
  if (kf.degree == 0) fail(ErrorKind::Usage, "fs_current_measure: degree 0 has no potential");
  if (!(kf.shape == grid.shape())) fail(ErrorKind::Usage, "fs_current_measure: grid mismatch");
  const DiscreteDdc op(grid);
  const std::size_t N = grid.size();
  Eigen::VectorXd U(op.size());
  for (std::size_t n = 0; n < N; ++n) U[n] = kf.fs_potential[n];
  U[op.pole_zero()] = kf.fs_potential_at_zero;
  U[op.pole_infinity()] = kf.fs_potential_at_infinity;
  const Eigen::VectorXd mass = op.masses(U);
  EmpiricalMeasure mu;
  for (std::size_t n = 0; n < op.size(); ++n) {
    if (mass[n] < -1e-6)
      fail(ErrorKind::SolverQuality, "fs_current_measure: negative cell mass " + std::to_string(mass[n]));
    const SpherePoint pt = n < N ? grid.nodes()[n]
                                 : (n == op.pole_zero() ? SpherePoint::zero() : SpherePoint::infinity());
    mu.add(pt, std::max(0.0, mass[n]));
  }
  return mu;
}

std::vector<double> section_norm_squared(const BergmanBasis& basis, const Eigen::VectorXcd& alpha,
                                         const WeightField& w, const QuadratureGrid& grid) {
  const auto phi = w.sample(grid);
  check_lineage(basis.shape, basis.weight_hash, grid, phi, "section_norm_squared");
  const int p = basis.degree;
  if (alpha.size() != basis.dimension) fail(ErrorKind::Usage, "section_norm_squared: wrong coefficient count");
  const Eigen::RowVectorXcd a = alpha.transpose() * basis.coeffs / alpha.norm();
  std::vector<double> out(grid.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    const SpherePoint& pt = grid.nodes()[n];
    cplx v = 0.0;
    if (pt.chart == Chart::Zero)
      for (int m = p; m >= 0; --m) v = v * pt.coord + a[m];
    else
      for (int m = 0; m <= p; ++m) v = v * pt.coord + a[m];  // Σ a_m w^{p-m}
    out[n] = std::exp(2.0 * std::log(std::abs(v)) - 2.0 * p * (phi[n] + grid.chart_potential(n) - basis.shift));
  }
  return out;
}

void write_basis_csv(const BergmanBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Configuration, "cannot write " + path);
  char buf[160];
  out << "degree,radial,angular,shift,gram_cond,weight_hash\n";
  std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,", basis.degree, basis.shape.radial, basis.shape.angular,
                basis.shift, basis.gram_cond);
  out << buf << basis.weight_hash << "\nj,m,re,im\n";
  for (int j = 0; j < basis.dimension; ++j)
    for (int m = 0; m <= j; ++m) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", j, m, basis.coeffs(j, m).real(),
                    basis.coeffs(j, m).imag());
      out << buf;
    }
}

std::optional<BergmanBasis> read_basis_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  auto bad = [&]() -> std::optional<BergmanBasis> {
    fail(ErrorKind::Configuration, "malformed basis cache " + path);
  };
  std::string line;
  if (!std::getline(in, line) || !std::getline(in, line)) return bad();
  BergmanBasis B;
  {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) return bad();
    B.degree = std::stoi(cells[0]);
    B.shape = {std::stoi(cells[1]), std::stoi(cells[2])};
    B.shift = std::stod(cells[3]);
    B.gram_cond = std::stod(cells[4]);
    B.weight_hash = cells[5];
  }
  B.dimension = B.degree + 1;
  B.coeffs = Eigen::MatrixXcd::Zero(B.dimension, B.dimension);
  std::getline(in, line);  // column header
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int j = 0, m = 0;
    double re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &j, &m, &re, &im) != 4 || j < 0 || m < 0 || m > j ||
        j >= B.dimension)
      return bad();
    B.coeffs(j, m) = cplx{re, im};
    ++count;
  }
  if (count != B.dimension * (B.dimension + 1) / 2) return bad();
  return B;
}

}  // namespace eqlab
