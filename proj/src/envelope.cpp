#include "eqlab/envelope.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

#include "eqlab/ddc.hpp"
#include "eqlab/error.hpp"

namespace eqlab {

namespace {

constexpr double kTailSlopeTolerance = 0.05;

void check_admissible(const RadialWeight& w) {
  const int n = w.size();
  const int m = std::max(1, n / 20);
  const double h = w.step();
  const double left = (w.u[m] - w.u[0]) / (m * h);
  const double right = (w.u[n - 1] - w.u[n - 1 - m]) / (m * h);
  if (std::abs(left) > kTailSlopeTolerance)
    fail(ErrorKind::InadmissibleWeight,
         "radial weight: slope " + std::to_string(left) + " at -inf (needs 0, phi would blow up at 0)");
  if (std::abs(right - 1.0) > kTailSlopeTolerance)
    fail(ErrorKind::InadmissibleWeight,
         "radial weight: slope " + std::to_string(right) + " at +inf (needs 1, phi would blow up at infinity)");
}

// Largest convex minorant with slopes in [0, 1] of the points (t_j, y_j), t increasing.
// Returns the minorant at the same abscissae.
std::vector<double> constrained_hull(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<std::size_t> hull;
  hull.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      // drop b if it lies on or above the chord a–j
      if ((y[b] - y[a]) * (t[j] - t[a]) >= (y[j] - y[a]) * (t[b] - t[a]))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(j);
  }
  double c0 = std::numeric_limits<double>::infinity(), c1 = c0;
  for (std::size_t j = 0; j < n; ++j) {
    c0 = std::min(c0, y[j]);
    c1 = std::min(c1, y[j] - t[j]);
  }
  std::vector<double> g(n);
  std::size_t e = 0;  // current hull edge [hull[e], hull[e+1]]
  for (std::size_t j = 0; j < n; ++j) {
    double best = std::max(c0, c1 + t[j]);
    if (hull.size() == 1) {
      g[j] = std::min(best, y[j]);
      continue;
    }
    while (e + 2 < hull.size() && hull[e + 1] <= j) ++e;
    const std::size_t a = hull[e], b = hull[e + 1];
    const double s = (y[b] - y[a]) / (t[b] - t[a]);
    double s_lo = s, s_hi = s;
    if (j == a && e > 0) {
      const std::size_t p = hull[e - 1];
      s_lo = (y[a] - y[p]) / (t[a] - t[p]);
    } else if (j == a) {
      s_lo = -std::numeric_limits<double>::infinity();
    }
    if (j == b) s_hi = std::numeric_limits<double>::infinity();  // only reached at the last vertex
    if (s_hi >= 0.0 && s_lo <= 1.0) best = std::max(best, y[a] + s * (t[j] - t[a]));
    g[j] = std::min(best, y[j]);
  }
  return g;
}

}  // namespace

RadialWeight radial_envelope(const RadialWeight& w, int slope_samples) {
  if (slope_samples < 64) fail(ErrorKind::Configuration, "radial_envelope: slope_samples must be >= 64");
  if (w.size() < 3) fail(ErrorKind::Configuration, "radial_envelope: need at least three samples");
  for (double v : w.u)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidField, "radial_envelope: non-finite sample");
  check_admissible(w);

  const int n = w.size();
  const int K = slope_samples;
  std::vector<double> t(n), b(K + 1, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) t[i] = w.t_at(i);
  for (int k = 0; k <= K; ++k) {
    const double s = static_cast<double>(k) / K;
    double m = b[k];
    for (int i = 0; i < n; ++i) m = std::min(m, w.u[i] - s * t[i]);
    b[k] = m;
  }
  RadialWeight out{w.t_min, w.t_max, std::vector<double>(n, -std::numeric_limits<double>::infinity())};
  for (int k = 0; k <= K; ++k) {
    const double s = static_cast<double>(k) / K;
    for (int i = 0; i < n; ++i) out.u[i] = std::max(out.u[i], s * t[i] + b[k]);
  }
  for (int i = 0; i < n; ++i) out.u[i] = std::min(out.u[i], w.u[i]);
  return out;
}

EnvelopeResult psh_envelope(const WeightField& weight, const QuadratureGrid& grid, double tol, int max_iter) {
  if (!(tol > 0.0)) fail(ErrorKind::Configuration, "psh_envelope: tol must be positive");
  if (max_iter <= 0) max_iter = 200 * grid.radial_count();

  EnvelopeResult res;
  res.shape = grid.shape();
  res.weight_label = weight.label();
  res.tol = tol;
  res.phi = weight.sample(grid);
  res.weight_hash = weight_fingerprint(grid, res.phi);
  const auto& phi = res.phi;

  const DiscreteDdc op(grid);
  const std::size_t N = grid.size(), M = op.size();
  const int R = grid.radial_count(), A = grid.angular_count(), rings = 2 * R;
  const auto& L = op.matrix();
  const auto& g = op.source();
  const auto& diag = op.diagonal();

  // Obstacle at the poles: φ there if the weight is pointwise, else the mean over the innermost ring.
  std::vector<double> obstacle(phi);
  for (Chart c : {Chart::Zero, Chart::Infinity}) {
    double v = weight.is_pointwise() ? weight.phi(c == Chart::Zero ? SpherePoint::zero() : SpherePoint::infinity())
                                     : NAN;
    if (!std::isfinite(v)) {
      v = 0.0;
      for (int k = 0; k < A; ++k) v += phi[grid.index(c, 0, k)];
      v /= A;
    }
    obstacle.push_back(v);
  }

  // Seed: exact discrete envelope along every angular ray. This is the
  // answer for radial weights and a good active set otherwise.
  Eigen::VectorXd U = Eigen::VectorXd::Zero(M);
  std::vector<std::uint8_t> active(M, 0);
  {
    std::vector<double> t(rings), y(rings);
    std::vector<std::size_t> node(rings);
    for (int k = 0; k < A; ++k) {
      for (int j = 0; j < rings; ++j) {
        node[j] = j < R ? grid.index(Chart::Zero, j, k) : grid.index(Chart::Infinity, rings - 1 - j, k);
        t[j] = grid.log_modulus(node[j]);
        y[j] = phi[node[j]] + fs_potential_of_log(t[j]);
      }
      const auto env = constrained_hull(t, y);
      for (int j = 0; j < rings; ++j) {
        const double gap = y[j] - env[j];
        U[node[j]] = phi[node[j]] - gap;
        active[node[j]] = gap <= 1e-12 * (1.0 + std::abs(y[j]));
      }
    }
  }

  const double eps = std::max(1e-14, 1e-3 * tol);
  std::vector<std::ptrdiff_t> pos(M);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool stable = false;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < max_iter && !stable) {
    ++it;
    // Solve −L_II u_I = g_I + L_IA φ_A on the inactive set.
    std::vector<std::size_t> inactive;
    for (std::size_t n = 0; n < M; ++n) {
      if (active[n]) {
        U[n] = obstacle[n];
        pos[n] = -1;
      } else {
        pos[n] = static_cast<std::ptrdiff_t>(inactive.size());
        inactive.push_back(n);
        U[n] = 0.0;
      }
    }
    const Eigen::VectorXd b = L * U + g;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * inactive.size() + 2 * A);
    for (std::size_t c : inactive)
      for (Eigen::SparseMatrix<double>::InnerIterator e(L, static_cast<Eigen::Index>(c)); e; ++e)
        if (pos[e.row()] >= 0) trip.emplace_back(pos[e.row()], pos[c], -e.value());
    const auto m = static_cast<Eigen::Index>(inactive.size());
    Eigen::SparseMatrix<double> Aii(m, m);
    Aii.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd bi(m);
    for (Eigen::Index i = 0; i < m; ++i) bi[i] = b[inactive[i]];
    ldlt.compute(Aii);
    if (ldlt.info() != Eigen::Success) fail(ErrorKind::Numeric, "psh_envelope: singular reduced system");
    const Eigen::VectorXd x = ldlt.solve(bi);
    for (Eigen::Index i = 0; i < m; ++i) U[inactive[i]] = x[i];
    if (!U.allFinite()) fail(ErrorKind::Numeric, "psh_envelope: non-finite iterate");

    // Policy improvement: at each node keep the smaller of φ − u and the scaled residual.
    const Eigen::VectorXd r = L * U + g;
    residual = 0.0;
    stable = true;
    for (std::size_t n = 0; n < M; ++n) {
      const double s = r[n] / diag[n];
      const double a = obstacle[n] - U[n];
      residual = std::max(residual, std::abs(std::min(a, s)));
      if (active[n] && s < a - eps) {
        active[n] = 0;
        stable = false;
      } else if (!active[n] && a < s - eps) {
        active[n] = 1;
        stable = false;
      }
    }
  }
  res.iterations = it;
  res.residual = residual;
  res.converged = stable && residual <= tol;

  res.phi_eq.resize(N);
  res.psi.resize(N);
  res.psi_eq.resize(N);
  res.psi_h.resize(N);
  res.contact_mask.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double rho = fs_potential_of_log(grid.log_modulus(n));
    res.phi_eq[n] = std::min(U[n], phi[n]);
    res.psi[n] = phi[n] + rho;
    res.psi_eq[n] = res.phi_eq[n] + rho;
    res.psi_h[n] = res.phi_eq[n] - phi[n];
    res.contact_mask[n] = -res.psi_h[n] <= 10.0 * tol;
  }
  res.phi_eq_at_zero = std::min(U[op.pole_zero()], obstacle[op.pole_zero()]);
  res.phi_eq_at_infinity = std::min(U[op.pole_infinity()], obstacle[op.pole_infinity()]);
  return res;
}

std::vector<double> psi_h(const EnvelopeResult& env) {
  if (!env.converged) fail(ErrorKind::Usage, "psi_h: envelope did not converge");
  return env.psi_h;
}

EmpiricalMeasure equilibrium_measure(const EnvelopeResult& env, const QuadratureGrid& grid) {
  if (!env.converged) fail(ErrorKind::Usage, "equilibrium_measure: envelope did not converge");
  if (!(env.shape == grid.shape())) fail(ErrorKind::Usage, "equilibrium_measure: grid does not match envelope");
  const DiscreteDdc op(grid);
  const std::size_t N = grid.size();
  Eigen::VectorXd U(op.size());
  for (std::size_t n = 0; n < N; ++n) U[n] = env.phi_eq[n];
  U[op.pole_zero()] = env.phi_eq_at_zero;
  U[op.pole_infinity()] = env.phi_eq_at_infinity;
  const Eigen::VectorXd mass = op.masses(U);

  EmpiricalMeasure mu;
  for (std::size_t n = 0; n < op.size(); ++n) {
    if (mass[n] < -1e-8)
      fail(ErrorKind::SolverQuality, "equilibrium_measure: negative cell mass " + std::to_string(mass[n]));
    const SpherePoint pt = n < N ? grid.nodes()[n]
                                 : (n == op.pole_zero() ? SpherePoint::zero() : SpherePoint::infinity());
    mu.add(pt, std::max(0.0, mass[n]));
  }
  return mu;
}

}  // namespace eqlab
