#include "eqlab/ddc.hpp"

#include <cmath>
#include <numbers>

namespace eqlab {

DiscreteDdc::DiscreteDdc(const QuadratureGrid& grid) : n_nodes_(grid.size()) {
  const int R = grid.radial_count();
  const int A = grid.angular_count();
  const int rings = 2 * R;
  const double h = 2.0 * std::numbers::pi / A;

  // Global rings ordered by increasing t = log|ζ|.
  std::vector<double> t(rings);
  auto node_of = [&](int j, int k) {
    return j < R ? grid.index(Chart::Zero, j, k) : grid.index(Chart::Infinity, rings - 1 - j, k);
  };
  for (int j = 0; j < rings; ++j) t[j] = j < R ? grid.log_radius(j) : -grid.log_radius(rings - 1 - j);
  // ρ of ring j seen from the frame of ring i's chart
  auto rho = [&](int i, int j) { return fs_potential_of_log(i < R ? t[j] : -t[j]); };

  const std::size_t M = size();
  g_ = Eigen::VectorXd::Zero(M);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * M + 4 * A);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(M);
  auto link = [&](std::size_t a, std::size_t b, double c) {
    trip.emplace_back(a, b, c);
    trip.emplace_back(b, a, c);
    diag[a] -= c;
    diag[b] -= c;
  };

  // pole disks of radius r_0/2: conductance ½·h to each node of the innermost ring
  const double cp = 0.5 * h;
  for (int k = 0; k < A; ++k) {
    const std::size_t n0 = node_of(0, k), n1 = node_of(rings - 1, k);
    link(pole_zero(), n0, cp);
    link(pole_infinity(), n1, cp);
    g_[n0] += cp * (0.0 - rho(0, 0));
    g_[pole_zero()] += cp * rho(0, 0);
    g_[n1] += cp * (0.0 - rho(rings - 1, rings - 1));
    g_[pole_infinity()] += cp * rho(rings - 1, rings - 1);
  }

  for (int j = 0; j < rings; ++j) {
    const double lo = j == 0 ? t[0] - std::numbers::ln2 : 0.5 * (t[j - 1] + t[j]);
    const double hi = j == rings - 1 ? t[j] + std::numbers::ln2 : 0.5 * (t[j] + t[j + 1]);
    const double ca = (hi - lo) / h;
    const double cr = j + 1 < rings ? h / (t[j + 1] - t[j]) : 0.0;
    for (int k = 0; k < A; ++k) {
      const std::size_t n = node_of(j, k);
      link(n, node_of(j, (k + 1) % A), ca);
      if (j + 1 < rings) {
        const std::size_t m = node_of(j + 1, k);
        link(n, m, cr);
        g_[n] += cr * (rho(j, j + 1) - rho(j, j));
        g_[m] += cr * (rho(j + 1, j) - rho(j + 1, j + 1));
      }
    }
  }
  for (std::size_t n = 0; n < M; ++n) trip.emplace_back(n, n, diag[n]);
  L_.resize(M, M);
  L_.setFromTriplets(trip.begin(), trip.end());
  diag_ = -diag;
}

Eigen::VectorXd DiscreteDdc::masses(const Eigen::VectorXd& u) const {
  return (L_ * u + g_) / (2.0 * std::numbers::pi);
}

}  // namespace eqlab
