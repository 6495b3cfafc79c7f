#include "eqlab/geometry.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "eqlab/error.hpp"

namespace eqlab {

SpherePoint SpherePoint::from_affine(cplx zeta) {
  return SpherePoint{Chart::Zero, zeta}.canonical();
}

SpherePoint SpherePoint::canonical() const {
  if (std::abs(coord) <= 1.0) return *this;
  return {opposite(chart), 1.0 / coord};
}

double SpherePoint::log_modulus() const {
  const double lr = std::log(std::abs(coord));  // -inf at the pole
  return chart == Chart::Zero ? lr : -lr;
}

SpherePoint chart_transition(const SpherePoint& pt) {
  if (pt.is_pole())
    fail(ErrorKind::Domain, "chart_transition: the pole of the current chart has no image");
  return {opposite(pt.chart), 1.0 / pt.coord};
}

double fs_potential_of_log(double t) {
  if (t > 0.0) return t + 0.5 * std::log1p(std::exp(-2.0 * t));
  return 0.5 * std::log1p(std::exp(2.0 * t));
}

QuadratureGrid::QuadratureGrid(int radial, int angular) : shape_{radial, angular} {
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
      table(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(radial)),
            &gsl_integration_glfixed_table_free);
  if (!table) fail(ErrorKind::Numeric, "Gauss–Legendre table allocation failed");

  s_.resize(radial);
  radii_.resize(radial);
  log_r_.resize(radial);
  ring_w_.resize(radial);
  chart_rho_.resize(radial);
  for (int i = 0; i < radial; ++i) {
    double s = 0.0, w = 0.0;
    gsl_integration_glfixed_point(0.0, 0.5, static_cast<std::size_t>(i), &s, &w, table.get());
    s_[i] = s;
    // r² = s/(1-s); t = log r
    log_r_[i] = 0.5 * (std::log(s) - std::log1p(-s));
    radii_[i] = std::exp(log_r_[i]);
    ring_w_[i] = w / angular;
    chart_rho_[i] = -0.5 * std::log1p(-s);  // ½ log(1 + r²) = -½ log(1 - s)
  }
  // gsl returns points in increasing order for i < n/2 and decreasing after; sort by s.
  std::vector<int> order(radial);
  for (int i = 0; i < radial; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return s_[a] < s_[b]; });
  auto permute = [&](std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (int i = 0; i < radial; ++i) out[i] = v[order[i]];
    v.swap(out);
  };
  permute(s_);
  permute(radii_);
  permute(log_r_);
  permute(ring_w_);
  permute(chart_rho_);

  nodes_.reserve(2 * static_cast<std::size_t>(radial) * angular);
  weights_.reserve(nodes_.capacity());
  for (Chart chart : {Chart::Zero, Chart::Infinity}) {
    for (int i = 0; i < radial; ++i) {
      for (int k = 0; k < angular; ++k) {
        nodes_.push_back({chart, std::polar(radii_[i], angle(k))});
        weights_.push_back(ring_w_[i]);
      }
    }
  }
}

double QuadratureGrid::angle(int k) const {
  return 2.0 * std::numbers::pi * k / shape_.angular;
}

QuadratureGrid build_grid(int radial, int angular) {
  if (radial < kMinResolution || angular < kMinResolution)
    fail(ErrorKind::Configuration, "build_grid: resolution " + std::to_string(radial) + "x" +
                                       std::to_string(angular) + " below minimum " +
                                       std::to_string(kMinResolution));
  return QuadratureGrid(radial, angular);
}

double fs_integral(const QuadratureGrid& grid, std::span<const double> f) {
  if (f.size() != grid.size()) fail(ErrorKind::Usage, "fs_integral: field size does not match grid");
  const auto& w = grid.fs_weights();
  double sum = 0.0, comp = 0.0;  // Neumaier
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (std::isnan(f[n])) fail(ErrorKind::InvalidField, "fs_integral: NaN sample at node " + std::to_string(n));
    const double term = f[n] * w[n];
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double fs_integral_masked(const QuadratureGrid& grid, std::span<const double> f,
                          std::span<const std::uint8_t> masked) {
  if (f.size() != grid.size() || masked.size() != grid.size())
    fail(ErrorKind::Usage, "fs_integral_masked: field size does not match grid");
  const auto& w = grid.fs_weights();
  double sum = 0.0, kept = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (masked[n]) continue;
    if (std::isnan(f[n])) fail(ErrorKind::InvalidField, "fs_integral: NaN sample at node " + std::to_string(n));
    sum += f[n] * w[n];
    kept += w[n];
  }
  if (kept <= 0.0) fail(ErrorKind::Usage, "fs_integral_masked: every node is masked");
  return sum / kept;
}

}  // namespace eqlab
