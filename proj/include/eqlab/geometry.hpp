#pragma once
// The Riemann sphere P^1 = C ∪ {∞} with its two standard charts, the
// Fubini–Study volume (total mass 1 under dd^c = (i/π)∂∂̄) and a product
// quadrature rule against it.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace eqlab {

using cplx = std::complex<double>;

enum class Chart : std::uint8_t { Zero, Infinity };

inline Chart opposite(Chart c) { return c == Chart::Zero ? Chart::Infinity : Chart::Zero; }

/// A point of P^1 in one of the two charts: ζ on U_0 = {[1:ζ]}, w = 1/ζ on U_∞.
struct SpherePoint {
  Chart chart = Chart::Zero;
  cplx coord{0.0, 0.0};

  static SpherePoint zero() { return {Chart::Zero, {0.0, 0.0}}; }
  static SpherePoint infinity() { return {Chart::Infinity, {0.0, 0.0}}; }
  /// Point with affine coordinate ζ, stored in the chart where |coord| ≤ 1.
  static SpherePoint from_affine(cplx zeta);

  /// Representative with |coord| ≤ 1.
  SpherePoint canonical() const;
  /// log|ζ| of the affine coordinate; ±infinity at the poles.
  double log_modulus() const;
  bool is_pole() const { return coord == cplx{0.0, 0.0}; }
};

/// The same projective point in the other chart (w = 1/ζ). Throws Domain at coord = 0.
SpherePoint chart_transition(const SpherePoint& pt);

/// FS local potential ρ(ζ) = ½ log(1+|ζ|²) as a function of t = log|ζ|, overflow safe.
double fs_potential_of_log(double t);

/// Grid resolution; also the only thing serialized for a grid.
struct GridShape {
  int radial = 0;
  int angular = 0;
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Product rule on P^1: Gauss–Legendre in the FS-area variable s = r²/(1+r²) ∈ [0, ½]
/// of each chart times the uniform trapezoid rule in angle. Node order is
/// chart-major (Zero, Infinity), then ring (increasing chart radius), then angle.
class QuadratureGrid {
 public:
  QuadratureGrid(int radial, int angular);

  GridShape shape() const { return shape_; }
  int radial_count() const { return shape_.radial; }
  int angular_count() const { return shape_.angular; }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<SpherePoint>& nodes() const { return nodes_; }
  const std::vector<double>& fs_weights() const { return weights_; }

  std::size_t index(Chart chart, int ring, int angle) const {
    const int c = chart == Chart::Zero ? 0 : 1;
    return (static_cast<std::size_t>(c) * shape_.radial + ring) * shape_.angular + angle;
  }
  Chart chart_of(std::size_t node) const {
    return node < size() / 2 ? Chart::Zero : Chart::Infinity;
  }
  int ring_of(std::size_t node) const {
    return static_cast<int>((node / shape_.angular) % shape_.radial);
  }
  int angle_of(std::size_t node) const { return static_cast<int>(node % shape_.angular); }

  /// Chart radius of a ring (same for both charts), in (0, 1).
  double radius(int ring) const { return radii_[ring]; }
  /// FS-area coordinate of a ring, in (0, ½).
  double area_coordinate(int ring) const { return s_[ring]; }
  /// log of the chart radius, < 0.
  double log_radius(int ring) const { return log_r_[ring]; }
  /// FS mass carried by one node of a ring.
  double ring_node_weight(int ring) const { return ring_w_[ring]; }
  double angle(int k) const;

  /// log|ζ| of the affine coordinate at a node.
  double log_modulus(std::size_t node) const {
    const double lr = log_r_[ring_of(node)];
    return chart_of(node) == Chart::Zero ? lr : -lr;
  }
  /// ρ_chart(|coord|) = ½ log(1 + |coord|²) in the node's own chart.
  double chart_potential(std::size_t node) const { return chart_rho_[ring_of(node)]; }

 private:
  GridShape shape_;
  std::vector<double> s_, radii_, log_r_, ring_w_, chart_rho_;
  std::vector<SpherePoint> nodes_;
  std::vector<double> weights_;
};

/// Minimum resolution accepted by build_grid.
inline constexpr int kMinResolution = 8;
inline constexpr int kDefaultResolution = 256;

QuadratureGrid build_grid(int radial, int angular);

/// Σ f(node)·fs_weight. Throws InvalidField on NaN.
double fs_integral(const QuadratureGrid& grid, std::span<const double> f);

/// Same as fs_integral but skipping masked nodes and renormalizing by the kept mass.
double fs_integral_masked(const QuadratureGrid& grid, std::span<const double> f,
                          std::span<const std::uint8_t> masked);

}  // namespace eqlab
