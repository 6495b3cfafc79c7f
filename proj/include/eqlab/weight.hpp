#pragma once
// Continuous weights φ on P^1, h = h_FS·e^{-2φ}. On the affine chart the local
// weight is ψ = ρ + φ; radial weights are described by u(t) = ψ(e^t).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eqlab/geometry.hpp"

namespace eqlab {

struct HolderRegularity {
  double exponent = 1.0;
  double constant = 0.0;
};

/// Radial local weight u(t) sampled on a uniform grid of t = log|ζ|.
/// Outside the sample range u is continued by its asymptotes: constant on
/// the left, slope one on the right.
struct RadialWeight {
  double t_min = -12.0;
  double t_max = 12.0;
  std::vector<double> u;

  int size() const { return static_cast<int>(u.size()); }
  double step() const { return (t_max - t_min) / (size() - 1); }
  double t_at(int i) const { return t_min + i * step(); }
  double value(double t) const;

  static RadialWeight sample(const std::function<double(double)>& profile, double t_min, double t_max,
                             int samples);
};

class WeightField {
 public:
  using PhiFunction = std::function<double(const SpherePoint&)>;
  using RadialProfile = std::function<double(double)>;

  /// Any continuous φ given pointwise.
  static WeightField from_function(PhiFunction phi, std::string label,
                                   std::optional<HolderRegularity> holder = std::nullopt);
  /// Radial weight given by its local profile u(t) = ψ(e^t).
  static WeightField from_radial_profile(RadialProfile u, std::string label,
                                         std::optional<HolderRegularity> holder = std::nullopt);
  /// φ given only at the nodes of a grid of the stated shape.
  static WeightField from_node_values(GridShape shape, std::vector<double> phi, std::string label);

  /// φ at every node; throws InvalidField on non-finite values, Usage on shape mismatch.
  std::vector<double> sample(const QuadratureGrid& grid) const;
  /// φ at a point; not available for node-value weights.
  double phi(const SpherePoint& pt) const;

  bool is_radial() const { return static_cast<bool>(profile_); }
  bool is_pointwise() const { return static_cast<bool>(phi_) || is_radial(); }
  /// u(t); radial weights only.
  double profile(double t) const;
  RadialWeight to_radial_weight(double t_min, double t_max, int samples) const;

  const std::string& label() const { return label_; }
  const std::optional<HolderRegularity>& holder() const { return holder_; }

  /// φ + c (the same metric seen from the reference h_FS·e^{-2c}).
  WeightField shifted(double c) const;

 private:
  std::string label_;
  std::optional<HolderRegularity> holder_;
  PhiFunction phi_;
  RadialProfile profile_;
  std::optional<GridShape> node_shape_;
  std::vector<double> node_values_;
};

/// SHA-256 of (N_r, N_θ, φ samples): identifies a weight on a grid.
std::string weight_fingerprint(const QuadratureGrid& grid, const std::vector<double>& phi);

/// ψ_loc = φ + ρ_chart at each node: the weight in the frame of the node's own chart.
std::vector<double> local_weights(const QuadratureGrid& grid, const std::vector<double>& phi);

// Builtin radial families. All profiles are u(t) = ψ(e^t).
double fs_profile(double t);
double cap_profile(double t, double c);
double circle_profile(double t, double c);
double bump_profile(double t, double center, double radius, double height);

/// Parse "fs", "const{c}", "cap{c}", "circle{c}" or "bump{center,radius,height}".
WeightField parse_weight_descriptor(const std::string& descriptor);

/// CSV of (t, u) rows on a uniform t grid; header optional.
RadialWeight read_radial_csv(const std::string& path);
WeightField weight_from_radial_samples(const RadialWeight& w, std::string label);
/// CSV of φ node values (one per line, node order of QuadratureGrid) for a declared grid.
WeightField read_node_csv(const std::string& path, GridShape shape);

}  // namespace eqlab
