#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "eqlab/geometry.hpp"

namespace eqlab {

/// Weighted point masses on P^1.
class EmpiricalMeasure {
 public:
  struct Atom {
    SpherePoint point;
    double mass = 0.0;
  };

  void add(const SpherePoint& pt, double mass);
  const std::vector<Atom>& atoms() const { return atoms_; }
  double total_mass() const { return total_ + comp_; }

  template <class Pred>
  double mass_where(Pred&& inside) const {
    double m = 0.0;
    for (const auto& a : atoms_)
      if (inside(a.point)) m += a.mass;
    return m;
  }

 private:
  std::vector<Atom> atoms_;
  double total_ = 0.0;
  double comp_ = 0.0;
};

/// {ζ : lo ≤ log|ζ| ≤ hi} with lo/hi allowed to be ∓∞ (so disks, exteriors and P^1 itself).
struct RadialRegion {
  double log_lo = -std::numeric_limits<double>::infinity();
  double log_hi = std::numeric_limits<double>::infinity();
  std::string name;

  static RadialRegion disk(double radius, std::string name = "disk");
  static RadialRegion annulus(double r_lo, double r_hi, std::string name = "annulus");
  static RadialRegion whole_sphere() { return {-INFINITY, INFINITY, "P1"}; }

  bool contains(const SpherePoint& pt) const {
    const double t = pt.log_modulus();
    return t >= log_lo && t <= log_hi;
  }
};

}  // namespace eqlab
