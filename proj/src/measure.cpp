#include "eqlab/measure.hpp"

#include "eqlab/error.hpp"

namespace eqlab {

void EmpiricalMeasure::add(const SpherePoint& pt, double mass) {
  if (!(mass >= 0.0)) fail(ErrorKind::Usage, "EmpiricalMeasure: negative or NaN mass");
  atoms_.push_back({pt, mass});
  const double t = total_ + mass;
  comp_ += std::abs(total_) >= mass ? (total_ - t) + mass : (mass - t) + total_;
  total_ = t;
}

RadialRegion RadialRegion::disk(double radius, std::string name) {
  return {-INFINITY, std::log(radius), std::move(name)};
}

RadialRegion RadialRegion::annulus(double r_lo, double r_hi, std::string name) {
  return {std::log(r_lo), std::log(r_hi), std::move(name)};
}

}  // namespace eqlab
