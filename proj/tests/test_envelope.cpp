#include <doctest.h>

#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "eqlab/envelope.hpp"
#include "eqlab/error.hpp"

using namespace eqlab;

namespace {

// Brute-force double transform over lines s·t + b with s on a 1/1000 grid.
std::vector<double> line_family_oracle(const RadialWeight& w) {
  std::vector<double> out(w.size(), -INFINITY);
  for (int k = 0; k <= 1000; ++k) {
    const double s = k / 1000.0;
    double b = INFINITY;
    for (int i = 0; i < w.size(); ++i) b = std::min(b, w.u[i] - s * w.t_at(i));
    for (int i = 0; i < w.size(); ++i) out[i] = std::max(out[i], s * w.t_at(i) + b);
  }
  return out;
}

double arg_zeta(const SpherePoint& pt) { return pt.chart == Chart::Zero ? std::arg(pt.coord) : -std::arg(pt.coord); }

// A continuous weight that is not radial: the cap plus an angular ripple supported near |ζ| = e^{-1/2}.
WeightField rippled_cap(double amplitude) {
  return WeightField::from_function(
      [amplitude](const SpherePoint& pt) {
        const double t = pt.log_modulus();
        const double bump = std::exp(-8.0 * (t + 0.5) * (t + 0.5));
        return cap_profile(t, 1.0) - fs_potential_of_log(t) + amplitude * bump * (1.0 + std::cos(3.0 * arg_zeta(pt)));
      },
      "rippled-cap");
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("radial envelope of profiles that are already envelopes") {
  const auto hinge = RadialWeight::sample([](double t) { return std::max(t, 0.0); }, -12, 12, 2401);
  const auto fs = RadialWeight::sample(fs_profile, -12, 12, 2401);
  CHECK(sup_diff(radial_envelope(hinge, 1024).u, hinge.u) <= 1e-12);
  // Between consecutive slopes the supporting lines of a strictly convex profile
  // leave a gap of order the slope spacing 1/K in the flat tails.
  for (int K : {1024, 4096}) CHECK(sup_diff(radial_envelope(fs, K).u, fs.u) <= 1.0 / K);
}

TEST_CASE("radial envelope of the cap matches the line family oracle") {
  const auto w = RadialWeight::sample([](double t) { return cap_profile(t, 1.0); }, -12, 12, 2401);
  const auto e = radial_envelope(w, 1000);
  const auto oracle = line_family_oracle(w);
  CHECK(sup_diff(e.u, oracle) <= 1e-9);
  for (int i = 0; i < w.size(); ++i) CHECK(e.u[i] == doctest::Approx(std::max(w.t_at(i), 0.0)).epsilon(1e-9));
}

TEST_CASE("radial envelope output is a convex nondecreasing minorant with slope at most one") {
  const auto w = RadialWeight::sample([](double t) { return bump_profile(t, 0.5, 1.5, 0.3); }, -12, 12, 4801);
  const auto e = radial_envelope(w, 2048);
  const double h = w.step();
  for (int i = 0; i < w.size(); ++i) CHECK(e.u[i] <= w.u[i] + 1e-14);
  for (int i = 1; i + 1 < w.size(); ++i) {
    const double s0 = (e.u[i] - e.u[i - 1]) / h, s1 = (e.u[i + 1] - e.u[i]) / h;
    CHECK(s0 >= -1e-9);
    CHECK(s0 <= 1.0 + 1e-9);
    CHECK(s1 >= s0 - 1e-9);
  }
}

TEST_CASE("radial envelope rejects inadmissible input") {
  const auto steep = RadialWeight::sample([](double t) { return t > 0 ? 2.0 * t : 0.0; }, -12, 12, 2401);
  try {
    radial_envelope(steep, 1024);
    FAIL("expected InadmissibleWeight");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InadmissibleWeight);
  }
  const auto ok = RadialWeight::sample(fs_profile, -12, 12, 241);
  CHECK_THROWS_AS(radial_envelope(ok, 32), Error);
}

TEST_CASE("FS and constant weights are their own envelopes") {
  const auto g = build_grid(64, 64);
  for (const char* d : {"fs", "const{0.7}", "const{-2}"}) {
    const auto env = psh_envelope(parse_weight_descriptor(d), g);
    REQUIRE(env.converged);
    CHECK(sup_diff(env.phi_eq, env.phi) <= 1e-8);
    for (double v : psi_h(env)) CHECK(std::abs(v) <= 1e-8);
    CHECK(std::abs(env.phi_eq_at_zero - env.phi[0]) <= 1e-8);
    CHECK(std::abs(env.phi_eq_at_infinity - env.phi[0]) <= 1e-8);
  }
}

TEST_CASE("cap envelope gap has the closed form") {
  const auto g = build_grid(256, 256);
  const auto env = psh_envelope(parse_weight_descriptor("cap{1}"), g);
  REQUIRE(env.converged);
  double worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double t = g.log_modulus(n);
    worst = std::max(worst, std::abs(env.psi_h[n] - std::min(0.0, std::max(t, -1.0))));
    worst = std::max(worst, std::abs(env.psi_eq[n] - std::max(t, 0.0)));
  }
  CHECK(worst <= 5e-3);
}

TEST_CASE("minorant and gap sign on a non-radial weight") {
  const auto g = build_grid(64, 64);
  const auto env = psh_envelope(rippled_cap(0.3), g);
  REQUIRE(env.converged);
  for (std::size_t n = 0; n < g.size(); ++n) {
    CHECK(env.phi_eq[n] <= env.phi[n]);
    CHECK(env.psi_h[n] <= env.tol);
  }
  const auto mu = equilibrium_measure(env, g);
  CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("envelope operator is monotone, offset equivariant and idempotent") {
  const auto g = build_grid(64, 64);
  const auto w1 = rippled_cap(0.0);
  const auto w2 = rippled_cap(0.4);  // w1 ≤ w2 pointwise
  const auto e1 = psh_envelope(w1, g), e2 = psh_envelope(w2, g);
  REQUIRE(e1.converged);
  REQUIRE(e2.converged);
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(e1.phi_eq[n] <= e2.phi_eq[n] + e1.tol);

  const auto e3 = psh_envelope(w2.shifted(1.25), g);
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(e3.phi_eq[n] == doctest::Approx(e2.phi_eq[n] + 1.25).epsilon(1e-8));

  // Feed V back in as a weight, with its pole values, so both solves see the same obstacle.
  std::map<std::tuple<int, double, double>, double> table;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto& pt = g.nodes()[n];
    table[{int(pt.chart), pt.coord.real(), pt.coord.imag()}] = e2.phi_eq[n];
  }
  table[{int(Chart::Zero), 0.0, 0.0}] = e2.phi_eq_at_zero;
  table[{int(Chart::Infinity), 0.0, 0.0}] = e2.phi_eq_at_infinity;
  const auto V = WeightField::from_function(
      [&table](const SpherePoint& pt) { return table.at({int(pt.chart), pt.coord.real(), pt.coord.imag()}); }, "V");
  const auto again = psh_envelope(V, g);
  REQUIRE(again.converged);
  CHECK(sup_diff(again.phi_eq, e2.phi_eq) <= e2.tol);
}

TEST_CASE("equilibrium measures") {
  const auto g = build_grid(128, 128);
  auto disk_mass = [&](const EmpiricalMeasure& mu, double lo, double hi) {
    return mu.mass_where([&](const SpherePoint& p) {
      const double t = p.log_modulus();
      return t >= lo && t <= hi;
    });
  };
  const auto fs = equilibrium_measure(psh_envelope(parse_weight_descriptor("fs"), g), g);
  CHECK(disk_mass(fs, -INFINITY, 0.0) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(fs.total_mass() == doctest::Approx(1.0).epsilon(1e-10));

  const auto cap = equilibrium_measure(psh_envelope(parse_weight_descriptor("cap{1}"), g), g);
  CHECK(disk_mass(cap, std::log(0.9), std::log(1.1)) >= 0.95);
  CHECK(cap.total_mass() == doctest::Approx(1.0).epsilon(0.02));
  for (const auto& a : cap.atoms()) CHECK(a.mass >= 0.0);
}

TEST_CASE("gap of an unconverged solve is refused") {
  EnvelopeResult env;
  env.converged = false;
  try {
    psi_h(env);
    FAIL("expected Usage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
  }
}
