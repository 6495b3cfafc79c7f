#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

#include "eqlab/error.hpp"
#include "eqlab/randsec.hpp"
#include "eqlab/rng.hpp"

using namespace eqlab;

namespace {

Eigen::VectorXcd e1(int k) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(k);
  u[0] = 1.0;
  return u;
}

Eigen::VectorXcd random_unit(int k, std::uint64_t seed) {
  Rng rng(seed, "probe-test", 0);
  Eigen::VectorXcd u(k);
  for (int j = 0; j < k; ++j) u[j] = {rng.normal(), rng.normal()};
  return u / u.norm();
}

bool within_combined_ci(const MomentReport& a, const MomentReport& b, double factor) {
  return std::abs(a.estimate - b.estimate) <= factor * std::hypot(a.ci_halfwidth, b.ci_halfwidth);
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32Block;
  CHECK(philox4x32_10(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are deterministic and distinct") {
  Rng a(42, "stage", 7), b(42, "stage", 7), c(42, "stage", 8), d(43, "stage", 7);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differ_c |= x != c.next_u64();
    differ_d |= x != d.next_u64();
  }
  CHECK(differ_c);
  CHECK(differ_d);
  CHECK(stream_id("s", 1, 0) != stream_id("s", 1, 1));
  Rng u(1, 2);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("sphere laws live on the unit sphere and real laws are real") {
  Rng rng(9, "support", 0);
  for (int k : {1, 3, 50}) {
    for (int i = 0; i < 200; ++i) {
      CHECK(std::abs(sample(MeasureSpec::sphere_complex(), k, rng).norm() - 1.0) <= 1e-12);
      CHECK(std::abs(sample(MeasureSpec::sphere_real(), k, rng).norm() - 1.0) <= 1e-12);
      for (const auto& spec : {MeasureSpec::gaussian_real(), MeasureSpec::sphere_real(),
                               MeasureSpec::iid_real(TailSpec::pareto_log(3, 1)),
                               MeasureSpec::iid_real(TailSpec::uniform_disk(2))}) {
        const auto a = sample(spec, k, rng);
        for (int j = 0; j < k; ++j) REQUIRE(a[j].imag() == 0.0);
      }
    }
  }
}

TEST_CASE("complex Gaussian moments") {
  const int n = 100000;
  Rng rng(11, "gauss", 0);
  double sr = 0, si = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const auto a = sample(MeasureSpec::gaussian_complex(), 2, rng);
    sr += a[0].real();
    si += a[0].imag();
    const double m = std::norm(a[1]);
    s2 += m;
    s4 += m * m;
  }
  // Re a_j ~ N(0, 1/2); |a_j|² ~ Exp(1) with variance 1.
  const double sigma_mean = std::sqrt(0.5 / n);
  CHECK(std::abs(sr / n) <= 4 * sigma_mean);
  CHECK(std::abs(si / n) <= 4 * sigma_mean);
  const double mean2 = s2 / n;
  const double sigma2 = std::sqrt((s4 / n - mean2 * mean2) / n);
  CHECK(std::abs(mean2 - 1.0) <= 4 * sigma2);
}

TEST_CASE("Fubini-Study law puts half its mass in the unit disk") {
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  // Radial integral of the density (1/π)(1+x)^{-2} over |a|² = x ≤ 1.
  const double oracle = gk.integrate([](double x) { return std::pow(1.0 + x, -2.0); }, 0.0, 1.0);
  const int n = 100000;
  Rng rng(13, "fs-law", 0);
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::abs(sample(MeasureSpec::fubini_study(1.0), 1, rng)[0]) <= 1.0;
  CHECK(std::abs(double(inside) / n - oracle) <= 4 * std::sqrt(0.25 / n));
}

TEST_CASE("Fubini-Study density is normalized") {
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  for (double alpha : {0.5, 1.0, 2.0}) {
    // k = 1: ∫_C f dA = ∫_0^R 2π r f(r) dr over a large ball.
    const double R = alpha < 1 ? 4e6 : 2e3;
    const double mass = gk.integrate(
        [&](double s) {
          const double r = std::expm1(s);
          Eigen::VectorXcd a(1);
          a[0] = r;
          return 2 * std::numbers::pi * r * fubini_study_density(alpha, a) * (r + 1.0);
        },
        0.0, std::log1p(R), 15, 1e-12);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("sphere area constants") {
  CHECK(sphere_area_constant(1) == 2.0);
  CHECK(sphere_area_constant(2) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(sphere_area_constant(3) == doctest::Approx(4 * std::numbers::pi).epsilon(1e-15));
  CHECK(sphere_area_constant(6) == doctest::Approx(std::pow(std::numbers::pi, 3)).epsilon(1e-14));
}

TEST_CASE("Gaussian first log moment matches quadrature") {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  auto f = [](double x) { return std::abs(std::log(x)) * std::exp(-x); };
  const double oracle = 0.5 * (ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, INFINITY));
  const auto rep = moment_estimate(MeasureSpec::gaussian_complex(), 7, 1.0, e1(7), 200000, 21);
  CHECK(std::abs(rep.estimate - oracle) <= rep.ci_halfwidth);
}

TEST_CASE("Gaussian second log moment does not depend on k") {
  std::vector<MomentReport> r;
  for (int k : {10, 100, 1000})
    r.push_back(moment_estimate(MeasureSpec::gaussian_complex(), k, 2.0, e1(k), 20000, 5));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j) CHECK(within_combined_ci(r[i], r[j], 3.0));
}

TEST_CASE("sphere moments track (log k)^2") {
  double lo = INFINITY, hi = 0.0, prev = 0.0;
  for (int k : {16, 256, 4096}) {
    const auto r = moment_estimate(MeasureSpec::sphere_complex(), k, 2.0, e1(k), 10000, 5);
    CHECK(r.estimate > prev);
    prev = r.estimate;
    const double ratio = r.estimate / std::pow(std::log(k), 2);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo <= 3.0);
}

TEST_CASE("moments are unitarily invariant for invariant laws") {
  for (const auto& spec : {MeasureSpec::gaussian_complex(), MeasureSpec::fubini_study(1.0),
                           MeasureSpec::sphere_complex()}) {
    const auto a = moment_estimate(spec, 12, 2.0, random_unit(12, 1), 20000, 8);
    const auto b = moment_estimate(spec, 12, 2.0, random_unit(12, 2), 20000, 8);
    CHECK(within_combined_ci(a, b, 3.0));
  }
}

TEST_CASE("moment estimates are deterministic in the seed and thread count") {
  const auto spec = MeasureSpec::iid_complex(TailSpec::pareto_log(4, 1));
  const auto a = moment_estimate(spec, 9, 2.0, random_unit(9, 3), 5000, 77, 1);
  const auto b = moment_estimate(spec, 9, 2.0, random_unit(9, 3), 5000, 77, 4);
  CHECK(a.estimate == b.estimate);
  CHECK(a.ci_halfwidth == b.ci_halfwidth);
  const auto c = moment_estimate(spec, 9, 2.0, random_unit(9, 3), 5000, 78, 1);
  CHECK(a.estimate != c.estimate);
}

TEST_CASE("moment estimate preconditions") {
  CHECK_THROWS_AS(moment_estimate(MeasureSpec::gaussian_complex(), 3, 2.0, 2.0 * e1(3), 5000, 1), Error);
  CHECK_THROWS_AS(moment_estimate(MeasureSpec::gaussian_complex(), 3, 0.5, e1(3), 5000, 1), Error);
  CHECK_THROWS_AS(moment_estimate(MeasureSpec::gaussian_complex(), 3, 2.0, e1(3), 10, 1), Error);
}

TEST_CASE("one-dimensional moments of an i.i.d. coefficient") {
  // |a| = R√U for the uniform disk of radius R.
  boost::math::quadrature::tanh_sinh<double> ts;
  const double R = 2.0;
  const double oracle = ts.integrate([&](double x) { return std::pow(std::log(R * std::sqrt(x)), 2); }, 0.0, 1.0);
  const auto rep = moment_estimate(MeasureSpec::iid_complex(TailSpec::uniform_disk(R)), 1, 2.0, e1(1), 100000, 4);
  CHECK(std::abs(rep.estimate - oracle) <= rep.ci_halfwidth);
}

TEST_CASE("i.i.d. scaling") {
  const auto bounded = iid_scaling_probe(TailSpec::uniform_disk(1.0), 2.0, {8, 64, 512}, 20000, 3);
  for (const auto& r : bounded.rows) {
    CHECK(r.estimate >= 0.2);
    CHECK(r.estimate <= 1.5);
  }
  const auto heavy = iid_scaling_probe(TailSpec::pareto_log(4, 1), 2.0, {8, 64, 512}, 20000, 3);
  CHECK(heavy.loglog_slope <= 2.0 / 4.0 + 0.25);
  CHECK(heavy.rows.back().estimate > heavy.rows.front().estimate);
}

TEST_CASE("condition B classification") {
  std::vector<std::pair<int, double>> flat, mid, steep;
  for (int p : {10, 20, 40, 80, 160}) {
    flat.emplace_back(p, 3.0);
    mid.emplace_back(p, std::pow(p, 1.5));
    steep.emplace_back(p, std::pow(p, 3.0));
  }
  CHECK(bhyp_check(2.0, flat) == BHypothesis::SummableHypothesis);
  CHECK(bhyp_check(2.0, mid) == BHypothesis::CesaroOnly);
  CHECK(bhyp_check(2.0, steep) == BHypothesis::Fails);
  CHECK(fitted_growth_exponent(mid) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("measure spec text round trip") {
  for (const auto& spec : {MeasureSpec::gaussian_complex(), MeasureSpec::gaussian_real(), MeasureSpec::fubini_study(0.5),
                           MeasureSpec::sphere_complex(), MeasureSpec::sphere_real(),
                           MeasureSpec::iid_complex(TailSpec::pareto_log(4, 1)),
                           MeasureSpec::iid_real(TailSpec::uniform_disk(2.5))}) {
    const auto back = MeasureSpec::parse(spec.describe());
    CHECK(back.describe() == spec.describe());
  }
  CHECK_THROWS_AS(MeasureSpec::parse("Cauchy"), Error);
  CHECK_THROWS_AS(TailSpec::pareto_log(-1, 1), Error);
}
