#include "eqlab/randsec.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>
#include <sstream>

#include "eqlab/error.hpp"
#include "eqlab/parallel.hpp"

namespace eqlab {

namespace {

// e^700 is close to the largest finite exponential; ParetoLog log-radii are capped there.
constexpr double kMaxLogRadius = 700.0;

cplx complex_normal(Rng& rng) {
  const double x = rng.normal(), y = rng.normal();
  return {x * std::numbers::sqrt2 / 2.0, y * std::numbers::sqrt2 / 2.0};
}

Eigen::VectorXcd unit_direction(int k, bool real, Rng& rng) {
  Eigen::VectorXcd v(k);
  do {
    for (int j = 0; j < k; ++j) v[j] = real ? cplx{rng.normal(), 0.0} : complex_normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

double tail_modulus(const TailSpec& tail, Rng& rng) {
  if (tail.kind == TailSpec::Kind::UniformDisk) return tail.radius * std::sqrt(rng.uniform());
  const double r0 = tail.knee();
  if (rng.uniform() < 0.5) return std::exp(r0) * std::sqrt(rng.uniform());
  const double T = std::min(kMaxLogRadius, r0 * std::pow(rng.uniform(), -1.0 / tail.rho));
  return std::exp(T);
}

double tail_real(const TailSpec& tail, Rng& rng) {
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  if (tail.kind == TailSpec::Kind::UniformDisk) return sign * tail.radius * rng.uniform();
  const double r0 = tail.knee();
  if (rng.uniform() < 0.5) return sign * std::exp(r0) * rng.uniform();
  const double T = std::min(kMaxLogRadius, r0 * std::pow(rng.uniform(), -1.0 / tail.rho));
  return sign * std::exp(T);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct MeanCi {
  double mean = 0.0;
  double ci = 0.0;
};

// Neumaier-summed mean and a two-pass 95% half-width.
template <class Get>
MeanCi mean_ci(std::size_t n, Get get) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = get(i), t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  const double mean = (sum + comp) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (get(i) - mean) * (get(i) - mean);
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(n))};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace

TailSpec TailSpec::uniform_disk(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::Configuration, "UniformDisk radius must be > 0");
  TailSpec t;
  t.kind = Kind::UniformDisk;
  t.radius = radius;
  return t;
}

TailSpec TailSpec::pareto_log(double rho, double c) {
  if (!(rho > 1.0) || !std::isfinite(rho)) fail(ErrorKind::Configuration, "ParetoLog needs rho > 1");
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::Configuration, "ParetoLog needs c > 0");
  TailSpec t;
  t.kind = Kind::ParetoLog;
  t.rho = rho;
  t.c = c;
  return t;
}

double TailSpec::knee() const { return std::pow(c, 1.0 / rho); }

std::string TailSpec::describe() const {
  if (kind == Kind::UniformDisk) return "UniformDisk{" + fmt(radius) + "}";
  return "ParetoLog{" + fmt(rho) + "," + fmt(c) + "}";
}

MeasureSpec MeasureSpec::fubini_study(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorKind::Configuration, "FubiniStudy needs alpha > 0");
  MeasureSpec s{Family::FubiniStudy, 1.0, {}};
  s.alpha = alpha;
  return s;
}

MeasureSpec MeasureSpec::iid_complex(TailSpec tail) {
  MeasureSpec s{Family::IIDComplex, 1.0, {}};
  s.tail = tail;
  return s;
}

MeasureSpec MeasureSpec::iid_real(TailSpec tail) {
  MeasureSpec s{Family::IIDReal, 1.0, {}};
  s.tail = tail;
  return s;
}

bool MeasureSpec::is_real() const {
  return family == Family::GaussianReal || family == Family::SphereReal || family == Family::IIDReal;
}

std::string MeasureSpec::describe() const {
  switch (family) {
    case Family::GaussianComplex: return "GaussianComplex";
    case Family::GaussianReal: return "GaussianReal";
    case Family::FubiniStudy: return "FubiniStudy{" + fmt(alpha) + "}";
    case Family::SphereComplex: return "SphereComplex";
    case Family::SphereReal: return "SphereReal";
    case Family::IIDComplex: return "IIDComplex{" + tail.describe() + "}";
    case Family::IIDReal: return "IIDReal{" + tail.describe() + "}";
  }
  return "?";
}

MeasureSpec MeasureSpec::parse(const std::string& text) {
  static const std::regex plain(R"(^\s*(GaussianComplex|GaussianReal|SphereComplex|SphereReal)\s*$)");
  static const std::regex fs(R"(^\s*FubiniStudy\s*\{\s*([^}]+)\}\s*$)");
  static const std::regex iid(R"(^\s*(IIDComplex|IIDReal)\s*\{\s*(UniformDisk|ParetoLog)\s*\{([^}]*)\}\s*\}\s*$)");
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::Configuration, "measure spec '" + text + "': bad number '" + s + "'");
    }
  };
  std::smatch m;
  if (std::regex_match(text, m, plain)) {
    const std::string name = m[1];
    if (name == "GaussianComplex") return gaussian_complex();
    if (name == "GaussianReal") return gaussian_real();
    if (name == "SphereComplex") return sphere_complex();
    return sphere_real();
  }
  if (std::regex_match(text, m, fs)) return fubini_study(number(m[1]));
  if (std::regex_match(text, m, iid)) {
    std::vector<double> params;
    std::stringstream ss(m[3].str());
    std::string item;
    while (std::getline(ss, item, ',')) params.push_back(number(item));
    TailSpec tail;
    if (m[2] == "UniformDisk") {
      if (params.size() != 1) fail(ErrorKind::Configuration, "UniformDisk{radius} takes one parameter");
      tail = TailSpec::uniform_disk(params[0]);
    } else {
      if (params.size() != 2) fail(ErrorKind::Configuration, "ParetoLog{rho,c} takes two parameters");
      tail = TailSpec::pareto_log(params[0], params[1]);
    }
    return m[1] == "IIDComplex" ? iid_complex(tail) : iid_real(tail);
  }
  fail(ErrorKind::Configuration, "unknown measure spec '" + text + "'");
}

Eigen::VectorXcd sample(const MeasureSpec& spec, int k, Rng& rng) {
  if (k < 1) fail(ErrorKind::Usage, "sample: dimension must be >= 1");
  Eigen::VectorXcd a(k);
  switch (spec.family) {
    case Family::GaussianComplex:
      for (int j = 0; j < k; ++j) a[j] = complex_normal(rng);
      break;
    case Family::GaussianReal:
      for (int j = 0; j < k; ++j) a[j] = {rng.normal() * std::numbers::sqrt2 / 2.0, 0.0};
      break;
    case Family::FubiniStudy: {
      // ‖a‖² = B/(1−B) with B ~ Beta(k, α); both tails computed directly.
      const double U = rng.uniform();
      const double B = boost::math::ibeta_inv(static_cast<double>(k), spec.alpha, U);
      const double Bc = boost::math::ibeta_inv(spec.alpha, static_cast<double>(k), 1.0 - U);
      a = unit_direction(k, false, rng) * std::sqrt(B / Bc);
      break;
    }
    case Family::SphereComplex:
      a = unit_direction(k, false, rng);
      break;
    case Family::SphereReal:
      a = unit_direction(k, true, rng);
      break;
    case Family::IIDComplex:
      for (int j = 0; j < k; ++j) {
        const double r = tail_modulus(spec.tail, rng);
        a[j] = std::polar(r, 2.0 * std::numbers::pi * rng.uniform());
      }
      break;
    case Family::IIDReal:
      for (int j = 0; j < k; ++j) a[j] = {tail_real(spec.tail, rng), 0.0};
      break;
  }
  return a;
}

double fubini_study_density(double alpha, const Eigen::VectorXcd& a) {
  const double k = static_cast<double>(a.size());
  const double log_norm = std::lgamma(k + alpha) - std::lgamma(alpha) - k * std::log(std::numbers::pi);
  return std::exp(log_norm - (k + alpha) * std::log1p(a.squaredNorm()));
}

double sphere_area_constant(int m) {
  if (m < 1) fail(ErrorKind::Usage, "sphere_area_constant: m must be >= 1");
  double s = m % 2 == 1 ? 2.0 : 2.0 * std::numbers::pi;
  for (int j = m % 2 == 1 ? 1 : 2; j < m; j += 2) s *= 2.0 * std::numbers::pi / j;
  return s;
}

MomentReport moment_estimate(const MeasureSpec& spec, int k, double nu, const Eigen::VectorXcd& u,
                             std::int64_t trials, std::uint64_t seed, int threads) {
  if (u.size() != k) fail(ErrorKind::Usage, "moment_estimate: probe vector has the wrong length");
  if (std::abs(u.norm() - 1.0) > 1e-10) fail(ErrorKind::Usage, "moment_estimate: probe vector is not unit");
  if (!(nu >= 1.0)) fail(ErrorKind::Usage, "moment_estimate: nu must be >= 1");
  if (trials < 1000) fail(ErrorKind::Usage, "moment_estimate: need at least 1000 trials");
  const std::string stage = "moment/" + spec.describe() + "/" + std::to_string(k);
  std::vector<double> x(static_cast<std::size_t>(trials));
  parallel_for(x.size(), threads, [&](std::size_t t) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng(seed, stage, t, attempt);
      const cplx dot = (sample(spec, k, rng).array() * u.array()).sum();
      if (std::abs(dot) > 0.0) {
        x[t] = std::pow(std::abs(std::log(std::abs(dot))), nu);
        return;
      }
    }
  });
  const MeanCi r = mean_ci(x.size(), [&](std::size_t i) { return x[i]; });
  return {spec, k, nu, r.mean, r.ci, trials, seed};
}

ProbeSet probe_set(int k, std::uint64_t seed) {
  ProbeSet ps;
  ps.k = k;
  ps.dense.push_back(Eigen::VectorXcd::Constant(k, cplx{1.0 / std::sqrt(static_cast<double>(k)), 0.0}));
  for (int i = 0; i < 8; ++i) {
    Rng rng(seed, "probe/" + std::to_string(k), i);
    ps.dense.push_back(unit_direction(k, false, rng));
  }
  return ps;
}

ScalingTable iid_scaling_probe(const TailSpec& tail, double nu, const std::vector<int>& ks, std::int64_t trials,
                               std::uint64_t seed, bool real, int threads) {
  if (tail.kind == TailSpec::Kind::ParetoLog && !(nu < tail.rho))
    fail(ErrorKind::Usage, "iid_scaling_probe: nu must be below rho (moment may diverge)");
  if (!(nu >= 1.0)) fail(ErrorKind::Usage, "iid_scaling_probe: nu must be >= 1");
  if (ks.empty() || trials < 2) fail(ErrorKind::Usage, "iid_scaling_probe: empty k list or too few trials");
  const MeasureSpec spec = real ? MeasureSpec::iid_real(tail) : MeasureSpec::iid_complex(tail);
  ScalingTable table;
  std::vector<double> kx, est;
  for (int k : ks) {
    if (k < 1) fail(ErrorKind::Usage, "iid_scaling_probe: k must be >= 1");
    const ProbeSet probes = probe_set(k, seed);
    const std::size_t P = static_cast<std::size_t>(k) + probes.dense.size();
    std::vector<double> x(static_cast<std::size_t>(trials) * P);
    const std::string stage = "iid/" + spec.describe() + "/" + std::to_string(k);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
      for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(seed, stage, t, attempt);
        const Eigen::VectorXcd a = sample(spec, k, rng);
        double* row = &x[t * P];
        bool ok = true;
        for (int j = 0; j < k && ok; ++j) {
          ok = std::abs(a[j]) > 0.0;
          row[j] = std::pow(std::abs(std::log(std::abs(a[j]))), nu);
        }
        for (std::size_t q = 0; q < probes.dense.size() && ok; ++q) {
          const double m = std::abs(cplx((a.array() * probes.dense[q].array()).sum()));
          ok = m > 0.0;
          row[k + q] = std::pow(std::abs(std::log(m)), nu);
        }
        if (ok) return;
      }
    });
    ScalingRow row{k, -1.0, 0.0, ""};
    for (std::size_t q = 0; q < P; ++q) {
      const MeanCi r = mean_ci(static_cast<std::size_t>(trials), [&](std::size_t t) { return x[t * P + q]; });
      if (r.mean > row.estimate) {
        row.estimate = r.mean;
        row.ci_halfwidth = r.ci;
        row.worst_probe = q < static_cast<std::size_t>(k) ? "e" + std::to_string(q + 1)
                          : q == static_cast<std::size_t>(k) ? "flat"
                                                             : "haar" + std::to_string(q - k);
      }
    }
    table.rows.push_back(row);
    kx.push_back(k);
    est.push_back(row.estimate);
  }
  if (ks.size() >= 2) table.loglog_slope = loglog_slope(kx, est);
  return table;
}

std::string to_string(BHypothesis h) {
  switch (h) {
    case BHypothesis::SummableHypothesis: return "SummableHypothesis";
    case BHypothesis::CesaroOnly: return "CesaroOnly";
    case BHypothesis::Fails: return "Fails";
  }
  return "?";
}

double fitted_growth_exponent(const std::vector<std::pair<int, double>>& c_table) {
  if (c_table.size() < 4) fail(ErrorKind::Usage, "bhyp_check: need at least four (p, C_p) points");
  std::vector<double> p, c;
  for (const auto& [pp, cc] : c_table) {
    if (pp < 1 || !(cc > 0.0)) fail(ErrorKind::Usage, "bhyp_check: need p >= 1 and C_p > 0");
    p.push_back(pp);
    c.push_back(cc);
  }
  return loglog_slope(p, c);
}

BHypothesis bhyp_check(double nu, const std::vector<std::pair<int, double>>& c_table) {
  const double beta = fitted_growth_exponent(c_table);
  if (beta < nu - 1.0) return BHypothesis::SummableHypothesis;
  if (beta < nu) return BHypothesis::CesaroOnly;
  return BHypothesis::Fails;
}

}  // namespace eqlab
