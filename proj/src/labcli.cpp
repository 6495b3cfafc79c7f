#include "eqlab/labcli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "eqlab/bergman.hpp"
#include "eqlab/envelope.hpp"
#include "eqlab/error.hpp"
#include "eqlab/hash.hpp"
#include "eqlab/parallel.hpp"
#include "eqlab/randsec.hpp"
#include "eqlab/zeros.hpp"

namespace eqlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::Envelope, "Envelope"},
    {ExperimentKind::KernelConvergence, "KernelConvergence"},
    {ExperimentKind::RateFit, "RateFit"},
    {ExperimentKind::Moments, "Moments"},
    {ExperimentKind::ZeroEquidistribution, "ZeroEquidistribution"},
    {ExperimentKind::ExpectationCurrent, "ExpectationCurrent"},
};

// Radial oracle resolution in t = log|ζ|.
constexpr double kOracleTMin = -12.0;
constexpr double kOracleTMax = 12.0;
constexpr int kOracleSamples = 24 * 1024 + 1;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) fail(ErrorKind::Configuration, "config: " + key + ": not an integer list: '" + text + "'");
    out.push_back(v);
  }
  return out;
}

template <class T>
T parse_scalar(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof())
    fail(ErrorKind::Configuration, "config: " + key + ": cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(ErrorKind::Configuration, "config: " + key + ": expected true/false, got '" + text + "'");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path fresh_run_dir(const ExperimentConfig& cfg) {
  const fs::path root(cfg.out);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorKind::Configuration, "output directory '" + cfg.out + "' is not writable: " + ec.message());
  const std::string base = utc_stamp() + "-" + config_hash(cfg).substr(0, 8);
  for (int n = 0;; ++n) {
    fs::path dir = root / (n == 0 ? base : base + "-" + std::to_string(n));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) fail(ErrorKind::Configuration, "cannot create run directory '" + dir.string() + "': " + ec.message());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Configuration, "cannot write '" + path.string() + "'");
  return out;
}

/// Runs one pipeline stage, prefixing any failure with the stage name.
class StageRunner {
 public:
  explicit StageRunner(std::string& failed) : failed_(failed) {}

  template <class F>
  auto operator()(const std::string& name, F&& body) -> decltype(body()) {
    try {
      return body();
    } catch (const ConditioningError& e) {
      failed_ = name;
      throw ConditioningError("stage '" + name + "': " + e.what(), e.gram_cond());
    } catch (const Error& e) {
      failed_ = name;
      throw Error(e.kind(), "stage '" + name + "': " + e.what());
    } catch (const std::exception& e) {
      failed_ = name;
      throw Error(ErrorKind::Numeric, "stage '" + name + "': " + e.what());
    }
  }

 private:
  std::string& failed_;
};

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  StageRunner stage;
  json metrics = json::array();
  std::vector<Verdict> verdicts;
  std::string weight_hash;
};

std::string chart_name(Chart c) { return c == Chart::Zero ? "zero" : "infinity"; }

bool is_builtin(const ExperimentConfig& cfg, const std::string& name) { return cfg.weight == name; }

BergmanBasis basis_for(Context& ctx, int p, const WeightField& w, const QuadratureGrid& grid) {
  const auto cache_dir = fs::path(ctx.cfg.out) / "cache";
  const auto file = cache_dir / ("basis-" + cache_key(w, p, grid) + ".csv");
  if (ctx.cfg.use_cache) {
    if (auto cached = read_basis_csv(file.string())) return *cached;
  }
  auto basis = ctx.stage("gram p=" + std::to_string(p), [&] {
    return orthonormal_basis(gram_matrix(p, w, grid, ctx.cfg.threads));
  });
  if (ctx.cfg.use_cache) {
    fs::create_directories(cache_dir);
    // Write then rename so a concurrent reader never sees a partial file.
    const auto tmp = file.string() + ".tmp";
    write_basis_csv(basis, tmp);
    fs::rename(tmp, file);
  }
  return basis;
}

EnvelopeResult solve_envelope(Context& ctx, const WeightField& w, const QuadratureGrid& grid) {
  auto env = ctx.stage("envelope", [&] { return psh_envelope(w, grid, ctx.cfg.tol); });
  if (!env.converged)
    ctx.stage("envelope", [&]() -> int {
      fail(ErrorKind::SolverQuality, "obstacle solver did not reach tol " + num(env.tol) + " (residual " +
                                         num(env.residual) + ")");
    });
  return env;
}

void run_envelope(Context& ctx, const WeightField& w, const QuadratureGrid& grid) {
  const auto env = solve_envelope(ctx, w, grid);
  const auto mu = ctx.stage("equilibrium measure", [&] { return equilibrium_measure(env, grid); });

  std::vector<double> oracle_diff;
  double sup_diff = NAN;
  if (w.is_radial()) {
    const auto oracle = ctx.stage("radial oracle", [&] {
      return radial_envelope(w.to_radial_weight(kOracleTMin, kOracleTMax, kOracleSamples), ctx.cfg.oracle_slopes);
    });
    oracle_diff.resize(grid.size());
    sup_diff = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      oracle_diff[n] = env.psi_eq[n] - oracle.value(grid.log_modulus(n));
      sup_diff = std::max(sup_diff, std::abs(oracle_diff[n]));
    }
  }

  auto out = open_out(ctx.dir / "envelope.csv");
  out << "chart,re,im,phi,phi_eq,psi_h,contact" << (w.is_radial() ? ",oracle_diff" : "") << "\n";
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto& pt = grid.nodes()[n];
    out << chart_name(pt.chart) << ',' << num(pt.coord.real()) << ',' << num(pt.coord.imag()) << ','
        << num(env.phi[n]) << ',' << num(env.phi_eq[n]) << ',' << num(env.psi_h[n]) << ','
        << int(env.contact_mask[n]);
    if (w.is_radial()) out << ',' << num(oracle_diff[n]);
    out << "\n";
  }

  std::size_t contact = 0;
  for (auto c : env.contact_mask) contact += c;
  json m = {{"residual", env.residual},
            {"iterations", env.iterations},
            {"converged", env.converged},
            {"equilibrium_mass", mu.total_mass()},
            {"contact_fraction", double(contact) / double(grid.size())},
            {"phi_eq_at_zero", env.phi_eq_at_zero},
            {"phi_eq_at_infinity", env.phi_eq_at_infinity}};
  if (w.is_radial()) m["sup_diff_vs_radial_oracle"] = sup_diff;
  ctx.metrics.push_back(m);

  auto summary = open_out(ctx.dir / "summary.csv");
  summary << "residual,iterations,equilibrium_mass,sup_diff_vs_radial_oracle\n"
          << num(env.residual) << ',' << env.iterations << ',' << num(mu.total_mass()) << ',' << num(sup_diff)
          << "\n";

  if (w.is_radial())
    ctx.verdicts.push_back({"C2 envelope oracle agreement", sup_diff <= 5e-3, sup_diff, 5e-3,
                            "sup |grid envelope - radial oracle| over nodes"});
}

struct KernelRow {
  int p = 0;
  double l1 = 0.0;
  double gram_cond = 1.0;
  double fs_rel_error = NAN;
};

std::vector<KernelRow> run_kernels(Context& ctx, const WeightField& w, const QuadratureGrid& grid) {
  const auto env = solve_envelope(ctx, w, grid);
  std::vector<KernelRow> rows;
  for (int p : ctx.cfg.degrees) {
    const auto basis = basis_for(ctx, p, w, grid);
    const auto kf = ctx.stage("kernel p=" + std::to_string(p),
                              [&] { return bergman_kernel(basis, w, grid, ctx.cfg.threads); });
    KernelRow row{p, ctx.stage("kernel error p=" + std::to_string(p), [&] { return kernel_vs_envelope(kf, env, grid); }),
                  basis.gram_cond};
    if (is_builtin(ctx.cfg, "fs")) {
      row.fs_rel_error = 0.0;
      for (double v : kf.values) row.fs_rel_error = std::max(row.fs_rel_error, std::abs(v / (p + 1) - 1.0));
    }
    auto out = open_out(ctx.dir / ("kernel_p" + std::to_string(p) + ".csv"));
    out << "chart,re,im,P_p,half_log_Pp_over_p,psi_h,diff\n";
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const auto& pt = grid.nodes()[n];
      const double half = kf.log_half_p[n];
      out << chart_name(pt.chart) << ',' << num(pt.coord.real()) << ',' << num(pt.coord.imag()) << ','
          << num(kf.values[n]) << ',' << num(half) << ',' << num(env.psi_h[n]) << ',' << num(half - env.psi_h[n])
          << "\n";
    }
    json m = {{"p", p}, {"l1_error", row.l1}, {"gram_cond", row.gram_cond}};
    if (!std::isnan(row.fs_rel_error)) m["fs_kernel_rel_error"] = row.fs_rel_error;
    ctx.metrics.push_back(m);
    rows.push_back(row);
  }

  auto summary = open_out(ctx.dir / "convergence.csv");
  summary << "p,l1_error,gram_cond,error_p_over_log_p\n";
  for (const auto& r : rows)
    summary << r.p << ',' << num(r.l1) << ',' << num(r.gram_cond) << ','
            << (r.p > 1 ? num(r.l1 * r.p / std::log(double(r.p))) : std::string("nan")) << "\n";

  std::vector<double> errs;
  for (const auto& r : rows) errs.push_back(r.l1);
  if (rows.size() >= 2)
    ctx.verdicts.push_back({"C3 L1 convergence: strictly decreasing", strictly_decreasing(errs),
                            double(errs.back()), 0.0, "L1 errors in the listed degree order"});
  if (rows.back().p >= 160)
    ctx.verdicts.push_back({"C3 L1 convergence: final error", errs.back() <= 0.02, errs.back(), 0.02,
                            "L1 error at the largest degree"});
  if (is_builtin(ctx.cfg, "fs")) {
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.fs_rel_error);
    ctx.verdicts.push_back({"C1 FS baseline kernel", worst <= 1e-6, worst, 1e-6, "sup |P_p/(p+1) - 1|"});
  }
  return rows;
}

void run_rate_fit(Context& ctx, const WeightField& w, const QuadratureGrid& grid) {
  const auto rows = run_kernels(ctx, w, grid);
  std::vector<std::pair<int, double>> pts;
  for (const auto& r : rows) pts.emplace_back(r.p, r.l1);
  const auto fit = ctx.stage("rate fit", [&] { return rate_fit(pts); });
  const double spread = fit.c_hat / fit.c_min;
  ctx.metrics.push_back({{"c_hat", fit.c_hat}, {"c_min", fit.c_min}, {"spread", spread}});
  ctx.verdicts.push_back({"C4 Holder rate: constant spread", spread <= 4.0, spread, 4.0,
                          "max/min of error*p/log p over the degrees"});
}

void run_moments(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto spec = MeasureSpec::parse(cfg.measure);
  std::vector<MomentReport> rows;
  double slope = NAN;
  const bool iid = spec.family == Family::IIDComplex || spec.family == Family::IIDReal;
  if (iid) {
    const auto table = ctx.stage("moments", [&] {
      return iid_scaling_probe(spec.tail, cfg.nu, cfg.ks, cfg.trials, cfg.seed, spec.is_real(), cfg.threads);
    });
    slope = table.loglog_slope;
    for (const auto& r : table.rows) {
      MomentReport m;
      m.spec = spec;
      m.k = r.k;
      m.nu = cfg.nu;
      m.estimate = r.estimate;
      m.ci_halfwidth = r.ci_halfwidth;
      m.trials = cfg.trials;
      m.seed = cfg.seed;
      rows.push_back(m);
    }
  } else {
    for (int k : cfg.ks) {
      // The non-i.i.d. laws are invariant under the relevant unitary group, so one probe suffices.
      Eigen::VectorXcd u = Eigen::VectorXcd::Constant(k, 1.0 / std::sqrt(double(k)));
      rows.push_back(ctx.stage("moments k=" + std::to_string(k), [&] {
        return moment_estimate(spec, k, cfg.nu, u, cfg.trials, cfg.seed, cfg.threads);
      }));
    }
  }

  auto out = open_out(ctx.dir / "moments.csv");
  out << "measure,k,nu,estimate,ci_halfwidth,trials,seed\n";
  for (const auto& r : rows) {
    out << spec.describe() << ',' << r.k << ',' << num(r.nu) << ',' << num(r.estimate) << ','
        << num(r.ci_halfwidth) << ',' << r.trials << ',' << r.seed << "\n";
    ctx.metrics.push_back({{"k", r.k}, {"estimate", r.estimate}, {"ci_halfwidth", r.ci_halfwidth}});
  }

  switch (spec.family) {
    case Family::GaussianComplex:
    case Family::GaussianReal:
    case Family::FubiniStudy: {
      double worst = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
          const double ci = std::hypot(rows[i].ci_halfwidth, rows[j].ci_halfwidth);
          worst = std::max(worst, std::abs(rows[i].estimate - rows[j].estimate) / ci);
        }
      ctx.verdicts.push_back({"C7 constant-in-k", worst <= 3.0, worst, 3.0,
                              "max pairwise |difference| in units of the combined 95% CI"});
      break;
    }
    case Family::SphereComplex:
    case Family::SphereReal: {
      double lo = INFINITY, hi = 0.0;
      for (const auto& r : rows) {
        const double ratio = r.estimate / std::pow(std::log(double(r.k)), cfg.nu);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      ctx.verdicts.push_back({"C7 (log k)^nu band", hi / lo <= 3.0, hi / lo, 3.0,
                              "max/min of estimate/(log k)^nu"});
      break;
    }
    default:
      if (spec.tail.kind == TailSpec::Kind::ParetoLog) {
        const double bound = cfg.nu / spec.tail.rho + 0.25;
        ctx.metrics.push_back({{"loglog_slope", slope}});
        ctx.verdicts.push_back({"C7 ParetoLog slope", slope <= bound, slope, bound,
                                "least-squares slope of log estimate against log k"});
      }
  }
}

void run_zero_equidistribution(Context& ctx, const WeightField& w, const QuadratureGrid& grid) {
  const auto& cfg = ctx.cfg;
  const auto spec = MeasureSpec::parse(cfg.measure);
  const auto env = solve_envelope(ctx, w, grid);
  const auto eq = ctx.stage("equilibrium measure", [&] { return equilibrium_measure(env, grid); });
  const auto disk = RadialRegion::disk(1.0, "unit disk");

  struct Trial {
    ZeroSet roots;
    double l1 = 0.0;
    double weak = 0.0;
    double disk_mass = 0.0;
    double masked = 0.0;
    int attempts = 0;
  };
  std::vector<double> medians;
  auto roots_csv = open_out(ctx.dir / "roots.csv");
  roots_csv << "p,trial,chart,re,im,multiplicity\n";
  auto summary = open_out(ctx.dir / "summary.csv");
  summary << "p,trial,attempts,l1_to_psi_h,weak_stat,unit_disk_mass,masked_fraction\n";

  for (int p : cfg.degrees) {
    const auto basis = basis_for(ctx, p, w, grid);
    std::vector<Trial> trials(cfg.trials);
    ctx.stage("zeros p=" + std::to_string(p), [&] {
      parallel_for(trials.size(), cfg.threads, [&](std::size_t t) {
        for (std::uint64_t attempt = 0;; ++attempt) {
          const auto s = sample_section(basis, spec, cfg.seed, t, attempt);
          try {
            auto z = find_roots(s);
            const auto field = lognorm_field(s, z, w, grid);
            const auto em = empirical_zero_measure(z, p);
            trials[t] = {std::move(z), lognorm_l1(field, env.psi_h, grid), weak_convergence_stat(em, eq, grid),
                         em.mass_where([&](const SpherePoint& pt) { return disk.contains(pt); }),
                         field.masked_fraction, int(attempt) + 1};
            return;
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::IllConditionedSample || attempt >= 16) throw;
          }
        }
      });
      return 0;
    });

    std::vector<double> l1s, weaks, disks;
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const auto& tr = trials[t];
      for (const auto& r : tr.roots.finite_roots) {
        const auto pt = SpherePoint::from_affine(r);
        roots_csv << p << ',' << t << ',' << chart_name(pt.chart) << ',' << num(pt.coord.real()) << ','
                  << num(pt.coord.imag()) << ",1\n";
      }
      if (tr.roots.mult_at_infinity > 0)
        roots_csv << p << ',' << t << ",infinity,0,0," << tr.roots.mult_at_infinity << "\n";
      summary << p << ',' << t << ',' << tr.attempts << ',' << num(tr.l1) << ',' << num(tr.weak) << ','
              << num(tr.disk_mass) << ',' << num(tr.masked) << "\n";
      l1s.push_back(tr.l1);
      weaks.push_back(tr.weak);
      disks.push_back(tr.disk_mass);
    }
    medians.push_back(median(l1s));
    ctx.metrics.push_back({{"p", p},
                           {"median_l1_to_psi_h", medians.back()},
                           {"median_weak_stat", median(weaks)},
                           {"median_unit_disk_mass", median(disks)},
                           {"gram_cond", basis.gram_cond}});
  }
  if (medians.size() >= 2)
    ctx.verdicts.push_back({"C6 potential convergence: median L1 decreasing", strictly_decreasing(medians),
                            medians.back(), medians.front(), "median L1 distance to Psi_h per degree"});
}

void run_expectation(Context& ctx, const WeightField& w, const QuadratureGrid& grid) {
  const auto& cfg = ctx.cfg;
  const auto spec = MeasureSpec::parse(cfg.measure);
  const std::vector<RadialRegion> regions = {RadialRegion::disk(1.0, "unit disk"),
                                             RadialRegion::annulus(0.8, 1.25, "annulus 0.8-1.25"),
                                             RadialRegion::whole_sphere()};
  auto out = open_out(ctx.dir / "expectation.csv");
  out << "p,region,mean,ci_halfwidth,trials,discarded\n";
  for (int p : cfg.degrees) {
    const auto basis = basis_for(ctx, p, w, grid);
    const auto rep = ctx.stage("expectation p=" + std::to_string(p), [&] {
      return expectation_current(basis, spec, cfg.trials, regions, cfg.seed, cfg.threads);
    });
    json m = {{"p", p}, {"discarded", rep.discarded}};
    for (const auto& r : rep.regions) {
      out << p << ',' << r.region << ',' << num(r.mean) << ',' << num(r.ci_halfwidth) << ',' << rep.trials << ','
          << rep.discarded << "\n";
      m[r.region] = r.mean;
    }
    ctx.metrics.push_back(m);
    const double total = rep.regions[2].mean;
    ctx.verdicts.push_back({"C8 total zero mass p=" + std::to_string(p), std::abs(total - 1.0) <= 1e-12,
                            total, 1.0, "mean normalized zero mass on P1"});
    if (is_builtin(cfg, "fs")) {
      const double dev = std::abs(rep.regions[0].mean - 0.5);
      ctx.verdicts.push_back({"C5 FS unit-disk zero mass p=" + std::to_string(p), dev <= 0.02,
                              rep.regions[0].mean, 0.5, "|mean - 0.5| <= 0.02"});
    }
    if (is_builtin(cfg, "cap{1}"))
      ctx.verdicts.push_back({"C5 cap annulus zero mass p=" + std::to_string(p), rep.regions[1].mean >= 0.9,
                              rep.regions[1].mean, 0.9, "mean annulus mass >= 0.9"});
  }
}

json verdict_json(const Verdict& v) {
  return {{"criterion", v.criterion},
          {"pass", v.pass},
          {"measured", v.measured},
          {"threshold", v.threshold},
          {"detail", v.detail}};
}

void write_report(const RunReport& rep) {
  json j;
  j["tool_version"] = rep.tool_version;
  j["kind"] = to_string(rep.config.kind);
  j["config_ini"] = to_ini(rep.config);
  j["config_hash"] = config_hash(rep.config);
  j["weight_hash"] = rep.weight_hash;
  j["run_dir"] = rep.run_dir;
  j["complete"] = rep.complete;
  j["failed_stage"] = rep.failed_stage;
  j["wall_clock_seconds"] = rep.wall_clock_seconds;
  j["metrics"] = json::parse(rep.json_metrics.empty() ? "[]" : rep.json_metrics);
  j["verdicts"] = json::array();
  for (const auto& v : rep.verdicts) j["verdicts"].push_back(verdict_json(v));
  auto out = open_out(fs::path(rep.run_dir) / "report.json");
  out << j.dump(2) << "\n";
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  fail(ErrorKind::Configuration, "unknown experiment kind '" + name + "'");
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[run]\n"
    << "kind = " << to_string(c.kind) << "\n"
    << "degrees = " << join_ints(c.degrees) << "\n"
    << "trials = " << c.trials << "\n"
    << "seed = " << c.seed << "\n"
    << "threads = " << c.threads << "\n"
    << "out = " << c.out << "\n"
    << "tol = " << num(c.tol) << "\n"
    << "oracle_slopes = " << c.oracle_slopes << "\n"
    << "degree_cap = " << c.degree_cap << "\n"
    << "use_cache = " << (c.use_cache ? "true" : "false") << "\n"
    << "\n[weight]\n"
    << "descriptor = " << c.weight << "\n"
    << "\n[grid]\n"
    << "radial = " << c.grid.radial << "\n"
    << "angular = " << c.grid.angular << "\n"
    << "\n[measure]\n"
    << "spec = " << c.measure << "\n"
    << "ks = " << join_ints(c.ks) << "\n"
    << "nu = " << num(c.nu) << "\n";
  return o.str();
}

ExperimentConfig parse_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Configuration, std::string("config: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"run", {"kind", "degrees", "trials", "seed", "threads", "out", "tol", "oracle_slopes", "degree_cap", "use_cache"}},
      {"weight", {"descriptor"}},
      {"grid", {"radial", "angular"}},
      {"measure", {"spec", "ks", "nu"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) fail(ErrorKind::Configuration, "config: unknown section [" + section + "]");
    if (body.empty()) fail(ErrorKind::Configuration, "config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) fail(ErrorKind::Configuration, "config: unknown key '" + section + "." + key + "'");
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) { return tree.get_optional<std::string>(pt::ptree::path_type(path, '.')); };
  if (auto v = get("run.kind")) c.kind = parse_experiment_kind(*v);
  if (auto v = get("run.degrees")) c.degrees = parse_int_list(*v, "run.degrees");
  if (auto v = get("run.trials")) c.trials = parse_scalar<int>(*v, "run.trials");
  if (auto v = get("run.seed")) c.seed = parse_scalar<std::uint64_t>(*v, "run.seed");
  if (auto v = get("run.threads")) c.threads = parse_scalar<int>(*v, "run.threads");
  if (auto v = get("run.out")) c.out = *v;
  if (auto v = get("run.tol")) c.tol = parse_scalar<double>(*v, "run.tol");
  if (auto v = get("run.oracle_slopes")) c.oracle_slopes = parse_scalar<int>(*v, "run.oracle_slopes");
  if (auto v = get("run.degree_cap")) c.degree_cap = parse_scalar<int>(*v, "run.degree_cap");
  if (auto v = get("run.use_cache")) c.use_cache = parse_bool(*v, "run.use_cache");
  if (auto v = get("weight.descriptor")) c.weight = *v;
  if (auto v = get("grid.radial")) c.grid.radial = parse_scalar<int>(*v, "grid.radial");
  if (auto v = get("grid.angular")) c.grid.angular = parse_scalar<int>(*v, "grid.angular");
  if (auto v = get("measure.spec")) c.measure = *v;
  if (auto v = get("measure.ks")) c.ks = parse_int_list(*v, "measure.ks");
  if (auto v = get("measure.nu")) c.nu = parse_scalar<double>(*v, "measure.nu");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Configuration, "cannot read config '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_ini(s.str());
}

void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& what) { fail(ErrorKind::Configuration, "config: " + what); };
  if (c.threads < 1) bad("run.threads must be >= 1");
  if (c.out.empty()) bad("run.out must not be empty");
  if (c.degree_cap < 1) bad("run.degree_cap must be >= 1");
  if (c.degree_cap > kDefaultDegreeCap)
    std::cerr << "warning: run.degree_cap " << c.degree_cap << " exceeds " << kDefaultDegreeCap
              << "; Gram conditioning may fail\n";

  const bool uses_weight = c.kind != ExperimentKind::Moments;
  if (uses_weight) {
    if (c.grid.radial < 8 || c.grid.angular < 8) bad("grid resolution must be at least 8x8");
    if (!(c.tol > 0.0)) bad("run.tol must be positive");
    if (c.oracle_slopes < 64) bad("run.oracle_slopes must be >= 64");
    // Parse the descriptor now so a typo fails before any computation.
    (void)load_weight(c);
  }

  const bool uses_degrees = c.kind != ExperimentKind::Moments && c.kind != ExperimentKind::Envelope;
  if (uses_degrees) {
    if (c.degrees.empty()) bad("run.degrees must list at least one degree");
    for (int p : c.degrees) {
      if (p < 1) bad("degrees must be >= 1");
      if (p > c.degree_cap)
        bad("degree " + std::to_string(p) + " exceeds run.degree_cap " + std::to_string(c.degree_cap));
      if (c.grid.angular < min_angular_for_degree(p))
        bad("grid.angular " + std::to_string(c.grid.angular) + " < 4p+8 = " +
            std::to_string(min_angular_for_degree(p)) + " for p=" + std::to_string(p));
    }
  }
  if (c.kind == ExperimentKind::RateFit) {
    int usable = 0;
    for (int p : c.degrees) usable += p >= 5;
    if (usable < 4) bad("RateFit needs at least 4 degrees >= 5");
  }
  if (c.kind == ExperimentKind::Moments || c.kind == ExperimentKind::ZeroEquidistribution ||
      c.kind == ExperimentKind::ExpectationCurrent) {
    try {
      (void)MeasureSpec::parse(c.measure);
    } catch (const Error& e) {
      bad(std::string("measure.spec: ") + e.what());
    }
  }
  if (c.kind == ExperimentKind::Moments) {
    if (c.ks.empty()) bad("measure.ks must list at least one dimension");
    for (int k : c.ks)
      if (k < 1) bad("measure.ks entries must be >= 1");
    if (!(c.nu >= 1.0)) bad("measure.nu must be >= 1");
    if (c.trials < 1000) bad("Moments needs run.trials >= 1000");
  }
  if (c.kind == ExperimentKind::ZeroEquidistribution && c.trials < 1) bad("run.trials must be >= 1");
  if (c.kind == ExperimentKind::ExpectationCurrent && c.trials < 100)
    bad("ExpectationCurrent needs run.trials >= 100");
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(to_ini(cfg)); }

WeightField load_weight(const ExperimentConfig& cfg) {
  const std::string radial_prefix = "radial-csv:";
  const std::string node_prefix = "node-csv:";
  if (cfg.weight.rfind(radial_prefix, 0) == 0) {
    const auto path = cfg.weight.substr(radial_prefix.size());
    return weight_from_radial_samples(read_radial_csv(path), cfg.weight);
  }
  if (cfg.weight.rfind(node_prefix, 0) == 0) return read_node_csv(cfg.weight.substr(node_prefix.size()), cfg.grid);
  return parse_weight_descriptor(cfg.weight);
}

std::string cache_key(const WeightField& weight, int p, const QuadratureGrid& grid) {
  const auto phi = weight.sample(grid);
  Sha256 h;
  h.update(std::string_view("eqlab-basis-v1"));
  h.update(std::int64_t{p});
  h.update(std::int64_t{grid.radial_count()});
  h.update(std::int64_t{grid.angular_count()});
  h.update(std::span<const double>(phi));
  return h.hex();
}

bool RunReport::all_pass() const {
  return complete && std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

RunReport run(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();

  RunReport rep;
  rep.config = cfg;
  rep.tool_version = kToolVersion;
  const auto dir = fresh_run_dir(cfg);
  rep.run_dir = dir.string();
  open_out(dir / "config.ini") << to_ini(cfg);

  Context ctx{cfg, dir, StageRunner(rep.failed_stage), json::array(), {}, {}};
  auto finish = [&] {
    rep.json_metrics = ctx.metrics.dump();
    rep.verdicts = ctx.verdicts;
    rep.weight_hash = ctx.weight_hash;
    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(rep);
  };

  try {
    if (cfg.kind == ExperimentKind::Moments) {
      run_moments(ctx);
    } else {
      const auto w = ctx.stage("weight", [&] { return load_weight(cfg); });
      const auto grid = ctx.stage("grid", [&] { return build_grid(cfg.grid.radial, cfg.grid.angular); });
      ctx.weight_hash = ctx.stage("weight", [&] { return weight_fingerprint(grid, w.sample(grid)); });
      switch (cfg.kind) {
        case ExperimentKind::Envelope: run_envelope(ctx, w, grid); break;
        case ExperimentKind::KernelConvergence: run_kernels(ctx, w, grid); break;
        case ExperimentKind::RateFit: run_rate_fit(ctx, w, grid); break;
        case ExperimentKind::ZeroEquidistribution: run_zero_equidistribution(ctx, w, grid); break;
        case ExperimentKind::ExpectationCurrent: run_expectation(ctx, w, grid); break;
        case ExperimentKind::Moments: break;
      }
    }
  } catch (...) {
    rep.complete = false;
    if (rep.failed_stage.empty()) rep.failed_stage = "output";
    finish();
    throw;
  }
  rep.complete = true;
  finish();
  return rep;
}

RunReport read_report(const std::string& run_dir) {
  const auto path = fs::path(run_dir) / "report.json";
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Configuration, "no report.json in '" + run_dir + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Configuration, "malformed report.json: " + std::string(e.what()));
  }
  RunReport rep;
  rep.config = parse_ini(j.at("config_ini").get<std::string>());
  rep.run_dir = j.at("run_dir").get<std::string>();
  rep.weight_hash = j.at("weight_hash").get<std::string>();
  rep.tool_version = j.at("tool_version").get<std::string>();
  rep.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  rep.complete = j.at("complete").get<bool>();
  rep.failed_stage = j.at("failed_stage").get<std::string>();
  rep.json_metrics = j.at("metrics").dump();
  for (const auto& v : j.at("verdicts")) {
    Verdict out;
    out.criterion = v.at("criterion").get<std::string>();
    out.pass = v.at("pass").get<bool>();
    // NaN is serialized as null.
    out.measured = v.at("measured").is_null() ? NAN : v.at("measured").get<double>();
    out.threshold = v.at("threshold").is_null() ? NAN : v.at("threshold").get<double>();
    out.detail = v.at("detail").get<std::string>();
    rep.verdicts.push_back(out);
  }
  return rep;
}

int exit_code_for(const RunReport& report) { return report.all_pass() ? 0 : 1; }

int exit_code_for_error(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::Configuration:
      case ErrorKind::Usage:
      case ErrorKind::InadmissibleWeight:
      case ErrorKind::InvalidField:
        return 2;
      default:
        return 3;
    }
  }
  return 3;
}

}  // namespace eqlab
