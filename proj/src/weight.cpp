#include "eqlab/weight.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "eqlab/error.hpp"
#include "eqlab/hash.hpp"

namespace eqlab {

double RadialWeight::value(double t) const {
  if (t <= t_min) return u.front();
  if (t >= t_max) return u.back() + (t - t_max);
  const double x = (t - t_min) / step();
  const int i = std::min(static_cast<int>(x), size() - 2);
  const double f = x - i;
  return (1.0 - f) * u[i] + f * u[i + 1];
}

RadialWeight RadialWeight::sample(const std::function<double(double)>& profile, double t_min,
                                  double t_max, int samples) {
  if (samples < 2 || !(t_max > t_min)) fail(ErrorKind::Configuration, "RadialWeight: bad sample grid");
  RadialWeight w{t_min, t_max, std::vector<double>(samples)};
  for (int i = 0; i < samples; ++i) w.u[i] = profile(w.t_at(i));
  return w;
}

WeightField WeightField::from_function(PhiFunction phi, std::string label,
                                       std::optional<HolderRegularity> holder) {
  WeightField w;
  w.label_ = std::move(label);
  w.holder_ = holder;
  w.phi_ = std::move(phi);
  return w;
}

WeightField WeightField::from_radial_profile(RadialProfile u, std::string label,
                                             std::optional<HolderRegularity> holder) {
  WeightField w;
  w.label_ = std::move(label);
  w.holder_ = holder;
  w.profile_ = std::move(u);
  return w;
}

WeightField WeightField::from_node_values(GridShape shape, std::vector<double> phi, std::string label) {
  if (phi.size() != 2u * shape.radial * shape.angular)
    fail(ErrorKind::Configuration, "node-value weight: " + std::to_string(phi.size()) +
                                       " values for a " + std::to_string(shape.radial) + "x" +
                                       std::to_string(shape.angular) + " grid");
  WeightField w;
  w.label_ = std::move(label);
  w.node_shape_ = shape;
  w.node_values_ = std::move(phi);
  return w;
}

double WeightField::profile(double t) const {
  if (!profile_) fail(ErrorKind::Usage, "weight '" + label_ + "' is not radial");
  return profile_(t);
}

double WeightField::phi(const SpherePoint& pt) const {
  if (profile_) {
    const double t = pt.log_modulus();
    if (std::isinf(t)) {
      // continuous extension to the poles
      return t < 0 ? profile_(-700.0) : profile_(700.0) - 700.0;
    }
    return profile_(t) - fs_potential_of_log(t);
  }
  if (phi_) return phi_(pt);
  fail(ErrorKind::Usage, "weight '" + label_ + "' is only known at grid nodes");
}

std::vector<double> WeightField::sample(const QuadratureGrid& grid) const {
  std::vector<double> out;
  if (node_shape_) {
    if (!(*node_shape_ == grid.shape()))
      fail(ErrorKind::Usage, "weight '" + label_ + "' was given on a different grid");
    out = node_values_;
  } else {
    out.resize(grid.size());
    const auto& nodes = grid.nodes();
    for (std::size_t n = 0; n < nodes.size(); ++n) out[n] = phi(nodes[n]);
  }
  for (std::size_t n = 0; n < out.size(); ++n)
    if (!std::isfinite(out[n]))
      fail(ErrorKind::InvalidField, "weight '" + label_ + "' is not finite at node " + std::to_string(n));
  return out;
}

RadialWeight WeightField::to_radial_weight(double t_min, double t_max, int samples) const {
  if (!profile_) fail(ErrorKind::Usage, "weight '" + label_ + "' is not radial");
  return RadialWeight::sample(profile_, t_min, t_max, samples);
}

WeightField WeightField::shifted(double c) const {
  WeightField w = *this;
  w.label_ = label_ + "+(" + std::to_string(c) + ")";
  if (profile_) {
    auto u = profile_;
    w.profile_ = [u, c](double t) { return u(t) + c; };
  } else if (phi_) {
    auto f = phi_;
    w.phi_ = [f, c](const SpherePoint& p) { return f(p) + c; };
  } else {
    for (double& v : w.node_values_) v += c;
  }
  return w;
}

std::string weight_fingerprint(const QuadratureGrid& grid, const std::vector<double>& phi) {
  Sha256 h;
  h.update(std::int64_t{grid.radial_count()}).update(std::int64_t{grid.angular_count()});
  return h.update(std::span<const double>(phi)).hex();
}

std::vector<double> local_weights(const QuadratureGrid& grid, const std::vector<double>& phi) {
  std::vector<double> psi(phi.size());
  for (std::size_t n = 0; n < phi.size(); ++n) psi[n] = phi[n] + grid.chart_potential(n);
  return psi;
}

double fs_profile(double t) { return fs_potential_of_log(t); }

double cap_profile(double t, double c) { return t < 0.0 ? std::min(-t, c) : t; }

double circle_profile(double t, double c) { return std::max(t, c); }

double bump_profile(double t, double center, double radius, double height) {
  const double x = (t - center) / radius;
  const double bump = std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
  return fs_potential_of_log(t) + height * bump;
}

namespace {

std::vector<double> parse_params(const std::string& body) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::Configuration, "weight descriptor: bad number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

WeightField parse_weight_descriptor(const std::string& descriptor) {
  static const std::regex pattern(R"(^\s*([a-z]+)\s*(?:\{([^}]*)\})?\s*$)");
  std::smatch m;
  if (!std::regex_match(descriptor, m, pattern))
    fail(ErrorKind::Configuration, "weight descriptor: cannot parse '" + descriptor + "'");
  const std::string name = m[1];
  const std::vector<double> params = m[2].matched ? parse_params(m[2]) : std::vector<double>{};
  auto expect = [&](std::size_t n) {
    if (params.size() != n)
      fail(ErrorKind::Configuration, "weight descriptor '" + descriptor + "' expects " +
                                         std::to_string(n) + " parameter(s)");
  };
  const HolderRegularity lipschitz{1.0, 1.0};
  if (name == "fs") {
    expect(0);
    return WeightField::from_radial_profile(fs_profile, "fs", lipschitz);
  }
  if (name == "const") {
    expect(1);
    const double c = params[0];
    return WeightField::from_radial_profile([c](double t) { return fs_profile(t) + c; }, descriptor, lipschitz);
  }
  if (name == "cap") {
    expect(1);
    const double c = params[0];
    if (!(c > 0.0)) fail(ErrorKind::Configuration, "cap{c} needs c > 0");
    return WeightField::from_radial_profile([c](double t) { return cap_profile(t, c); }, descriptor, lipschitz);
  }
  if (name == "circle") {
    expect(1);
    const double c = params[0];
    return WeightField::from_radial_profile([c](double t) { return circle_profile(t, c); }, descriptor,
                                            lipschitz);
  }
  if (name == "bump") {
    expect(3);
    const double center = params[0], radius = params[1], height = params[2];
    if (!(radius > 0.0)) fail(ErrorKind::Configuration, "bump radius must be positive");
    return WeightField::from_radial_profile(
        [=](double t) { return bump_profile(t, center, radius, height); }, descriptor, lipschitz);
  }
  fail(ErrorKind::Configuration, "weight descriptor: unknown family '" + name + "'");
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Configuration, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      fail(ErrorKind::Configuration, path + ": non-numeric row '" + line + "'");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

RadialWeight read_radial_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path);
  if (rows.size() < 2) fail(ErrorKind::Configuration, path + ": need at least two (t, u) rows");
  RadialWeight w;
  w.t_min = rows.front().at(0);
  w.t_max = rows.back().at(0);
  const double h = (w.t_max - w.t_min) / (rows.size() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() < 2) fail(ErrorKind::Configuration, path + ": rows need two columns");
    if (std::abs(rows[i][0] - (w.t_min + i * h)) > 1e-9 * std::max(1.0, std::abs(rows[i][0])))
      fail(ErrorKind::Configuration, path + ": t samples must be uniform");
    w.u.push_back(rows[i][1]);
  }
  return w;
}

WeightField weight_from_radial_samples(const RadialWeight& w, std::string label) {
  return WeightField::from_radial_profile([w](double t) { return w.value(t); }, std::move(label));
}

WeightField read_node_csv(const std::string& path, GridShape shape) {
  const auto rows = read_numeric_csv(path);
  std::vector<double> phi;
  phi.reserve(rows.size());
  for (const auto& r : rows) phi.push_back(r.back());
  return WeightField::from_node_values(shape, std::move(phi), path);
}

}  // namespace eqlab
