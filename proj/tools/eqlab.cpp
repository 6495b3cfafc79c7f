// Command-line front end: each subcommand builds an ExperimentConfig and runs it.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "eqlab/bergman.hpp"
#include "eqlab/error.hpp"
#include "eqlab/labcli.hpp"

namespace {

using eqlab::ExperimentConfig;
using eqlab::ExperimentKind;

eqlab::GridShape parse_grid(const std::string& text) {
  static const std::regex re(R"(\s*(\d+)\s*[xX]\s*(\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    eqlab::fail(eqlab::ErrorKind::Configuration, "--grid expects NrxNt, got '" + text + "'");
  return {std::stoi(m[1]), std::stoi(m[2])};
}

std::vector<int> parse_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  static const std::regex item(R"(\s*(-?\d+)\s*)");
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string piece = text.substr(start, end - start);
    std::smatch m;
    if (!std::regex_match(piece, m, item))
      eqlab::fail(eqlab::ErrorKind::Configuration, flag + " expects a,b,c integers, got '" + text + "'");
    out.push_back(std::stoi(m[1]));
    start = end + 1;
  }
  return out;
}

void print_report(const eqlab::RunReport& rep) {
  std::printf("run: %s\n", rep.run_dir.c_str());
  std::printf("kind: %s  weight_hash: %s  wall: %.2fs  %s\n", eqlab::to_string(rep.config.kind).c_str(),
              rep.weight_hash.empty() ? "-" : rep.weight_hash.substr(0, 16).c_str(), rep.wall_clock_seconds,
              rep.complete ? "complete" : ("INCOMPLETE at " + rep.failed_stage).c_str());
  for (const auto& v : rep.verdicts)
    std::printf("  [%s] %s: measured %.6g, threshold %.6g\n", v.pass ? "PASS" : "FAIL", v.criterion.c_str(),
                v.measured, v.threshold);
  if (rep.verdicts.empty()) std::printf("  (no acceptance verdicts for this configuration)\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eqlab: equilibrium weights, Bergman kernels and random zeros on P^1"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out, grid, degrees;
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--out", out, "output root directory");
  app.add_option("--grid", grid, "grid resolution NrxNt");
  app.add_option("--degrees", degrees, "degree list a,b,c");

  ExperimentConfig cfg;
  std::string weight = "fs", measure = "GaussianComplex", ks = "10,100,1000", config_path, report_dir;
  int trials = -1;
  double nu = 2.0;
  bool rate = false, expectation = false;

  auto* envelope = app.add_subcommand("envelope", "solve the psh envelope of a weight");
  envelope->add_option("--weight", weight, "weight descriptor, radial-csv:PATH or node-csv:PATH");

  auto* bergman = app.add_subcommand("bergman", "Bergman kernel convergence to the envelope gap");
  bergman->add_option("--weight", weight, "weight descriptor");
  bergman->add_flag("--rate-fit", rate, "also fit the (log p)/p rate constant");

  auto* moments = app.add_subcommand("moments", "Monte-Carlo moment condition estimates");
  moments->add_option("--measure", measure, "measure spec, e.g. SphereComplex or IIDComplex{ParetoLog{4,1}}");
  moments->add_option("--ks", ks, "coefficient dimensions a,b,c");
  moments->add_option("--nu", nu, "moment exponent");
  moments->add_option("--trials", trials, "Monte-Carlo trials (default 20000)");

  auto* zeros = app.add_subcommand("zeros", "zeros of random sections");
  zeros->add_option("--weight", weight, "weight descriptor");
  zeros->add_option("--measure", measure, "measure spec");
  zeros->add_option("--trials", trials, "sections per degree (default 50, or 200 with --expectation)");
  zeros->add_flag("--expectation", expectation, "estimate the expectation current on fixed regions");

  auto* run_cmd = app.add_subcommand("run", "run an experiment config (INI)");
  run_cmd->add_option("config", config_path, "config file")->required();

  auto* report = app.add_subcommand("report", "print the verdicts of a finished run");
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (report->parsed()) {
      const auto rep = eqlab::read_report(report_dir);
      print_report(rep);
      return eqlab::exit_code_for(rep);
    }

    if (run_cmd->parsed()) {
      cfg = eqlab::load_config(config_path);
    } else if (envelope->parsed()) {
      cfg.kind = ExperimentKind::Envelope;
      cfg.weight = weight;
    } else if (bergman->parsed()) {
      cfg.kind = rate ? ExperimentKind::RateFit : ExperimentKind::KernelConvergence;
      cfg.weight = weight;
      cfg.degrees = {10, 20, 40};
    } else if (moments->parsed()) {
      cfg.kind = ExperimentKind::Moments;
      cfg.measure = measure;
      cfg.ks = parse_list(ks, "--ks");
      cfg.nu = nu;
      cfg.trials = trials > 0 ? trials : 20000;
    } else if (zeros->parsed()) {
      cfg.kind = expectation ? ExperimentKind::ExpectationCurrent : ExperimentKind::ZeroEquidistribution;
      cfg.weight = weight;
      cfg.measure = measure;
      cfg.degrees = {10, 20};
      cfg.trials = trials > 0 ? trials : (expectation ? 200 : 50);
    }
    // Global flags override the config file.
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (out) cfg.out = *out;
    if (grid) cfg.grid = parse_grid(*grid);
    if (degrees) cfg.degrees = parse_list(*degrees, "--degrees");
    if (!run_cmd->parsed() && !grid && !cfg.degrees.empty()) {
      // Default angular resolution just large enough for the largest degree.
      int pmax = 0;
      for (int p : cfg.degrees) pmax = std::max(pmax, p);
      cfg.grid.angular = std::max(cfg.grid.angular, eqlab::min_angular_for_degree(pmax));
    }

    const auto rep = eqlab::run(cfg);
    print_report(rep);
    return eqlab::exit_code_for(rep);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eqlab: error: %s\n", e.what());
    return eqlab::exit_code_for_error(e);
  }
}
