#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "freebond/cbf_json.hpp"
#include "freebond/duality.hpp"
#include "freebond/kendall.hpp"
#include "freebond/report_io.hpp"

// Command-line front end. Exit codes: 0 all tolerances met, 1 tolerance
// failure, 2 usage error, 3 numerical-machinery failure.

namespace freebond::cli {

struct GridArg {
  std::vector<double> values;
};

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("expected a comma-separated list");
  return out;
}

inline std::vector<double> parse_log_grid(const std::string& text) {
  double lo, hi;
  int n;
  char c1, c2;
  std::stringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':') {
    throw CLI::ValidationError("expected lo:hi:n");
  }
  return log_spaced(lo, hi, n);
}

struct FamilyArg {
  std::string name = "gamma";
  double alpha = 0.5;
  std::string spec_path;

  std::vector<Family> resolve() const {
    if (name == "gamma") return {Gamma{}};
    if (name == "poisson-exp") return {PoissonExp{}};
    if (name == "inverse-gaussian") return {InverseGaussian{}};
    if (name == "free-stable") {
      if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw CLI::ValidationError("--alpha must lie strictly in (0,1)");
      }
      return {FreeStable{alpha}};
    }
    if (name == "custom") {
      if (spec_path.empty()) {
        throw CLI::ValidationError("--family custom requires --spec path.json");
      }
      std::ifstream in(spec_path);
      if (!in) throw CLI::ValidationError("cannot open spec file: " + spec_path);
      std::stringstream buf;
      buf << in.rdbuf();
      try {
        return {cbf_spec_from_json_text(buf.str())};
      } catch (const std::exception& e) {
        throw CLI::ValidationError(std::string("invalid cbf spec: ") + e.what());
      }
    }
    if (name == "all") {
      if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw CLI::ValidationError("--alpha must lie strictly in (0,1)");
      }
      return {Gamma{}, PoissonExp{}, InverseGaussian{}, FreeStable{alpha}};
    }
    throw CLI::ValidationError("unknown family: " + name);
  }
};

inline void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

inline int run(const std::vector<std::string>& args) {
  CLI::App app{"Bondesson and free regular convolution semigroups of a complete "
               "Bernstein function, and the integral identity between them"};
  app.require_subcommand(1);

  FamilyArg family;
  std::string t_list = "0.5,1,2";
  std::string w_list, w_log = "0.1:10:10";
  std::string y_list, y_log, x_list, x_log;
  std::string output, format = "csv";
  double tol_closed = 1e-6, tol_stable = 1e-4, tol_corollary = 1e-5;
  std::uint64_t seed = kDefaultSeed;
  long n_paths = 100000;
  double step = 1e-3;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;

  auto add_family = [&](CLI::App* cmd, bool allow_all) {
    cmd->add_option("--family", family.name,
                    allow_all ? "gamma|poisson-exp|inverse-gaussian|free-stable|custom|all"
                              : "gamma|poisson-exp|inverse-gaussian|free-stable|custom");
    cmd->add_option("--alpha", family.alpha, "free-stable index in (0,1)");
    cmd->add_option("--spec", family.spec_path, "JSON file for --family custom");
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--output", output, "output path (default: stdout)");
    cmd->add_option("--format", format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", seed, "64-bit seed recorded in report headers");
    cmd->add_option("--threads", threads, "worker threads (output is identical for any count)");
  };

  auto* vt = app.add_subcommand("verify-theorem",
                                "check the Laplace/CDF identity on a (t,w) grid");
  add_family(vt, true);
  add_common(vt);
  vt->add_option("--t", t_list, "comma-separated t values");
  vt->add_option("--w", w_list, "comma-separated w values");
  vt->add_option("--w-log", w_log, "log-spaced w grid lo:hi:n");
  vt->add_option("--tol", tol_closed, "residual tolerance (closed-form families)");
  vt->add_option("--tol-stable", tol_stable, "residual tolerance (free-stable)");

  auto* vc = app.add_subcommand("verify-corollary",
                                "check the derivative identity for the CDF");
  add_family(vc, true);
  add_common(vc);
  vc->add_option("--t", t_list, "comma-separated t values");
  vc->add_option("--w", w_list, "comma-separated w values");
  vc->add_option("--tol", tol_corollary, "residual tolerance");

  auto* vk = app.add_subcommand("verify-kendall",
                                "Monte Carlo checks: Kendall cells and renewal density");
  add_family(vk, false);
  add_common(vk);
  vk->add_option("--n-paths", n_paths, "paths per estimator");
  vk->add_option("--step", step, "grid step for non-compound families");

  auto* tc = app.add_subcommand("tabulate-classical", "CSV table of nu^{*t}: cdf and pdf");
  add_family(tc, false);
  add_common(tc);
  tc->add_option("--t", t_list, "comma-separated t values");
  tc->add_option("--y", y_list, "comma-separated y values");
  tc->add_option("--y-log", y_log, "log-spaced y grid lo:hi:n");

  auto* tf = app.add_subcommand("tabulate-free",
                                "free density table with atoms/support JSON header");
  add_family(tf, false);
  add_common(tf);
  tf->add_option("--t", t_list, "comma-separated t values");
  tf->add_option("--x", x_list, "comma-separated x values");
  tf->add_option("--x-log", x_log, "log-spaced x grid lo:hi:n");

  auto* fams = app.add_subcommand("families", "list the built-in families");
  fams->add_option("--output", output, "output path (default: stdout)");

  std::vector<std::string> argv_copy(args);
  std::vector<const char*> argv;
  argv.push_back("freebond");
  for (const auto& a : argv_copy) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (fams->parsed()) {
      std::ostringstream os;
      os << "free-stable(alpha)   f(z) = z^{1-alpha}, alpha in (0,1)\n"
         << "gamma                f(z) = log(1+z)\n"
         << "poisson-exp          f(z) = z/(z+1)\n"
         << "inverse-gaussian     f(z) = sqrt(1+2z)\n"
         << "custom(json)         Pick representation {\"a\":..,\"b\":..,\"atoms\":[[x,m],..]}\n";
      write_output(output, os.str());
      return 0;
    }

    const std::vector<Family> families = family.resolve();

    if (vt->parsed()) {
      GridSpec grid;
      grid.t_values = parse_list(t_list);
      grid.w_values = w_list.empty() ? parse_log_grid(w_log) : parse_list(w_list);
      grid.tol_closed_form = tol_closed;
      grid.tol_free_stable = tol_stable;
      for (const Family& f : families) {
        if (std::holds_alternative<CbfSpec>(f)) {
          throw CLI::ValidationError(
              "verify-theorem: custom specs have no classical-side evaluator");
        }
      }
      const auto rep = verify_theorem(grid, families);
      write_output(output, format == "json"
                               ? to_json(rep, "verify-theorem", seed).dump(2) + "\n"
                               : to_csv(rep, "verify-theorem", seed));
      std::cerr << "max residual (testable cells): " << format_double(rep.max_residual)
                << ", testable fraction: " << format_double(rep.testable_fraction)
                << "\n";
      if (!rep.enough_testable) return 1;
      return rep.all_pass ? 0 : 1;
    }

    if (vc->parsed()) {
      const std::vector<double> ts = parse_list(t_list);
      const std::vector<double> ws =
          w_list.empty() ? std::vector<double>{0.5, 1.0, 2.0} : parse_list(w_list);
      std::vector<CorollaryRow> rows;
      bool all = true;
      for (const Family& f : families) {
        if (std::holds_alternative<CbfSpec>(f)) {
          throw CLI::ValidationError(
              "verify-corollary: custom specs have no classical-side evaluator");
        }
        for (double t : ts) {
          for (double w : ws) {
            rows.push_back(verify_corollary(f, t, w, 0.0, tol_corollary));
            all = all && rows.back().pass;
          }
        }
      }
      write_output(output, format == "json"
                               ? to_json(std::span(rows), "verify-corollary", seed).dump(2) + "\n"
                               : to_csv(std::span(rows), "verify-corollary", seed));
      return all ? 0 : 1;
    }

    if (vk->parsed()) {
      if (format == "csv") {
        throw CLI::ValidationError("verify-kendall reports are JSON only");
      }
      const Family& f = families.front();
      if (std::holds_alternative<CbfSpec>(f)) {
        throw CLI::ValidationError("verify-kendall: custom specs cannot be simulated");
      }
      const std::vector<Interval> s_cells = {{0.5, 1.0}, {1.0, 2.0}, {1.0, 2.0}, {2.0, 3.0}};
      const std::vector<Interval> y_cells = {{0.1, 0.3}, {0.25, 0.75}, {0.5, 1.0}, {0.5, 1.5}};
      const auto cells =
          kendall_check_cells(f, s_cells, y_cells, n_paths, seed, step, threads);
      const std::vector<double> s_grid = {0.5, 1.0, 2.0};
      const auto renewal = renewal_mc(f, s_grid, n_paths,
                                      /*y_max=*/s_grid.back() + 1.0, seed, step,
                                      threads);
      auto j = to_json(f, cells, renewal, seed);
      bool all = renewal.y_max_ok;
      for (const auto& c : cells) all = all && c.pass;
      for (std::size_t i = 0; i < renewal.s_grid.size(); ++i) {
        all = all && std::fabs(renewal.u_hat[i] - renewal.u_formula[i]) <=
                         3.0 * renewal.std_err[i];
      }
      j["all_pass"] = all;
      write_output(output, j.dump(2) + "\n");
      return all ? 0 : 1;
    }

    if (tc->parsed()) {
      const Family& f = families.front();
      if (std::holds_alternative<CbfSpec>(f)) {
        throw CLI::ValidationError("tabulate-classical: custom specs unsupported");
      }
      const std::vector<double> ts = parse_list(t_list);
      const std::vector<double> ys = !y_list.empty() ? parse_list(y_list)
                                     : !y_log.empty()
                                         ? parse_log_grid(y_log)
                                         : log_spaced(0.01, 10.0, 50);
      write_output(output, classical_table_csv(f, ts, ys, seed));
      return 0;
    }

    if (tf->parsed()) {
      const Family& f = families.front();
      const std::vector<double> ts = parse_list(t_list);
      const std::vector<double> xs = !x_list.empty() ? parse_list(x_list)
                                     : !x_log.empty()
                                         ? parse_log_grid(x_log)
                                         : log_spaced(0.01, 10.0, 50);
      write_output(output, free_table_csv(f, ts, xs, seed));
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace freebond::cli
