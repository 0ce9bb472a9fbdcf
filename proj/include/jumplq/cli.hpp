#pragma once

#include <CLI11.hpp>

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "jumplq/config.hpp"
#include "jumplq/hamiltonian.hpp"
#include "jumplq/lattice.hpp"
#include "jumplq/meanvariance.hpp"
#include "jumplq/riccati.hpp"
#include "jumplq/simulate.hpp"

namespace jumplq {

// Exit statuses: 0 success / all checks PASS, 1 a check FAILed, 2 argument or
// file parse error, 3 configuration validation error, 4 solver error.

namespace cli_detail {

inline std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return std::string(buf);
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ArgumentError("cli: cannot open output file '" + p.string() + "'");
  return os;
}

inline ControlLaw scale_law(const ControlLaw& base, double factor, std::string name) {
  return {std::move(name),
          [factor, u = base.u](double t, double x) -> Eigen::VectorXd { return factor * u(t, x); }};
}

inline int run_sre(const RunConfig& cfg, const std::filesystem::path& out_path,
                   std::ostream& log) {
  RiccatiSolution sol = solve_sre(cfg.lq, cfg.cone, cfg.steps, cfg.scheme,
                                  cfg.truncation_radius, cfg.tol);
  auto os = open_output(out_path);
  sol.write_csv(os);
  log << fmt("sre regime=%s P1_0=%.17g P2_0=%.17g rows=%d -> %s\n",
             sol.regime == RiccatiCase::standard ? "standard" : "singular", sol.p1.front(),
             sol.p2.front(), sol.steps() + 1, out_path.string().c_str());
  return 0;
}

inline int run_frontier(const RunConfig& cfg, const std::filesystem::path& out_path,
                        std::ostream& log) {
  FrontierResult fr = efficient_frontier(cfg.market, cfg.market_x0, cfg.targets, cfg.steps,
                                         cfg.scheme);
  auto os = open_output(out_path);
  fr.write_csv(os);
  log << fmt("frontier rows=%zu benchmark=%.17g p2_discounted=%.17g -> %s\n", fr.points.size(),
             fr.benchmark, fr.p2_discounted, out_path.string().c_str());
  return 0;
}

inline int run_simulate(const RunConfig& cfg, const std::filesystem::path& out_path,
                        std::ostream& log) {
  RiccatiSolution sol = solve_sre(cfg.lq, cfg.cone, cfg.steps, cfg.scheme,
                                  cfg.truncation_radius, cfg.tol);
  const double xp = positive_part(cfg.x0);
  const double xn = negative_part(cfg.x0);
  const double value = sol.p1.front() * xp * xp + sol.p2.front() * xn * xn;
  const ControlLaw law = feedback_law(sol);

  std::vector<PathSample> records;
  SimReport rep = simulate_controlled(cfg.lq, cfg.x0, law, cfg.mc,
                                      cfg.mc.record_paths > 0 ? &records : nullptr);
  const ValueCheck chk = verify_value(rep, value, cfg.bias_budget);
  bool pass = chk.pass;

  auto os = open_output(out_path);
  os << fmt("cost simulated=%.17g reference=%.17g max_violation=%.17g tol=%.17g %s\n",
            chk.simulated, chk.reference, std::fabs(chk.difference),
            chk.statistical_tol + chk.bias_tol, chk.pass ? "PASS" : "FAIL");
  os << fmt("terminal mean=%.17g se=%.17g variance=%.17g\n", rep.mean_terminal, rep.se_terminal,
            rep.var_terminal);
  os << fmt("crossing fraction=%.17g\n", rep.crossing_fraction);
  if (cfg.probe) {
    std::vector<ControlLaw> rivals;
    for (double eps : {-0.5, -0.2, 0.2, 0.5})
      rivals.push_back(scale_law(law, 1.0 + eps, fmt("scale%+.1f", eps)));
    const ProbeReport pr = optimality_probe(cfg.lq, cfg.x0, law, rivals, cfg.mc);
    for (const auto& rv : pr.rivals) {
      os << fmt("probe rival=%s mean_excess=%.17g se=%.17g %s\n", rv.name.c_str(),
                rv.mean_excess, rv.se_excess, rv.beaten ? "FAIL" : "PASS");
    }
    if (!pr.pass) pass = false;
  }
  if (cfg.mc.record_paths > 0) {
    const std::filesystem::path paths_csv = out_path.string() + ".paths.csv";
    auto ps = open_output(paths_csv);
    ps << "path,t,x";
    for (int i = 1; i <= cfg.lq.m; ++i) ps << ",u_" << i;
    ps << "\n";
    for (const auto& rec : records) {
      for (size_t k = 0; k < rec.t.size(); ++k) {
        ps << fmt("%d,%.17g,%.17g", rec.path, rec.t[k], rec.x[k]);
        for (int i = 0; i < cfg.lq.m; ++i) {
          if (k < rec.u.size())
            ps << fmt(",%.17g", rec.u[k](i));
          else
            ps << ",";
        }
        ps << "\n";
      }
    }
  }
  log << fmt("simulate value=%.17g mc=%.17g se=%.17g crossing=%.17g %s -> %s\n", value,
             rep.mean_cost, rep.se_cost, rep.crossing_fraction, pass ? "PASS" : "FAIL",
             out_path.string().c_str());
  return pass ? 0 : 1;
}

inline int run_check_comparison(const RunConfig& cfg, const std::filesystem::path& out_path,
                                std::ostream& log) {
  const ComparisonReport rep = check_comparison(cfg.lower, cfg.upper, cfg.certificate,
                                                cfg.lattice_tol, cfg.lattice_scheme);
  auto os = open_output(out_path);
  os << fmt("certificate status=%s reason=%s\n", rep.certified ? "established" : "failed",
            rep.reason.empty() ? "none" : rep.reason.c_str());
  os << fmt("terminal_dominance max_violation=%.17g %s\n", std::max(rep.max_terminal_gap, 0.0),
            rep.max_terminal_gap <= 0.0 ? "PASS" : "FAIL");
  os << fmt("driver_dominance max_violation=%.17g %s\n", std::max(rep.max_driver_gap, 0.0),
            rep.max_driver_gap <= 1e-12 ? "PASS" : "FAIL");
  os << fmt("comparison max_violation=%.17g %s\n", std::max(rep.max_violation, 0.0),
            rep.pass ? "PASS" : "FAIL");
  log << fmt("check-comparison nodes=%lld max_violation=%.17g %s -> %s\n",
             static_cast<long long>(rep.nodes), std::max(rep.max_violation, 0.0),
             rep.pass ? "PASS" : "FAIL", out_path.string().c_str());
  return rep.pass ? 0 : 1;
}

inline int run_check_inequality(const RunConfig& cfg, const std::filesystem::path& out_path,
                                std::ostream& log) {
  const InequalityReport rep =
      check_elementary_inequality(cfg.ineq_samples, cfg.ineq_seed, cfg.ineq_tol);
  const double violation = std::max(0.0, -rep.min_slack);
  auto os = open_output(out_path);
  os << fmt("inequality samples=%lld min_slack=%.17g max_violation=%.17g %s\n",
            static_cast<long long>(rep.samples), rep.min_slack, violation,
            rep.pass ? "PASS" : "FAIL");
  log << fmt("check-inequality samples=%lld max_violation=%.17g %s -> %s\n",
             static_cast<long long>(rep.samples), violation, rep.pass ? "PASS" : "FAIL",
             out_path.string().c_str());
  return rep.pass ? 0 : 1;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cone-constrained curvature equations, lattice order checks, and frontiers"};
  std::string config_path, out_dir;
  long long seed = 0;
  bool dump = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override the run's random seed");
  app.add_option("--out", out_dir, "directory for output files");
  app.add_flag("--dump-effective-config", dump,
               "print the materialized configuration to stdout and exit");

  std::vector<const char*> argv;
  argv.push_back("jumplq");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  std::optional<uint64_t> seed_override;
  if (seed_opt->count() > 0) {
    if (seed < 0) {
      err << "cli: --seed must be nonnegative\n";
      return 2;
    }
    seed_override = static_cast<uint64_t>(seed);
  }

  RunConfig cfg;
  try {
    cfg = load_run_config(config_path, seed_override);
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    err << "config: " << e.what() << "\n";
    return 3;
  }

  if (dump) {
    out << cfg.effective.dump(2) << "\n";
    return 0;
  }

  std::filesystem::path out_path = cfg.output;
  try {
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      if (out_path.is_relative()) out_path = std::filesystem::path(out_dir) / out_path;
    }
    switch (cfg.mode) {
      case RunMode::sre: return cli_detail::run_sre(cfg, out_path, out);
      case RunMode::frontier: return cli_detail::run_frontier(cfg, out_path, out);
      case RunMode::simulate: return cli_detail::run_simulate(cfg, out_path, out);
      case RunMode::check_comparison: return cli_detail::run_check_comparison(cfg, out_path, out);
      case RunMode::check_inequality: return cli_detail::run_check_inequality(cfg, out_path, out);
    }
    err << "cli: unknown mode\n";
    return 3;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 4;
  }
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace jumplq
