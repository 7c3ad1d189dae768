// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: scenario ingestion, design runs, tradeoff sweeps,
// beampattern export and the validation suite.
//
// Exit codes: 0 optimal, 1 config/usage error, 2 infeasible, 3 numerical limit.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nfisac/designs.hpp"
#include "nfisac/io.hpp"
#include "nfisac/tradeoff.hpp"
#include "nfisac/validation.hpp"

using namespace nfisac;

namespace {

int env_threads() {
  if (const char* s = std::getenv("NFISAC_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  return static_cast<int>(std::thread::hardware_concurrency());
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += " ";
    s += argv[i];
  }
  return s;
}

struct RangeSpec {
  double lo = 0.0, hi = 0.0;
  int n = 1;
};

RangeSpec parse_range(const std::string& s) {
  RangeSpec r;
  if (std::sscanf(s.c_str(), "%lf:%lf:%d", &r.lo, &r.hi, &r.n) != 3 || r.n < 1)
    fail(ErrorCode::config_invalid, "range must be min:max:steps, got '" + s + "'");
  return r;
}

int map_exit(const Error& e) {
  switch (e.code()) {
    case ErrorCode::infeasible: return 2;
    case ErrorCode::numerical_limit: return 3;
    default: return 1;
  }
}

SensingMetric objective_from_name(const std::string& s) {
  if (s == "crb") return SensingMetric::sum_crb;
  if (s == "illum") return SensingMetric::min_illumination;
  if (s == "echo") return SensingMetric::min_echo;
  fail(ErrorCode::config_invalid, "objective must be crb|illum|echo");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-field ISAC transmit covariance design"};
  app.require_subcommand(1);
  const std::string cmdline = join_args(argc, argv);

  std::string scenario_path, out_path, objective = "crb", level = "quick";
  std::string solution_path, plane = "x=0", range_y, range_z, matrix_name = "A";
  bool direct = false;
  double tol = -1.0;
  int points = 20;
  double gamma_min_db = 0.0, gamma_max_db = 25.0;
  std::string dsweep;

  auto* cd = app.add_subcommand("design", "solve one SINR-constrained design");
  cd->add_option("--scenario", scenario_path)->required();
  cd->add_option("--objective", objective)->check(CLI::IsMember({"crb", "illum", "echo"}));
  cd->add_flag("--direct", direct, "solve without the low-rank reduction (test oracle)");
  cd->add_option("--out", out_path);
  cd->add_option("--tol", tol, "solver tolerance override");

  auto* ct = app.add_subcommand("tradeoff", "gamma sweep / endpoints / distance sweep");
  ct->add_option("--scenario", scenario_path)->required();
  ct->add_option("--objective", objective)->check(CLI::IsMember({"crb", "illum", "echo"}));
  ct->add_option("--points", points);
  auto* gmin_opt = ct->add_option("--gamma-min-db", gamma_min_db);
  auto* gmax_opt = ct->add_option("--gamma-max-db", gamma_max_db);
  ct->add_option("--out", out_path, "output base path");
  ct->add_option("--d-sweep", dsweep, "min:max:steps collocated distance sweep");

  auto* cb = app.add_subcommand("beampattern", "sample a solved design's beampattern");
  cb->add_option("--solution", solution_path)->required();
  cb->add_option("--plane", plane, "fixed axis, e.g. x=0");
  cb->add_option("--range-y", range_y, "min:max:steps for the first free axis");
  cb->add_option("--range-z", range_z, "min:max:steps for the second free axis");
  cb->add_option("--out", out_path);

  auto* cv = app.add_subcommand("validate", "run the oracle self-check suite");
  cv->add_option("--scenario", scenario_path)->required();
  cv->add_option("--level", level)->check(CLI::IsMember({"quick", "full"}));

  auto* cm = app.add_subcommand("dump", "export a channel matrix as CSV");
  cm->add_option("--scenario", scenario_path)->required();
  cm->add_option("--matrix", matrix_name,
                 "one of A,V,dAx,dAy,dAz,dVx,dVy,dVz,H_c");
  cm->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    if (*cd) {
      ScenarioConfig cfg = load_scenario(scenario_path);
      require_valid(cfg);
      ChannelSet ch = build_channel_set(cfg);
      SolveOptions opts;
      if (tol > 0) {
        opts.solver.abs_tol = tol;
        opts.solver.rel_tol = tol;
      }
      DesignSolution sol;
      switch (objective_from_name(objective)) {
        case SensingMetric::sum_crb: sol = solve_crb_min(ch, cfg, !direct, opts); break;
        case SensingMetric::min_illumination:
          sol = solve_maxmin_illumination(ch, cfg, !direct, opts);
          break;
        case SensingMetric::min_echo: sol = solve_maxmin_echo(ch, cfg, !direct, opts); break;
      }
      if (out_path.empty()) out_path = "design_" + objective + ".json";
      io::atomic_write_file(out_path, io::solution_to_json(sol, cfg));
      io::Manifest man;
      man.command = cmdline;
      man.scenario_path = scenario_path;
      if (direct) man.settings_overrides["direct"] = "true";
      if (tol > 0) man.settings_overrides["tol"] = format_double(tol);
      man.outputs = {out_path};
      man.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      man.diagnostics = &sol.diagnostics;
      io::write_manifest(man);
      std::cout << "status " << solver_status_name(sol.solver_status) << ", objective "
                << format_double(sol.objective_value) << ", wrote " << out_path << "\n";
      return sol.solver_status == SolverStatus::optimal ? 0 : 3;
    }

    if (*ct) {
      ScenarioConfig cfg = load_scenario(scenario_path);
      require_valid(cfg);
      if (out_path.empty()) out_path = "tradeoff_" + objective;
      io::Manifest man;
      man.command = cmdline;
      man.scenario_path = scenario_path;
      man.wall_time_s = 0;
      SolveOptions opts;

      if (!dsweep.empty()) {
        RangeSpec r = parse_range(dsweep);
        std::vector<double> ds;
        for (int i = 0; i < r.n; ++i)
          ds.push_back(r.n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (r.n - 1));
        auto rows = collocated_distance_sweep(cfg, ds, opts);
        const std::string csv_path = out_path + ".dsweep.csv";
        io::atomic_write_file(csv_path, distance_sweep_csv(rows));
        man.outputs = {csv_path};
        man.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        io::write_manifest(man);
        std::cout << "wrote " << csv_path << "\n";
        return 0;
      }

      ChannelSet ch = build_channel_set(cfg);
      std::vector<std::string> outputs;
      if (cfg.num_users() == 1 && cfg.num_targets() == 1) {
        TradeoffEndpoints ep = compute_endpoints(ch, cfg, opts);
        const std::string ep_path = out_path + ".endpoints.json";
        io::atomic_write_file(ep_path, io::endpoints_to_json(ep, cfg));
        outputs.push_back(ep_path);
        if (gmin_opt->count() == 0 && ep.ps.gamma > 0) gamma_min_db = linear_to_db(ep.ps.gamma);
        if (gmax_opt->count() == 0) gamma_max_db = linear_to_db(ep.pc.gamma);
      }
      if (points > 0) {
        auto grid =
            log_gamma_grid(db_to_linear(gamma_min_db), db_to_linear(gamma_max_db), points);
        TradeoffCurve curve = sweep(ch, cfg, objective_from_name(objective), grid, opts,
                                    env_threads());
        const std::string csv_path = out_path + ".curve.csv";
        io::atomic_write_file(csv_path, curve.csv());
        outputs.push_back(csv_path);
      }
      if (outputs.empty())
        fail(ErrorCode::config_invalid,
             "nothing to do: multi-user scenario with --points 0 has no endpoints");
      man.outputs = outputs;
      man.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      io::write_manifest(man);
      for (const auto& o : outputs) std::cout << "wrote " << o << "\n";
      return 0;
    }

    if (*cb) {
      io::LoadedSolution ls = io::load_solution(solution_path);
      if (range_y.empty() || range_z.empty())
        fail(ErrorCode::config_invalid, "--range-y and --range-z are required");
      Axis fixed = Axis::x;
      double fixed_value = 0.0;
      if (plane.size() < 3 || plane[1] != '=')
        fail(ErrorCode::config_invalid, "--plane must look like x=0");
      switch (plane[0]) {
        case 'x': fixed = Axis::x; break;
        case 'y': fixed = Axis::y; break;
        case 'z': fixed = Axis::z; break;
        default: fail(ErrorCode::config_invalid, "plane axis must be x, y or z");
      }
      fixed_value = std::atof(plane.c_str() + 2);
      RangeSpec ry = parse_range(range_y), rz = parse_range(range_z);
      auto tx = build_antenna_positions(ls.config.tx, ls.config.wavelength());
      BeampatternGrid grid = beampattern_grid(tx, ls.config.wavelength(), ls.solution.R_X,
                                              fixed, fixed_value, {ry.lo, ry.hi, ry.n},
                                              {rz.lo, rz.hi, rz.n}, env_threads());
      if (out_path.empty()) out_path = "beampattern.csv";
      io::atomic_write_file(out_path, grid.csv());
      io::Manifest man;
      man.command = cmdline;
      man.scenario_path = solution_path;
      man.outputs = {out_path};
      man.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      io::write_manifest(man);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }

    if (*cv) {
      ScenarioConfig cfg = load_scenario(scenario_path);
      auto rows = run_validation_suite(
          cfg, level == "full" ? ValidationLevel::full : ValidationLevel::quick);
      bool all = true;
      for (const auto& r : rows) {
        all = all && r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name
                  << (r.detail.empty() ? "" : "  (" + r.detail + ")") << "\n";
      }
      std::cout << (all ? "validation passed" : "validation FAILED") << "\n";
      return all ? 0 : 1;
    }

    if (*cm) {
      ScenarioConfig cfg = load_scenario(scenario_path);
      require_valid(cfg);
      ChannelSet ch = build_channel_set(cfg);
      MatrixXcd m;
      if (matrix_name == "A") m = ch.A;
      else if (matrix_name == "V") m = ch.V;
      else if (matrix_name == "dAx") m = ch.dA[0];
      else if (matrix_name == "dAy") m = ch.dA[1];
      else if (matrix_name == "dAz") m = ch.dA[2];
      else if (matrix_name == "dVx") m = ch.dV[0];
      else if (matrix_name == "dVy") m = ch.dV[1];
      else if (matrix_name == "dVz") m = ch.dV[2];
      else if (matrix_name == "H_c") m = ch.H_c;
      else fail(ErrorCode::config_invalid, "unknown matrix " + matrix_name);
      if (out_path.empty()) out_path = matrix_name + ".csv";
      io::atomic_write_file(out_path, io::complex_matrix_csv(m));
      io::Manifest man;
      man.command = cmdline;
      man.scenario_path = scenario_path;
      man.outputs = {out_path};
      man.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      io::write_manifest(man);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return map_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
