// pmelab: run, audit, and sweep pressure-equation gradient-estimate
// experiments on exact flow backgrounds.
//
// Exit codes: 0 all checks passed; 1 a mathematical check failed;
// 2 usage/config error; 3 numerical failure (instability or extinction).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmelab/errors.hpp"
#include "pmelab/harness.hpp"
#include "pmelab/oracle.hpp"
#include "pmelab/version.hpp"

namespace {

using namespace pmelab;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int jobs = 1;
  std::string format;  // "", "csv", "json"
};

RunConfig load_config(const GlobalArgs& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig() : RunConfig::from_file(g.config_path);
  for (const auto& ov : g.overrides) cfg.set(ov);
  if (!g.format.empty()) cfg.set("output.formats", g.format);
  if (!g.out_dir.empty()) {
    cfg.set("output.dir", g.out_dir);
  } else if (const char* env = std::getenv("PMELAB_OUT"); env && *env && cfg.get("output.dir") == "out") {
    cfg.set("output.dir", env);
  }
  return cfg;
}

void print_conditions(const ReportBundle& b) {
  auto show = [](const ConditionReport& r, const char* label) {
    std::cout << label << (r.pass() ? ": PASS" : ": FAIL") << "\n";
    for (const auto& e : r.entries) {
      std::cout << "  " << e.name << ": min margin " << format_double(e.min_margin) << " at t="
                << format_double(e.t_at_min) << (e.pass ? "" : "  [VIOLATED]") << "\n";
    }
    if (!std::isnan(r.ratio_sup)) {
      std::cout << "  ratio sup ("
                << (r.ratio_mode == RatioMode::alpha4 ? "gamma*alpha^4/(alpha-1)"
                                                      : "gamma/(alpha-1)")
                << ") = " << format_double(r.ratio_sup) << " at t=" << format_double(r.ratio_sup_t)
                << (r.ratio_finite ? "" : "  [SINGULAR]") << "\n";
    }
    for (const auto& n : r.notes) std::cout << "  note: " << n << "\n";
  };
  show(b.admissibility, "alpha-phi system");
  show(b.gamma_system, "gamma growth system");
}

int emit_and_report(const ReportBundle& bundle) {
  const auto paths = emit(bundle, bundle.config.output().dir);
  for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
  std::cout << "verdict: " << bundle.verdict;
  if (!bundle.failed_stage.empty()) std::cout << " (stage: " << bundle.failed_stage << ")";
  std::cout << "\n";
  return exit_code(bundle);
}

int cmd_check_conditions(const GlobalArgs& g) {
  RunConfig cfg = load_config(g);
  cfg.validate();
  // audit at the same pressure bound the run pipeline would use: max of v0
  const ManifoldModel model = cfg.build_model();
  const std::vector<double> v0 = cfg.build_initial(model);
  const FlowEnv env = cfg.build_env(*std::max_element(v0.begin(), v0.end()));
  const FunctionTriple triple = cfg.build_triple(env);
  const auto grid = default_condition_grid(env);
  const double slack = cfg.estimate().slack;

  ReportBundle bundle;
  bundle.config = cfg;
  bundle.config_hash = cfg.hash_hex();
  bundle.version = kVersion;
  bundle.admissibility = check_admissibility(triple, grid, slack);
  bundle.gamma_system = check_gamma_system(triple, grid, triple.native_ratio_mode(), slack);
  const bool ok = bundle.admissibility.pass() && bundle.gamma_system.pass();
  bundle.verdict = ok ? "PASS" : "FAIL";
  if (!ok) bundle.failed_stage = "admissibility";
  print_conditions(bundle);
  return emit_and_report(bundle);
}

int cmd_run(const GlobalArgs& g, bool lemma) {
  RunConfig cfg = load_config(g);
  if (lemma) cfg.set("estimate.lemma_residual", "true");
  const ReportBundle bundle = run(cfg);
  if (bundle.estimate) {
    std::cout << "C* = " << format_double(bundle.estimate->c_star)
              << ", bare diagnostics: " << bundle.estimate->bare_violations << " snapshot(s)\n";
  }
  if (bundle.lemma) {
    std::cout << "lemma residual: min margin " << format_double(bundle.lemma->min_margin)
              << " at (t=" << format_double(bundle.lemma->t_at_min)
              << ", x=" << format_double(bundle.lemma->x_at_min)
              << "), tolerance " << format_double(bundle.lemma_tolerance) << "\n";
  }
  return emit_and_report(bundle);
}

int cmd_solve(const GlobalArgs& g) {
  RunConfig cfg = load_config(g);
  cfg.validate();
  const ManifoldModel model = cfg.build_model();
  const PmeParameters pme = cfg.build_pme();
  SolveOptions opts;
  opts.safety = cfg.safety();
  const RunTrace trace =
      solve(model, cfg.build_initial(model), pme, cfg.t_start(), cfg.t_end(),
            cfg.snapshot_times(), opts);
  const auto out = cfg.output();
  std::filesystem::create_directories(out.dir);
  const auto path = std::filesystem::path(out.dir) / "solution.csv";
  std::ofstream f(path, std::ios::binary);
  f << solution_csv(trace);
  std::cout << "wrote " << path.string() << "\n";
  std::cout << "steps: " << trace.steps.size()
            << ", max-principle violation: " << format_double(trace.max_principle_violation())
            << "\n";
  return 0;
}

int cmd_cutoff(const GlobalArgs& g, double radius, double time, double c_max) {
  RunConfig cfg = load_config(g);
  const ManifoldModel model = cfg.build_model();
  const double x0 =
      model.kind() == ModelKind::shrinking_sphere ? 0.0 : 0.5 * model.grid().length;
  const CutoffProfile profile = build_cutoff(model, x0, radius, time);
  const double K = model.ricci_bound(time);
  const CutoffConstants c = verify_cutoff(profile, model, time, K, c_max);
  std::cout << "c1 = R^2 sup |grad chi|^2/chi = " << format_double(c.c1) << "\n"
            << "c2 = R^2 sup(-lap chi)/(1+sqrt(K)R) = " << format_double(c.c2) << "\n"
            << "bound " << format_double(c_max) << ": " << (c.pass ? "PASS" : "FAIL") << "\n";
  return c.pass ? 0 : 1;
}

int cmd_convergence(const GlobalArgs& g, std::vector<int> resolutions) {
  RunConfig cfg = load_config(g);
  const ManifoldModel base = cfg.build_model();
  const PmeParameters pme = cfg.build_pme();
  const double t_end = cfg.t_end();
  const ManufacturedSolution target = base.kind() == ModelKind::shrinking_sphere
                                          ? ManufacturedSolution::sphere_cosine()
                                          : ManufacturedSolution::flat_sine();
  std::vector<double> errors;
  for (int N : resolutions) {
    ManifoldModel model =
        base.kind() == ModelKind::shrinking_sphere
            ? ManifoldModel::shrinking_sphere(base.radius0(), N)
            : (base.kind() == ModelKind::flat_torus ? ManifoldModel::flat_torus(base.grid().length, N)
                                                    : ManifoldModel::flat_circle(base.grid().length, N));
    SolveOptions opts;
    opts.safety = cfg.safety();
    opts.forcing = mms_forcing(target, model, pme.m);
    const double snap = t_end;
    const RunTrace trace =
        solve(model, target.sample(model, cfg.t_start()), pme, cfg.t_start(), t_end, {{snap}}, opts);
    double err = 0.0;
    const auto& v = trace.snapshots.back().v;
    for (int i = 0; i < model.size(); ++i)
      err = std::max(err, std::abs(v[i] - target.value(model.coord(i), snap)));
    errors.push_back(err);
    std::cout << "N=" << N << "  Linf error=" << format_double(err) << "\n";
  }
  const ConvergenceTable table = convergence_order(resolutions, errors);
  for (const auto& row : table.rows) {
    std::cout << "N=" << row.resolution << "  error=" << format_double(row.error)
              << "  order=" << format_double(row.order) << "\n";
  }
  std::cout << "median order: " << format_double(table.median_order)
            << (table.monotone ? "" : "  [WARNING: errors not decreasing]") << "\n";
  return table.median_order >= 1.9 ? 0 : 1;
}

int cmd_sweep(const GlobalArgs& g, const std::vector<std::string>& axis_specs, std::size_t cap) {
  RunConfig base = load_config(g);
  std::vector<SweepAxis> axes;
  for (const auto& spec : axis_specs) axes.push_back(parse_axis(spec));
  const SweepResult result = sweep(base, axes, g.jobs, cap);

  const auto out = base.output();
  std::filesystem::create_directories(out.dir);
  const auto path = std::filesystem::path(out.dir) / "sweep_summary.csv";
  std::ofstream f(path, std::ios::binary);
  f << sweep_summary_csv(result);
  std::cout << sweep_summary_csv(result);
  std::cout << "wrote " << path.string() << "\n";
  for (std::size_t i = 0; i < result.bundles.size(); ++i) {
    char tag[16];
    std::snprintf(tag, sizeof tag, "run_%04zu", i);
    emit(result.bundles[i], std::filesystem::path(out.dir) / tag);
  }
  std::cout << "sweep verdict: " << (result.pass() ? "PASS" : "FAIL") << "\n";
  return result.pass() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"pressure-equation gradient-estimate laboratory"};
  app.set_version_flag("--version", pmelab::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "configuration file")->envname("PMELAB_CONFIG");
  app.add_option("--out", g.out_dir, "output directory (default: $PMELAB_OUT or 'out')");
  app.add_option("--set", g.overrides, "override, e.g. --set pme.m=3")->type_size(1);
  app.add_option("--jobs", g.jobs, "worker threads for sweeps")->default_val(1);
  app.add_option("--format", g.format, "restrict outputs: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  app.add_subcommand("check-conditions", "audit the coefficient triple's admissibility");
  app.add_subcommand("solve", "integrate the pressure equation and dump snapshots");
  app.add_subcommand("verify-estimate", "full pipeline: conditions, solve, estimate margins");
  app.add_subcommand("lemma-residual", "pipeline plus the discrete G-inequality residual");

  auto* cut = app.add_subcommand("cutoff-test", "build and verify a cutoff profile");
  double cut_radius = 1.0, cut_time = 0.0, cut_cmax = 32.0;
  cut->add_option("--radius", cut_radius, "inner radius R")->default_val(1.0);
  cut->add_option("--time", cut_time, "evaluation time")->default_val(0.0);
  cut->add_option("--c-max", cut_cmax, "acceptance bound")->default_val(32.0);

  auto* conv = app.add_subcommand("convergence", "manufactured-solution order study");
  std::vector<int> resolutions{64, 128, 256};
  conv->add_option("--resolutions", resolutions, "grid sizes")->delimiter(',');

  auto* sw = app.add_subcommand("sweep", "Cartesian parameter sweep");
  std::vector<std::string> axis_specs;
  std::size_t cap = 10000;
  sw->add_option("--axis", axis_specs, "axis, e.g. --axis pme.m=1.5,2,3")->type_size(1);
  sw->add_option("--cap", cap, "maximum number of runs")->default_val(10000);

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("check-conditions")) return cmd_check_conditions(g);
  if (app.got_subcommand("solve")) return cmd_solve(g);
  if (app.got_subcommand("verify-estimate")) return cmd_run(g, false);
  if (app.got_subcommand("lemma-residual")) return cmd_run(g, true);
  if (app.got_subcommand("cutoff-test")) return cmd_cutoff(g, cut_radius, cut_time, cut_cmax);
  if (app.got_subcommand("convergence")) return cmd_convergence(g, resolutions);
  if (app.got_subcommand("sweep")) return cmd_sweep(g, axis_specs, cap);
  return 2;
}

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const pmelab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
}
