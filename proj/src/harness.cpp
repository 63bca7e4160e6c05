#include "pmelab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pmelab/errors.hpp"
#include "pmelab/version.hpp"

namespace pmelab {

namespace {

using nlohmann::json;

std::string now_stamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json margin_json(const InequalityMargin& e) {
  return json{{"name", e.name},
              {"min_margin", e.min_margin},
              {"t_at_min", e.t_at_min},
              {"worst_rel", e.worst_rel},
              {"pass", e.pass}};
}

json condition_json(const ConditionReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back(margin_json(e));
  json out{{"entries", entries}, {"pass", r.pass()}, {"rel_slack", r.rel_slack}};
  if (!std::isnan(r.ratio_sup)) {
    out["ratio_mode"] = r.ratio_mode == RatioMode::alpha4 ? "alpha4" : "plain";
    out["ratio_sup"] = r.ratio_finite ? json(r.ratio_sup) : json("inf");
    out["ratio_sup_t"] = r.ratio_sup_t;
    out["ratio_finite"] = r.ratio_finite;
  }
  if (!r.notes.empty()) out["notes"] = r.notes;
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ReportBundle run(const RunConfig& config) {
  config.validate();

  ReportBundle bundle;
  bundle.config = config;
  bundle.config_hash = config.hash_hex();
  bundle.version = kVersion;
  if (config.output().stamp) bundle.timestamp = now_stamp();

  const ManifoldModel model = config.build_model();
  const PmeParameters pme = config.build_pme();
  std::vector<double> v0 = config.build_initial(model);
  const double vmax0 = *std::max_element(v0.begin(), v0.end());
  const FlowEnv env = config.build_env(vmax0);
  const FunctionTriple triple = config.build_triple(env);

  auto est = config.estimate();
  if (est.mode_auto) {
    est.mode = est.radius > 0.0
                   ? (triple.native_ratio_mode() == RatioMode::alpha4 ? RhsMode::local_plain
                                                                      : RhsMode::local_weighted)
                   : RhsMode::global_bound;
  }

  // Stage: admissibility.
  const auto grid = default_condition_grid(env);
  bundle.admissibility = check_admissibility(triple, grid, est.slack);
  const RatioMode ratio = est.mode == RhsMode::local_plain      ? RatioMode::alpha4
                          : est.mode == RhsMode::local_weighted ? RatioMode::plain
                                                                : triple.native_ratio_mode();
  bundle.gamma_system = check_gamma_system(triple, grid, ratio, est.slack);
  if (!bundle.admissibility.pass() || !bundle.gamma_system.pass()) {
    bundle.verdict = "FAIL";
    bundle.failed_stage = "admissibility";
    return bundle;
  }

  // Stage: solve.
  const auto snaps = config.snapshot_times();
  SolveOptions sopts;
  sopts.safety = config.safety();
  bundle.trace = solve(model, std::move(v0), pme, config.t_start(), config.t_end(), snaps, sopts);
  bundle.max_principle_violation = bundle.trace->max_principle_violation();

  // Stage: estimate verification.
  VerifyOptions vopts;
  vopts.mode = est.mode;
  vopts.R = est.radius;
  vopts.C = est.constant;
  vopts.condition_slack = est.slack;
  bundle.estimate = verify_estimate(*bundle.trace, triple, vopts);
  if (!bundle.estimate->pass) {
    bundle.verdict = "FAIL";
    bundle.failed_stage = "estimate";
    return bundle;
  }

  // Stage: lemma residual (optional).
  if (est.lemma_residual) {
    bundle.lemma = lemma_residual(*bundle.trace, triple, env.K);
    // Discretization tolerance scaled by the step sizes; the G inequality is
    // audited as stated, so a genuinely negative continuum margin fails here.
    const double h = model.grid().spacing;
    const double dt = snaps.size() > 1 ? snaps[1] - snaps[0] : h;
    double gscale = 1.0;
    for (const auto& row : bundle.estimate->series.rows)
      gscale = std::max(gscale, std::abs(row.G));
    bundle.lemma_tolerance = 10.0 * (h + dt) * gscale;
    if (!(bundle.lemma->min_margin >= -bundle.lemma_tolerance)) {
      bundle.verdict = "FAIL";
      bundle.failed_stage = "lemma_residual";
      return bundle;
    }
  }

  bundle.verdict = "PASS";
  return bundle;
}

bool SweepResult::pass() const {
  for (const auto& r : rows)
    if (r.verdict != "PASS") return false;
  return true;
}

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("axis must be key=v1,v2,..., got '" + spec + "'");
  SweepAxis axis;
  axis.key = spec.substr(0, eq);
  std::istringstream ss(spec.substr(eq + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) axis.values.push_back(tok);
  }
  if (axis.values.empty()) throw std::invalid_argument("axis '" + axis.key + "' has no values");
  return axis;
}

SweepResult sweep(const RunConfig& base, const std::vector<SweepAxis>& axes, int jobs,
                  std::size_t cap) {
  if (axes.empty()) throw std::invalid_argument("sweep: no axes given");
  for (const auto& a : axes)
    if (a.values.empty()) throw std::invalid_argument("sweep: axis '" + a.key + "' is empty");

  std::size_t total = 1;
  for (const auto& a : axes) {
    total *= a.values.size();
    if (total > cap)
      throw std::invalid_argument("sweep: " + std::to_string(total) + " runs exceed the cap of " +
                                  std::to_string(cap));
  }

  // Materialize configs in lexicographic axis order.
  std::vector<RunConfig> configs;
  std::vector<std::vector<std::string>> values(total);
  configs.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    RunConfig cfg = base;
    std::size_t rem = idx;
    std::vector<std::string> vals(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const std::size_t k = rem % axes[a].values.size();
      rem /= axes[a].values.size();
      vals[a] = axes[a].values[k];
      cfg.set(axes[a].key, axes[a].values[k]);
    }
    values[idx] = std::move(vals);
    configs.push_back(std::move(cfg));
  }

  SweepResult result;
  result.axes = axes;
  result.bundles.resize(total);
  std::vector<std::exception_ptr> errors(total);

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      try {
        result.bundles[i] = run(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < total; ++i) {
    const auto& b = result.bundles[i];
    SweepRow row;
    row.values = values[i];
    row.verdict = b.verdict;
    if (b.estimate) {
      row.c_star = b.estimate->c_star;
      double mmin = std::numeric_limits<double>::infinity();
      for (const auto& r : b.estimate->series.rows) mmin = std::min(mmin, r.margin);
      row.min_margin = mmin;
    } else {
      row.c_star = std::numeric_limits<double>::quiet_NaN();
      row.min_margin = std::numeric_limits<double>::quiet_NaN();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string estimate_csv(const ReportBundle& bundle) {
  if (!bundle.estimate) throw std::invalid_argument("bundle has no estimate series");
  std::ostringstream out;
  out << kEstimateCsvHeader << "\n";
  for (const auto& r : bundle.estimate->series.rows) {
    out << format_double(r.t) << ',' << format_double(r.sup_F) << ','
        << format_double(r.sup_bare) << ',' << format_double(r.G) << ','
        << format_double(r.rhs.total()) << ',' << format_double(r.rhs.local) << ','
        << format_double(r.rhs.cutoff) << ',' << format_double(r.rhs.curv1) << ','
        << format_double(r.rhs.curv2) << ',' << format_double(r.margin) << ','
        << format_double(r.c_star) << "\n";
  }
  return out.str();
}

std::string solution_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "x";
  for (const auto& s : trace.snapshots) out << ",v@t=" << format_double(s.t);
  out << "\n";
  for (int i = 0; i < trace.model.size(); ++i) {
    out << format_double(trace.model.coord(i));
    for (const auto& s : trace.snapshots) out << ',' << format_double(s.v[i]);
    out << "\n";
  }
  return out.str();
}

std::string bundle_json(const ReportBundle& bundle) {
  json root;
  root["provenance"] = {{"config_hash", bundle.config_hash}, {"version", bundle.version}};
  if (!bundle.timestamp.empty()) root["provenance"]["timestamp"] = bundle.timestamp;
  {
    json cfg;
    std::istringstream lines(bundle.config.canonical_text());
    std::string line;
    while (std::getline(lines, line)) {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 3);
    }
    root["config"] = cfg;
  }
  root["verdict"] = bundle.verdict;
  if (!bundle.failed_stage.empty()) root["failed_stage"] = bundle.failed_stage;
  root["conditions"] = {{"admissibility", condition_json(bundle.admissibility)},
                        {"gamma_system", condition_json(bundle.gamma_system)}};
  if (bundle.trace) {
    root["solve"] = {{"steps", bundle.trace->steps.size()},
                     {"snapshots", bundle.trace->snapshots.size()},
                     {"pressure_bound", bundle.trace->env.M},
                     {"ricci_bound", bundle.trace->env.K},
                     {"max_principle_violation", bundle.max_principle_violation}};
  }
  if (bundle.estimate) {
    const auto& est = *bundle.estimate;
    json rows = json::array();
    for (const auto& r : est.series.rows) {
      rows.push_back({{"t", r.t},
                      {"sup_F", r.sup_F},
                      {"sup_bare", r.sup_bare},
                      {"G", r.G},
                      {"rhs_total", r.rhs.total()},
                      {"rhs_local", r.rhs.local},
                      {"rhs_cutoff", r.rhs.cutoff},
                      {"rhs_curv1", r.rhs.curv1},
                      {"rhs_curv2", r.rhs.curv2},
                      {"margin", r.margin},
                      {"C_star", r.c_star}});
    }
    root["estimate"] = {{"pass", est.pass},
                        {"C_star", std::isfinite(est.c_star) ? json(est.c_star) : json("inf")},
                        {"bare_violations", est.bare_violations},
                        {"rows", rows}};
  }
  if (bundle.lemma) {
    const auto& lem = *bundle.lemma;
    root["lemma_residual"] = {
        {"min_margin", lem.min_margin},
        {"t_at_min", lem.t_at_min},
        {"x_at_min", lem.x_at_min},
        {"tolerance", bundle.lemma_tolerance},
        {"positive_g_points", lem.positive_g_points},
        {"min_margin_positive_g", std::isfinite(lem.min_margin_positive_g)
                                      ? json(lem.min_margin_positive_g)
                                      : json("vacuous")}};
  }
  return root.dump(2) + "\n";
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::ostringstream out;
  for (const auto& a : result.axes) out << a.key << ',';
  out << "verdict,C_star,min_margin\n";
  for (const auto& r : result.rows) {
    for (const auto& v : r.values) out << v << ',';
    out << r.verdict << ',' << format_double(r.c_star) << ',' << format_double(r.min_margin)
        << "\n";
  }
  return out.str();
}

std::vector<std::filesystem::path> emit(const ReportBundle& bundle,
                                        const std::filesystem::path& dir) {
  const auto settings = bundle.config.output();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::invalid_argument("cannot create output dir " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + p.string());
    out << text;
    written.push_back(p);
  };
  if (settings.csv) {
    if (bundle.estimate) write(dir / "estimate.csv", estimate_csv(bundle));
    if (bundle.trace) write(dir / "solution.csv", solution_csv(*bundle.trace));
  }
  if (settings.json) write(dir / "report.json", bundle_json(bundle));
  return written;
}

int exit_code(const ReportBundle& bundle) { return bundle.verdict == "PASS" ? 0 : 1; }

}  // namespace pmelab
