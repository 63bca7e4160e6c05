#pragma once

// Experiment orchestration: the admissibility -> solve -> verify pipeline,
// parameter sweeps, and CSV/JSON report emission with a strict exit-code
// discipline (0 pass, 1 mathematical violation, 2 usage, 3 numerical).

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pmelab/config.hpp"
#include "pmelab/estimates.hpp"
#include "pmelab/solver.hpp"

namespace pmelab {

struct ReportBundle {
  RunConfig config;
  std::string config_hash;
  std::string version;
  std::string timestamp;  // empty unless stamping was requested

  ConditionReport admissibility;
  ConditionReport gamma_system;
  std::optional<RunTrace> trace;
  std::optional<VerifyReport> estimate;
  std::optional<LemmaResidual> lemma;
  double lemma_tolerance = 0.0;
  double max_principle_violation = 0.0;

  std::string verdict;      // "PASS" or "FAIL"
  std::string failed_stage; // first failing stage, empty on PASS
};

// Full pipeline for one config. Math violations yield verdict FAIL (not an
// exception); numerical failures propagate as NumericalError, config misuse
// as std::invalid_argument / std::domain_error.
ReportBundle run(const RunConfig& config);

struct SweepAxis {
  std::string key;                  // e.g. "pme.m" or "family.kind"
  std::vector<std::string> values;
};

struct SweepRow {
  std::vector<std::string> values;  // in axis order
  std::string verdict;
  double c_star = 0.0;
  double min_margin = 0.0;  // worst estimate margin over snapshots
};

struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<ReportBundle> bundles;  // in lexicographic axis order
  std::vector<SweepRow> rows;
  bool pass() const;
};

// Cartesian product of the axes over the base config; runs are independent
// and execute on `jobs` threads, results ordered by axis index regardless of
// completion order.
SweepResult sweep(const RunConfig& base, const std::vector<SweepAxis>& axes,
                  int jobs = 1, std::size_t cap = 10000);

SweepAxis parse_axis(const std::string& spec);  // "key=v1,v2,v3"

// The documented estimate-series schema.
inline constexpr const char* kEstimateCsvHeader =
    "t,sup_F,sup_bare,G,rhs_total,rhs_local,rhs_cutoff,rhs_curv1,rhs_curv2,margin,C_star";

std::string estimate_csv(const ReportBundle& bundle);
std::string solution_csv(const RunTrace& trace);
std::string bundle_json(const ReportBundle& bundle);
std::string sweep_summary_csv(const SweepResult& result);

// Writes estimate.csv / solution.csv / report.json (per output settings)
// under dir; returns the written paths.
std::vector<std::filesystem::path> emit(const ReportBundle& bundle,
                                        const std::filesystem::path& dir);

int exit_code(const ReportBundle& bundle);  // 0 or 1

// Shared by the CLI and tests: deterministic double formatting (%.17g).
std::string format_double(double x);

}  // namespace pmelab
