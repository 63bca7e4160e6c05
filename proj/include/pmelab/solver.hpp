#pragma once

// Explicit time integration of the pressure equation
//   v_t = (m-1) v lap_{g(t)} v + |grad v|^2_{g(t)}  (+ optional forcing)
// with positivity checks and CFL-limited adaptive steps.

#include <functional>
#include <span>
#include <vector>

#include "pmelab/families.hpp"
#include "pmelab/geometry.hpp"

namespace pmelab {

using Forcing = std::function<double(double x, double t)>;

struct PressureField {
  std::vector<double> v;
  double t = 0.0;
};

struct StepRecord {
  double t = 0.0, dt = 0.0;
  double min_before = 0.0, max_before = 0.0;
  double min_after = 0.0, max_after = 0.0;
};

struct RunTrace {
  ManifoldModel model;
  PmeParameters pme;
  FlowEnv env;  // K: Ricci sup over the span; M: max of v0; T: t_end
  bool forced = false;
  std::vector<PressureField> snapshots;
  std::vector<StepRecord> steps;

  // Worst per-step relative max-increase / min-decrease over the run;
  // meaningful for unforced runs, where it realizes v <= M = max v0.
  double max_principle_violation() const;
};

// v = (m/(m-1)) u^{m-1} and its inverse.
std::vector<double> to_pressure(std::span<const double> u, double m);
std::vector<double> from_pressure(std::span<const double> v, double m);

// safety * h^2_eff / ((m-1) max v + eps); h^2_eff carries the metric scale on
// the sphere. eps = 1e-30 only guards the division as v -> 0.
double stable_dt(const ManifoldModel& model, const PressureField& field, double m,
                 double safety = 0.2);

// One explicit Euler update. Checks finiteness and positivity afterwards.
PressureField step(const ManifoldModel& model, const PressureField& field, double dt,
                   double m, const Forcing& forcing = nullptr);

struct SolveOptions {
  double safety = 0.2;
  Forcing forcing;
};

// Adaptive-dt integration with exact hits at the requested snapshot times.
RunTrace solve(const ManifoldModel& model, std::vector<double> v0, const PmeParameters& pme,
               double t_start, double t_end, std::span<const double> snapshot_times,
               const SolveOptions& opts = {});

}  // namespace pmelab
