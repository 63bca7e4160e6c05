#pragma once

// The estimated quantity F = |grad v|^2/v - alpha v_t/v - alpha phi and its
// time-weighted version G = gamma F along a run; the local/global estimate
// right-hand sides with a calibratable constant; the discrete residual of the
// G differential inequality; compactly supported cutoff profiles; and the
// classical Euclidean sharpness check.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pmelab/families.hpp"
#include "pmelab/geometry.hpp"
#include "pmelab/solver.hpp"

namespace pmelab {

enum class RhsMode { local_plain, local_weighted, global_bound };

const char* rhs_mode_name(RhsMode m);

struct RhsBreakdown {
  RhsMode mode = RhsMode::global_bound;
  double a = 0.0;  // n(m-1)/(n(m-1)+1)
  double C = 0.0;
  double R = 0.0;  // 0 in global mode
  double local = 0.0;   // C a alpha^2 [ (1+sqrt(K)R)/R^2 + K ]   (global: C a alpha^2 K)
  double cutoff = 0.0;  // C a M m^2 / (R^2 gamma), alpha^4-weighted in local_weighted
  double curv1 = 0.0;   // alpha^2 K sqrt(a(m-1))
  double curv2 = 0.0;   // K alpha^2 sqrt(a n) / (m-1)
  double total() const { return local + cutoff + curv1 + curv2; }
  // The C-proportional part and the C-independent part, for calibration.
  double c_coefficient() const { return C != 0.0 ? (local + cutoff) / C : 0.0; }
  double c_free() const { return curv1 + curv2; }
};

RhsBreakdown local_rhs(const PmeParameters& pme, const FlowEnv& env,
                         const FunctionTriple& triple, double R, double C, double t,
                         RhsMode mode);
RhsBreakdown global_rhs(const PmeParameters& pme, const FlowEnv& env,
                           const FunctionTriple& triple, double C, double t);

struct EstimateRow {
  double t = 0.0;
  double sup_F = 0.0;     // over the model's interior mask
  double sup_bare = 0.0;  // |grad v|^2/v - alpha v_t/v  (= F + alpha phi)
  double G = 0.0;         // gamma(t) * sup_F
  RhsBreakdown rhs;
  double margin = std::numeric_limits<double>::quiet_NaN();  // rhs.total() - sup_F
  double c_star = std::numeric_limits<double>::quiet_NaN();  // per-time minimal C
};

struct EstimateSeries {
  std::vector<EstimateRow> rows;
};

// Pointwise F per snapshot with v_t taken from the PDE right side; sups over
// the interior mask. Snapshots at t <= 0 are a domain error.
EstimateSeries compute_F(const RunTrace& trace, const FunctionTriple& triple);

struct VerifyOptions {
  RhsMode mode = RhsMode::global_bound;
  double R = 0.0;           // required in the local modes
  std::optional<double> C;  // absent -> calibrate the smallest passing C*
  double condition_slack = 1e-12;
  int condition_grid_points = 200;
};

struct VerifyReport {
  EstimateSeries series;
  bool pass = false;
  double c_star = 0.0;
  // Diagnostic only: snapshots where the bare quantity (without -alpha phi)
  // exceeds the RHS; expected for 1/t-singular phi at small t.
  int bare_violations = 0;
  ConditionReport admissibility;
  ConditionReport gamma_system;
};

// Refuses (std::invalid_argument) unless the triple passes the admissibility
// checks. With C given, PASS iff every margin >= 0; without C, calibrates C*.
VerifyReport verify_estimate(const RunTrace& trace, const FunctionTriple& triple,
                             const VerifyOptions& opts);

struct LemmaResidual {
  std::vector<double> times;  // interior snapshot times (centered d/dt)
  std::vector<double> min_margin_per_time;
  double min_margin = std::numeric_limits<double>::infinity();
  double t_at_min = 0.0;
  double x_at_min = 0.0;
  // Restricted to grid points with G > 0, where the squared-Laplacian bound
  // behind the inequality applies; +inf (vacuous) when no such points occur.
  double min_margin_positive_g = std::numeric_limits<double>::infinity();
  long positive_g_points = 0;
};

// Discrete margin RHS - LG of the G inequality, with dG/dt by centered
// differences across uniformly spaced snapshots and everything else from the
// model's discrete operators. Needs >= 3 snapshots.
LemmaResidual lemma_residual(const RunTrace& trace, const FunctionTriple& triple, double K);

// Radial bump: 1 on [0,1], (1-(r-1)^2)^2 on [1,2], 0 beyond; C^1 at the
// junctions with |psi'|^2/psi = 16 (r-1)^2 <= 16.
double cutoff_shape(double r);
double cutoff_shape_derivative(double r);

struct CutoffProfile {
  double R = 0.0;
  double center = 0.0;
  std::vector<double> chi;
  std::vector<double> grad_sq_over_chi;  // discrete; outer-junction stencils masked
  std::vector<double> neg_laplacian;     // discrete
};

CutoffProfile build_cutoff(const ManifoldModel& model, double x0, double R, double t);

struct CutoffConstants {
  double c1 = 0.0;  // R^2 sup |grad chi|^2 / chi
  double c2 = 0.0;  // R^2 sup(-lap chi) / (1 + sqrt(K) R)
  bool pass = false;
};

CutoffConstants verify_cutoff(const CutoffProfile& profile, const ManifoldModel& model,
                              double t, double K, double c_max = 32.0);

using InteriorMask = std::function<bool(double x, double t)>;

struct SharpnessSeries {
  std::vector<double> times;
  std::vector<double> sup_value;  // sup_x of -(m-1) lap v * t
  double a_euclidean = 0.0;
  double max_ratio = 0.0;  // max over t of sup_value / a_euclidean
};

// Classical Euclidean sharpness: on flat models, -(m-1) lap v * t stays below
// the n(m-1)/(n(m-1)+2) constant, with equality on the self-similar solution.
SharpnessSeries classical_ab_check(const RunTrace& trace, const InteriorMask& mask = nullptr);

}  // namespace pmelab
