#include "pmelab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pmelab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* rhs_mode_name(RhsMode m) {
  switch (m) {
    case RhsMode::local_plain: return "local_plain";
    case RhsMode::local_weighted: return "local_weighted";
    case RhsMode::global_bound: return "global";
  }
  return "?";
}

RhsBreakdown local_rhs(const PmeParameters& pme, const FlowEnv& env,
                         const FunctionTriple& triple, double R, double C, double t,
                         RhsMode mode) {
  if (mode == RhsMode::global_bound) return global_rhs(pme, env, triple, C, t);
  if (!(t > 0.0)) throw std::domain_error("local_rhs: t must be > 0");
  if (!(R > 0.0)) throw std::invalid_argument("local_rhs: R must be > 0");
  if (!(C > 0.0)) throw std::invalid_argument("local_rhs: C must be > 0");
  const TripleSample s = triple.eval(t);
  if (!(s.gamma > 0.0))
    throw std::domain_error("local_rhs: gamma(t) = 0 makes the cutoff term singular");

  RhsBreakdown r;
  r.mode = mode;
  r.a = pme.estimate_constant();
  r.C = C;
  r.R = R;
  const double a2 = s.alpha * s.alpha;
  const double K = env.K;
  r.local = C * r.a * a2 * ((1.0 + std::sqrt(K) * R) / (R * R) + K);
  r.cutoff = C * r.a * env.M * pme.m * pme.m / (R * R * s.gamma);
  if (mode == RhsMode::local_weighted) r.cutoff *= a2 * a2;
  r.curv1 = a2 * K * std::sqrt(r.a * (pme.m - 1.0));
  r.curv2 = K * a2 / (pme.m - 1.0) * std::sqrt(r.a * pme.n);
  return r;
}

RhsBreakdown global_rhs(const PmeParameters& pme, const FlowEnv& env,
                           const FunctionTriple& triple, double C, double t) {
  if (!(t > 0.0)) throw std::domain_error("global_rhs: t must be > 0");
  if (!(C > 0.0)) throw std::invalid_argument("global_rhs: C must be > 0");
  const TripleSample s = triple.eval(t);
  RhsBreakdown r;
  r.mode = RhsMode::global_bound;
  r.a = pme.estimate_constant();
  r.C = C;
  const double a2 = s.alpha * s.alpha;
  const double K = env.K;
  r.local = C * r.a * a2 * K;
  r.cutoff = 0.0;
  r.curv1 = a2 * K * std::sqrt(r.a * (pme.m - 1.0));
  r.curv2 = K * a2 / (pme.m - 1.0) * std::sqrt(r.a * pme.n);
  return r;
}

namespace {

struct SnapshotQuantities {
  std::vector<double> F;     // pointwise
  std::vector<double> bare;  // pointwise
};

SnapshotQuantities pointwise_F(const ManifoldModel& model, const PressureField& field,
                               double m, const TripleSample& s) {
  const int N = model.size();
  std::vector<double> lap = model.laplacian(field.v, field.t);
  std::vector<double> g2 = model.gradient_sq(field.v, field.t);
  SnapshotQuantities q;
  q.F.resize(N);
  q.bare.resize(N);
  for (int i = 0; i < N; ++i) {
    // v_t from the PDE right side: bare = (1-alpha)|grad v|^2/v - alpha(m-1)lap v
    const double b = (1.0 - s.alpha) * g2[i] / field.v[i] - s.alpha * (m - 1.0) * lap[i];
    q.bare[i] = b;
    q.F[i] = b - s.alpha * s.phi;
  }
  return q;
}

double masked_sup(const std::vector<double>& f, std::pair<int, int> range) {
  double sup = -kInf;
  for (int i = range.first; i < range.second; ++i) sup = std::max(sup, f[i]);
  return sup;
}

}  // namespace

EstimateSeries compute_F(const RunTrace& trace, const FunctionTriple& triple) {
  EstimateSeries series;
  const auto range = trace.model.interior_range();
  for (const auto& snap : trace.snapshots) {
    if (!(snap.t > 0.0))
      throw std::domain_error("compute_F: snapshot at t <= 0 (families are singular there)");
    const TripleSample s = triple.eval(snap.t);
    const SnapshotQuantities q = pointwise_F(trace.model, snap, trace.pme.m, s);
    EstimateRow row;
    row.t = snap.t;
    row.sup_F = masked_sup(q.F, range);
    row.sup_bare = masked_sup(q.bare, range);
    row.G = s.gamma * row.sup_F;
    series.rows.push_back(row);
  }
  return series;
}

VerifyReport verify_estimate(const RunTrace& trace, const FunctionTriple& triple,
                             const VerifyOptions& opts) {
  if (opts.mode != RhsMode::global_bound && !(opts.R > 0.0))
    throw std::invalid_argument("verify_estimate: local modes need R > 0");

  VerifyReport rep;
  const auto grid = default_condition_grid(triple.env(), opts.condition_grid_points);
  rep.admissibility = check_admissibility(triple, grid, opts.condition_slack);
  const RatioMode ratio = opts.mode == RhsMode::local_plain      ? RatioMode::alpha4
                          : opts.mode == RhsMode::local_weighted ? RatioMode::plain
                                                                 : triple.native_ratio_mode();
  rep.gamma_system = check_gamma_system(triple, grid, ratio, opts.condition_slack);
  if (!rep.admissibility.pass() || !rep.gamma_system.pass()) {
    std::ostringstream msg;
    msg << "verify_estimate: triple '" << triple.name() << "' is inadmissible; violated:";
    for (const auto& n : rep.admissibility.failed_names()) msg << " " << n;
    for (const auto& n : rep.gamma_system.failed_names()) msg << " " << n;
    throw std::invalid_argument(msg.str());
  }

  rep.series = compute_F(trace, triple);
  double c_star = 0.0;
  bool feasible = true;
  for (auto& row : rep.series.rows) {
    // Split RHS(C) = C * P + Q; the margin is monotone in C.
    const RhsBreakdown probe =
        local_rhs(trace.pme, trace.env, triple, opts.R, 1.0, row.t, opts.mode);
    const double P = probe.c_coefficient();
    const double Q = probe.c_free();
    const double need = row.sup_F - Q;
    if (need <= 0.0) {
      row.c_star = 0.0;
    } else if (P > 0.0) {
      row.c_star = need / P;
    } else {
      row.c_star = kInf;
      feasible = false;
    }
    c_star = std::max(c_star, row.c_star);
  }
  rep.c_star = feasible ? c_star : kInf;

  const double c_used = opts.C.value_or(rep.c_star);
  bool all_nonneg = true;
  for (auto& row : rep.series.rows) {
    // C = 0 is only a limit value; evaluate the breakdown at a tiny C > 0.
    const double c_eval = c_used > 0.0 ? c_used : std::numeric_limits<double>::min();
    row.rhs = local_rhs(trace.pme, trace.env, triple, opts.R, c_eval, row.t, opts.mode);
    row.rhs.C = c_used;
    row.margin = row.rhs.total() - row.sup_F;
    if (!(row.margin >= 0.0)) all_nonneg = false;
    if (row.sup_bare > row.rhs.total()) ++rep.bare_violations;
  }
  rep.pass = opts.C.has_value() ? all_nonneg : std::isfinite(rep.c_star);
  return rep;
}

LemmaResidual lemma_residual(const RunTrace& trace, const FunctionTriple& triple, double K) {
  const auto& snaps = trace.snapshots;
  if (snaps.size() < 3)
    throw std::invalid_argument("lemma_residual: need at least 3 snapshots");
  const double dt = snaps[1].t - snaps[0].t;
  for (std::size_t j = 1; j < snaps.size(); ++j) {
    if (std::abs((snaps[j].t - snaps[j - 1].t) - dt) > 1e-9 * dt)
      throw std::invalid_argument("lemma_residual: snapshots must be uniformly spaced");
  }

  const ManifoldModel& model = trace.model;
  const double m = trace.pme.m;
  const double n = trace.pme.n;
  const double a = trace.pme.estimate_constant();
  const auto range = model.interior_range();

  // Pointwise G = gamma F per snapshot.
  std::vector<std::vector<double>> G(snaps.size());
  for (std::size_t j = 0; j < snaps.size(); ++j) {
    const TripleSample s = triple.eval(snaps[j].t);
    const SnapshotQuantities q = pointwise_F(model, snaps[j], m, s);
    G[j].resize(q.F.size());
    for (std::size_t i = 0; i < q.F.size(); ++i) G[j][i] = s.gamma * q.F[i];
  }

  LemmaResidual res;
  for (std::size_t j = 1; j + 1 < snaps.size(); ++j) {
    const double tj = snaps[j].t;
    const auto& vj = snaps[j].v;
    const TripleSample s = triple.eval(tj);
    const double nm1 = n * (m - 1.0);

    std::vector<double> lapG = model.laplacian(G[j], tj);
    std::vector<double> g2 = model.gradient_sq(vj, tj);
    std::vector<double> gdot = model.gradient_dot(vj, G[j], tj);

    const double bracket = s.gamma_prime / s.gamma -
                           (2.0 * s.phi / nm1 - s.alpha_prime) / s.alpha;
    const double a2 = s.alpha * s.alpha;

    double tmin = kInf;
    for (int i = range.first; i < range.second; ++i) {
      const double dGdt = (G[j + 1][i] - G[j - 1][i]) / (2.0 * dt);
      const double LG = dGdt - (m - 1.0) * vj[i] * lapG[i];
      const double gv = g2[i] / vj[i];
      const double Gi = G[j][i];
      const double rhs = -Gi * Gi / (a * a2 * s.gamma) + bracket * Gi -
                         2.0 * (s.alpha - 1.0) / (n * a2) * gv * Gi -
                         s.gamma * (m - 1.0) * (s.alpha - 1.0) * (s.alpha - 1.0) /
                             (n * a2) * gv * gv +
                         (m - 1.0) * a2 * s.gamma * K * K +
                         2.0 * s.gamma * (s.alpha - 1.0) * K * gv + 2.0 * m * gdot[i];
      const double margin = rhs - LG;
      if (margin < tmin) tmin = margin;
      if (margin < res.min_margin) {
        res.min_margin = margin;
        res.t_at_min = tj;
        res.x_at_min = model.coord(i);
      }
      if (Gi > 0.0) {
        ++res.positive_g_points;
        res.min_margin_positive_g = std::min(res.min_margin_positive_g, margin);
      }
    }
    res.times.push_back(tj);
    res.min_margin_per_time.push_back(tmin);
  }
  return res;
}

double cutoff_shape(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double q = 1.0 - (r - 1.0) * (r - 1.0);
  return q * q;
}

double cutoff_shape_derivative(double r) {
  if (r <= 1.0 || r >= 2.0) return 0.0;
  const double u = r - 1.0;
  return -4.0 * u * (1.0 - u * u);
}

CutoffProfile build_cutoff(const ManifoldModel& model, double x0, double R, double t) {
  if (!(R > 0.0)) throw std::invalid_argument("build_cutoff: R must be > 0");
  if (2.0 * R > model.injectivity_scale(t))
    throw std::invalid_argument("build_cutoff: 2R exceeds the model's injectivity scale");
  if (model.kind() == ModelKind::shrinking_sphere && x0 != 0.0 &&
      std::abs(x0 - model.grid().length) > 1e-12)
    throw std::invalid_argument("build_cutoff: sphere cutoffs must be pole-centered");

  const int N = model.size();
  CutoffProfile p;
  p.R = R;
  p.center = x0;
  p.chi.resize(N);
  for (int i = 0; i < N; ++i)
    p.chi[i] = cutoff_shape(model.distance(model.coord(i), x0, t) / R);

  std::vector<double> g2 = model.gradient_sq(p.chi, t);
  std::vector<double> lap = model.laplacian(p.chi, t);
  p.grad_sq_over_chi.assign(N, 0.0);
  p.neg_laplacian.resize(N);
  const bool periodic = model.grid().periodic;
  auto chi_at = [&](int i) {
    if (periodic) return p.chi[(i % N + N) % N];
    return p.chi[std::clamp(i, 0, N - 1)];
  };
  for (int i = 0; i < N; ++i) {
    p.neg_laplacian[i] = -lap[i];
    // A stencil spanning the outer junction measures the C^1 kink against the
    // zero region, not the profile; skip those points in the ratio.
    if (p.chi[i] > 0.0 && chi_at(i - 1) > 0.0 && chi_at(i + 1) > 0.0)
      p.grad_sq_over_chi[i] = g2[i] / p.chi[i];
  }
  return p;
}

CutoffConstants verify_cutoff(const CutoffProfile& profile, const ManifoldModel& model,
                              double t, double K, double c_max) {
  if (!(K >= 0.0)) throw std::invalid_argument("verify_cutoff: K must be >= 0");
  (void)model.metric_scale(t);  // validates t on the sphere
  CutoffConstants c;
  const double R2 = profile.R * profile.R;
  double sup_ratio = 0.0, sup_neglap = 0.0;
  for (std::size_t i = 0; i < profile.chi.size(); ++i) {
    sup_ratio = std::max(sup_ratio, profile.grad_sq_over_chi[i]);
    sup_neglap = std::max(sup_neglap, profile.neg_laplacian[i]);
  }
  c.c1 = R2 * sup_ratio;
  c.c2 = R2 * sup_neglap / (1.0 + std::sqrt(K) * profile.R);
  c.pass = c.c1 <= c_max && c.c2 <= c_max;
  return c;
}

SharpnessSeries classical_ab_check(const RunTrace& trace, const InteriorMask& mask) {
  if (trace.model.kind() == ModelKind::shrinking_sphere)
    throw std::invalid_argument("classical_ab_check: flat models only");
  SharpnessSeries out;
  out.a_euclidean = trace.pme.euclidean_constant();
  const double m = trace.pme.m;
  for (const auto& snap : trace.snapshots) {
    const std::vector<double> lap = trace.model.laplacian(snap.v, snap.t);
    double sup = -kInf;
    for (int i = 0; i < trace.model.size(); ++i) {
      if (mask && !mask(trace.model.coord(i), snap.t)) continue;
      sup = std::max(sup, -(m - 1.0) * lap[i] * snap.t);
    }
    out.times.push_back(snap.t);
    out.sup_value.push_back(sup);
    out.max_ratio = std::max(out.max_ratio, sup / out.a_euclidean);
  }
  return out;
}

}  // namespace pmelab
