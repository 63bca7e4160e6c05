#include "pmelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmelab/errors.hpp"

namespace pmelab {

double RunTrace::max_principle_violation() const {
  double worst = 0.0;
  for (const auto& s : steps) {
    const double nrm = std::max(std::abs(s.max_after), std::abs(s.min_after));
    if (nrm == 0.0) continue;
    worst = std::max(worst, (s.max_after - s.max_before) / nrm);
    worst = std::max(worst, (s.min_before - s.min_after) / nrm);
  }
  return worst;
}

std::vector<double> to_pressure(std::span<const double> u, double m) {
  if (!(m > 1.0)) throw std::invalid_argument("to_pressure: m must be > 1");
  std::vector<double> v(u.size());
  const double c = m / (m - 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0)) throw std::domain_error("to_pressure: u must be positive");
    v[i] = c * std::pow(u[i], m - 1.0);
  }
  return v;
}

std::vector<double> from_pressure(std::span<const double> v, double m) {
  if (!(m > 1.0)) throw std::invalid_argument("from_pressure: m must be > 1");
  std::vector<double> u(v.size());
  const double c = (m - 1.0) / m;
  const double p = 1.0 / (m - 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw std::domain_error("from_pressure: v must be positive");
    u[i] = std::pow(c * v[i], p);
  }
  return u;
}

double stable_dt(const ManifoldModel& model, const PressureField& field, double m,
                 double safety) {
  if (!(safety > 0.0 && safety <= 1.0))
    throw std::invalid_argument("stable_dt: safety must lie in (0, 1]");
  const double h = model.grid().spacing;
  const double h2_eff = h * h * model.metric_scale(field.t);
  const double vmax = *std::max_element(field.v.begin(), field.v.end());
  return safety * h2_eff / ((m - 1.0) * vmax + 1e-30);
}

PressureField step(const ManifoldModel& model, const PressureField& field, double dt,
                   double m, const Forcing& forcing) {
  const int N = model.size();
  std::vector<double> lap = model.laplacian(field.v, field.t);
  std::vector<double> g2 = model.gradient_sq(field.v, field.t);

  PressureField out;
  out.t = field.t + dt;
  out.v.resize(N);
  for (int i = 0; i < N; ++i) {
    double rhs = (m - 1.0) * field.v[i] * lap[i] + g2[i];
    if (forcing) rhs += forcing(model.coord(i), field.t);
    out.v[i] = field.v[i] + dt * rhs;
  }
  for (int i = 0; i < N; ++i) {
    if (!std::isfinite(out.v[i])) throw InstabilityError(out.t);
    if (!(out.v[i] > 0.0)) throw PositivityLossError(out.t);
  }
  return out;
}

RunTrace solve(const ManifoldModel& model, std::vector<double> v0, const PmeParameters& pme,
               double t_start, double t_end, std::span<const double> snapshot_times,
               const SolveOptions& opts) {
  pme.validate();
  if (static_cast<int>(v0.size()) != model.size())
    throw std::invalid_argument("solve: v0 length does not match grid");
  for (double v : v0)
    if (!(v > 0.0)) throw std::domain_error("solve: v0 must be strictly positive");
  if (!(t_end > t_start)) throw std::invalid_argument("solve: t_end must exceed t_start");
  if (t_end >= model.extinction_time()) throw ExtinctionError(t_end);
  double prev = t_start;
  for (double ts : snapshot_times) {
    if (ts < t_start || ts > t_end)
      throw std::invalid_argument("solve: snapshot time outside the span");
    if (ts <= prev && ts != t_start)
      throw std::invalid_argument("solve: snapshot times must increase");
    prev = ts;
  }

  RunTrace trace;
  trace.model = model;
  trace.pme = pme;
  trace.env.K = model.ricci_bound_sup(t_start, t_end);
  trace.env.M = *std::max_element(v0.begin(), v0.end());
  trace.env.T = t_end;
  trace.forced = static_cast<bool>(opts.forcing);

  PressureField field{std::move(v0), t_start};
  auto minmax = [](const std::vector<double>& v) {
    auto mm = std::minmax_element(v.begin(), v.end());
    return std::pair<double, double>(*mm.first, *mm.second);
  };

  std::size_t si = 0;
  while (si < snapshot_times.size() && snapshot_times[si] <= t_start) {
    trace.snapshots.push_back(field);
    trace.snapshots.back().t = snapshot_times[si];
    ++si;
  }
  while (si < snapshot_times.size()) {
    const double target = snapshot_times[si];
    while (field.t < target) {
      double dt = stable_dt(model, field, pme.m, opts.safety);
      bool hit = false;
      if (field.t + dt >= target) {
        dt = target - field.t;  // land exactly on the snapshot
        hit = true;
      }
      const double t_before = field.t;
      const auto [min_b, max_b] = minmax(field.v);
      field = step(model, field, dt, pme.m, opts.forcing);
      if (hit) field.t = target;
      const auto [min_a, max_a] = minmax(field.v);
      trace.steps.push_back({t_before, dt, min_b, max_b, min_a, max_a});
      if (hit) break;
    }
    trace.snapshots.push_back(field);
    ++si;
  }
  return trace;
}

}  // namespace pmelab
