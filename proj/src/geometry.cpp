#include "pmelab/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pmelab/errors.hpp"

namespace pmelab {

namespace {
constexpr double kPi = std::numbers::pi;
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::flat_circle: return "flat_circle";
    case ModelKind::flat_torus: return "flat_torus";
    case ModelKind::shrinking_sphere: return "shrinking_sphere";
  }
  return "?";
}

ManifoldModel ManifoldModel::flat_circle(double length, int points) {
  if (!(length > 0.0)) throw std::invalid_argument("flat_circle: length must be > 0");
  if (points < 16) throw std::invalid_argument("grid: need at least 16 points");
  ManifoldModel m;
  m.kind_ = ModelKind::flat_circle;
  m.n_ = 1;
  m.grid_ = {points, length, true, length / points};
  return m;
}

ManifoldModel ManifoldModel::flat_torus(double length, int points) {
  ManifoldModel m = flat_circle(length, points);
  m.kind_ = ModelKind::flat_torus;
  m.n_ = 2;
  return m;
}

ManifoldModel ManifoldModel::shrinking_sphere(double radius0, int points) {
  if (!(radius0 > 0.0)) throw std::invalid_argument("shrinking_sphere: radius0 must be > 0");
  if (points < 16) throw std::invalid_argument("grid: need at least 16 points");
  ManifoldModel m;
  m.kind_ = ModelKind::shrinking_sphere;
  m.n_ = 2;
  m.radius0_ = radius0;
  m.grid_ = {points, kPi, false, kPi / (points - 1)};
  return m;
}

double ManifoldModel::metric_scale(double t) const {
  if (kind_ != ModelKind::shrinking_sphere) return 1.0;
  const double s = radius0_ * radius0_ - 2.0 * t;
  if (!(s > 0.0)) throw ExtinctionError(t);
  return s;
}

double ManifoldModel::extinction_time() const {
  if (kind_ != ModelKind::shrinking_sphere) return std::numeric_limits<double>::infinity();
  return 0.5 * radius0_ * radius0_;
}

double ManifoldModel::ricci_bound(double t) const {
  if (kind_ != ModelKind::shrinking_sphere) return 0.0;
  return 1.0 / metric_scale(t);
}

double ManifoldModel::ricci_bound_sup(double t0, double t1) const {
  if (kind_ != ModelKind::shrinking_sphere) return 0.0;
  if (!(t1 >= t0)) throw std::invalid_argument("ricci_bound_sup: t1 < t0");
  return ricci_bound(t1);  // monotone in t
}

void ManifoldModel::check_field(const std::vector<double>& f) const {
  if (static_cast<int>(f.size()) != grid_.points)
    throw std::invalid_argument("field length " + std::to_string(f.size()) +
                                " does not match grid (" + std::to_string(grid_.points) + ")");
}

void ManifoldModel::laplacian(const std::vector<double>& f, double t,
                              std::vector<double>& out) const {
  check_field(f);
  const int N = grid_.points;
  const double h = grid_.spacing;
  out.resize(N);
  if (kind_ != ModelKind::shrinking_sphere) {
    const double inv_h2 = 1.0 / (h * h);
    for (int i = 0; i < N; ++i) {
      const double fp = f[(i + 1) % N];
      const double fm = f[(i + N - 1) % N];
      out[i] = (fp + fm - 2.0 * f[i]) * inv_h2;
    }
    return;
  }
  // Flux form of (1/s)(f_tt + cot(theta) f_t) on [0, pi]; telescopes exactly
  // against the volume weights. Poles use the L'Hopital stencil with a
  // reflection ghost (f_theta = 0 at the poles).
  const double s = metric_scale(t);
  const double inv = 1.0 / (s * h * h);
  for (int i = 1; i + 1 < N; ++i) {
    const double th = i * h;
    const double ap = std::sin(th + 0.5 * h);
    const double am = std::sin(th - 0.5 * h);
    out[i] = (ap * (f[i + 1] - f[i]) - am * (f[i] - f[i - 1])) * inv / std::sin(th);
  }
  out[0] = 4.0 * (f[1] - f[0]) * inv;
  out[N - 1] = 4.0 * (f[N - 2] - f[N - 1]) * inv;
}

void ManifoldModel::gradient_dot(const std::vector<double>& f, const std::vector<double>& g,
                                 double t, std::vector<double>& out) const {
  check_field(f);
  check_field(g);
  const int N = grid_.points;
  const double inv2h = 1.0 / (2.0 * grid_.spacing);
  out.resize(N);
  if (kind_ != ModelKind::shrinking_sphere) {
    for (int i = 0; i < N; ++i) {
      const double df = (f[(i + 1) % N] - f[(i + N - 1) % N]) * inv2h;
      const double dg = (g[(i + 1) % N] - g[(i + N - 1) % N]) * inv2h;
      out[i] = df * dg;
    }
    return;
  }
  const double inv_s = 1.0 / metric_scale(t);
  for (int i = 1; i + 1 < N; ++i) {
    const double df = (f[i + 1] - f[i - 1]) * inv2h;
    const double dg = (g[i + 1] - g[i - 1]) * inv2h;
    out[i] = df * dg * inv_s;
  }
  out[0] = 0.0;  // symmetric fields have vanishing gradient at the poles
  out[N - 1] = 0.0;
}

void ManifoldModel::gradient_sq(const std::vector<double>& f, double t,
                                std::vector<double>& out) const {
  gradient_dot(f, f, t, out);
}

std::vector<double> ManifoldModel::laplacian(const std::vector<double>& f, double t) const {
  std::vector<double> out;
  laplacian(f, t, out);
  return out;
}
std::vector<double> ManifoldModel::gradient_sq(const std::vector<double>& f, double t) const {
  std::vector<double> out;
  gradient_sq(f, t, out);
  return out;
}
std::vector<double> ManifoldModel::gradient_dot(const std::vector<double>& f,
                                                const std::vector<double>& g, double t) const {
  std::vector<double> out;
  gradient_dot(f, g, t, out);
  return out;
}

double ManifoldModel::distance(double x, double x0, double t) const {
  if (kind_ != ModelKind::shrinking_sphere) {
    const double L = grid_.length;
    double d = std::fmod(std::abs(x - x0), L);
    return std::min(d, L - d);
  }
  return std::sqrt(metric_scale(t)) * std::abs(x - x0);
}

std::vector<double> ManifoldModel::volume_weights(double t) const {
  const int N = grid_.points;
  const double h = grid_.spacing;
  std::vector<double> w(N);
  if (kind_ != ModelKind::shrinking_sphere) {
    for (int i = 0; i < N; ++i) w[i] = h;
    return w;
  }
  const double s = metric_scale(t);
  const double two_pi_s = 2.0 * kPi * s;
  for (int i = 1; i + 1 < N; ++i) w[i] = two_pi_s * std::sin(i * h) * h;
  // Pole cells: chosen so the flux-form Laplacian telescopes exactly
  // (~ the spherical cap area 2*pi*s*(1 - cos(h/2)) to leading order).
  w[0] = w[N - 1] = 0.5 * kPi * s * h * std::sin(0.5 * h);
  return w;
}

std::pair<int, int> ManifoldModel::interior_range() const {
  if (kind_ != ModelKind::shrinking_sphere) return {0, grid_.points};
  return {3, grid_.points - 3};
}

double ManifoldModel::injectivity_scale(double t) const {
  if (kind_ != ModelKind::shrinking_sphere) return 0.5 * grid_.length;
  return std::sqrt(metric_scale(t)) * kPi;
}

}  // namespace pmelab
