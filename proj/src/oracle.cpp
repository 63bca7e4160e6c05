#include "pmelab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmelab {

double BarenblattPressure::value(double x, double t) const {
  if (!(t > 0.0)) throw std::domain_error("barenblatt: t must be > 0");
  const double kk = k();
  const double prof = b - (kk / (2.0 * n)) * x * x * std::pow(t, -2.0 * kk / n);
  return std::max(0.0, std::pow(t, -kk * (m - 1.0)) * prof);
}

double BarenblattPressure::support_halfwidth(double t) const {
  if (!(t > 0.0)) throw std::domain_error("barenblatt: t must be > 0");
  const double kk = k();
  return std::sqrt(2.0 * n * b / kk) * std::pow(t, kk / n);
}

double BarenblattPressure::laplacian_inside(double t) const {
  if (!(t > 0.0)) throw std::domain_error("barenblatt: t must be > 0");
  const double kk = k();
  return -(kk / n) * std::pow(t, -kk * (m - 1.0) - 2.0 * kk / n);
}

double BarenblattPressure::pde_residual_fd(double x, double t, double h) const {
  const double vt = (value(x, t + h) - value(x, t - h)) / (2.0 * h);
  const double vx = (value(x + h, t) - value(x - h, t)) / (2.0 * h);
  const double vxx = (value(x + h, t) - 2.0 * value(x, t) + value(x - h, t)) / (h * h);
  return std::abs(vt - (m - 1.0) * value(x, t) * vxx - vx * vx);
}

double BarenblattPressure::self_test(double t, int samples) const {
  // Stay clear of the support edge, where the kink defeats finite differences.
  const double xi = support_halfwidth(t);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = -0.9 * xi + 1.8 * xi * (i + 0.5) / samples;
    worst = std::max(worst, pde_residual_fd(x, t));
  }
  return worst;
}

ManufacturedSolution ManufacturedSolution::constant(double c) {
  ManufacturedSolution s;
  s.kind_ = Kind::constant;
  s.base_ = c;
  return s;
}

ManufacturedSolution ManufacturedSolution::flat_sine(double base, double amp) {
  ManufacturedSolution s;
  s.kind_ = Kind::flat_sine;
  s.base_ = base;
  s.amp_ = amp;
  return s;
}

ManufacturedSolution ManufacturedSolution::sphere_cosine(double base, double amp) {
  ManufacturedSolution s;
  s.kind_ = Kind::sphere_cosine;
  s.base_ = base;
  s.amp_ = amp;
  return s;
}

double ManufacturedSolution::value(double x, double t) const {
  switch (kind_) {
    case Kind::constant: return base_;
    case Kind::flat_sine: return base_ + amp_ * std::exp(-t) * std::sin(x);
    case Kind::sphere_cosine: return base_ + amp_ * std::exp(-t) * std::cos(x);
  }
  return base_;
}

double ManufacturedSolution::time_derivative(double x, double t) const {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::flat_sine: return -amp_ * std::exp(-t) * std::sin(x);
    case Kind::sphere_cosine: return -amp_ * std::exp(-t) * std::cos(x);
  }
  return 0.0;
}

double ManufacturedSolution::laplacian(const ManifoldModel& model, double x, double t) const {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::flat_sine:
      if (model.kind() == ModelKind::shrinking_sphere)
        throw std::invalid_argument("flat_sine target needs a flat model");
      return -amp_ * std::exp(-t) * std::sin(x);
    case Kind::sphere_cosine:
      if (model.kind() != ModelKind::shrinking_sphere)
        throw std::invalid_argument("sphere_cosine target needs the sphere model");
      // cos(theta) is the l = 1 zonal harmonic: eigenvalue -2 on the unit sphere.
      return -2.0 * amp_ * std::exp(-t) * std::cos(x) / model.metric_scale(t);
  }
  return 0.0;
}

double ManufacturedSolution::gradient_sq(const ManifoldModel& model, double x, double t) const {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::flat_sine: {
      const double g = amp_ * std::exp(-t) * std::cos(x);
      return g * g;
    }
    case Kind::sphere_cosine: {
      const double g = amp_ * std::exp(-t) * std::sin(x);
      return g * g / model.metric_scale(t);
    }
  }
  return 0.0;
}

std::vector<double> ManufacturedSolution::sample(const ManifoldModel& model, double t) const {
  std::vector<double> out(model.size());
  for (int i = 0; i < model.size(); ++i) out[i] = value(model.coord(i), t);
  return out;
}

std::function<double(double, double)> mms_forcing(const ManufacturedSolution& target,
                                                  const ManifoldModel& model,
                                                  double m) {
  if (!(target.min_value() > 0.0))
    throw std::domain_error("mms target must stay strictly positive");
  return [target, &model, m](double x, double t) {
    return target.time_derivative(x, t) -
           (m - 1.0) * target.value(x, t) * target.laplacian(model, x, t) -
           target.gradient_sq(model, x, t);
  };
}

double mms_forcing_fd_residual(const ManufacturedSolution& target,
                               const ManifoldModel& model, double m,
                               double x, double t, double h) {
  const auto v = [&](double xx, double tt) { return target.value(xx, tt); };
  const double vt = (v(x, t + h) - v(x, t - h)) / (2.0 * h);
  const double vx = (v(x + h, t) - v(x - h, t)) / (2.0 * h);
  const double vxx = (v(x + h, t) - 2.0 * v(x, t) + v(x - h, t)) / (h * h);
  double lap, g2;
  if (model.kind() == ModelKind::shrinking_sphere) {
    const double s = model.metric_scale(t);
    lap = (vxx + vx / std::tan(x)) / s;
    g2 = vx * vx / s;
  } else {
    lap = vxx;
    g2 = vx * vx;
  }
  const double fd = vt - (m - 1.0) * v(x, t) * lap - g2;
  const auto forcing = mms_forcing(target, model, m);
  return std::abs(fd - forcing(x, t));
}

ConvergenceTable convergence_order(std::span<const int> resolutions,
                                   std::span<const double> errors) {
  if (resolutions.size() != errors.size())
    throw std::invalid_argument("convergence_order: size mismatch");
  if (resolutions.size() < 3)
    throw std::invalid_argument("convergence_order: need at least 3 resolutions");
  for (std::size_t i = 1; i < resolutions.size(); ++i)
    if (resolutions[i] <= resolutions[i - 1])
      throw std::invalid_argument("convergence_order: resolutions must increase");

  ConvergenceTable table;
  std::vector<double> orders;
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    ConvergenceRow row;
    row.resolution = resolutions[i];
    row.error = errors[i];
    if (i == 0) {
      row.order = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double ratio = double(resolutions[i]) / double(resolutions[i - 1]);
      row.order = std::log(errors[i - 1] / errors[i]) / std::log(ratio);
      orders.push_back(row.order);
      if (!(errors[i] < errors[i - 1])) table.monotone = false;
    }
    table.rows.push_back(row);
  }
  std::sort(orders.begin(), orders.end());
  const std::size_t k = orders.size();
  table.median_order = (k % 2 == 1) ? orders[k / 2] : 0.5 * (orders[k / 2 - 1] + orders[k / 2]);
  return table;
}

}  // namespace pmelab
