#pragma once

// Independent ground truth: the self-similar source solution in pressure
// form, manufactured solutions with their exact forcing, and convergence
// order bookkeeping. Nothing here touches the solver.

#include <functional>
#include <span>
#include <vector>

#include "pmelab/geometry.hpp"

namespace pmelab {

// Pressure of the self-similar source solution on the line (n = 1 supported):
//   v(x,t) = t^{-k(m-1)} * ( b - (k/(2n)) x^2 t^{-2k/n} )_+ ,
//   k = n / (n(m-1) + 2).
// Quadratic in x inside its support, so its Laplacian there is x-independent.
struct BarenblattPressure {
  double m = 2.0;
  int n = 1;
  double b = 1.0;  // profile height parameter

  double k() const { return n / (n * (m - 1.0) + 2.0); }
  double value(double x, double t) const;  // throws std::domain_error for t <= 0
  double support_halfwidth(double t) const;
  double laplacian_inside(double t) const;  // spatially constant
  // |v_t - (m-1) v v_xx - (v_x)^2| by central finite differences at step h,
  // evaluated inside the support.
  double pde_residual_fd(double x, double t, double h = 1e-4) const;
  // Max |residual| over `samples` points spread over the support interior at
  // time t; gates every use of this oracle.
  double self_test(double t = 1.0, int samples = 100) const;
};

// Closed-form target fields for forced (manufactured-solution) runs.
class ManufacturedSolution {
 public:
  static ManufacturedSolution constant(double c);
  // base + amp * exp(-t) sin(x), for flat models
  static ManufacturedSolution flat_sine(double base = 2.0, double amp = 1.0);
  // base + amp * exp(-t) cos(theta), for the shrinking sphere
  static ManufacturedSolution sphere_cosine(double base = 2.0, double amp = 1.0);

  double value(double x, double t) const;
  double time_derivative(double x, double t) const;
  double laplacian(const ManifoldModel& model, double x, double t) const;
  double gradient_sq(const ManifoldModel& model, double x, double t) const;
  std::vector<double> sample(const ManifoldModel& model, double t) const;

  double min_value() const { return base_ - std::abs(amp_); }

 private:
  enum class Kind { constant, flat_sine, sphere_cosine };
  Kind kind_ = Kind::constant;
  double base_ = 1.0, amp_ = 0.0;
};

// forcing(x, t) = v*_t - (m-1) v* lap v* - |grad v*|^2 with analytic
// derivatives and the model's exact metric scale. Throws if v* can touch 0.
std::function<double(double, double)> mms_forcing(const ManufacturedSolution& target,
                                                  const ManifoldModel& model,
                                                  double m);

// Cross-check of the analytic forcing against finite differences of v*.
double mms_forcing_fd_residual(const ManufacturedSolution& target,
                               const ManifoldModel& model, double m,
                               double x, double t, double h = 1e-4);

struct ConvergenceRow {
  int resolution = 0;
  double error = 0.0;
  double order = 0.0;  // log2(e_prev / e_this); NaN for the first row
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double median_order = 0.0;
  bool monotone = true;  // false flags non-decreasing errors
};

ConvergenceTable convergence_order(std::span<const int> resolutions,
                                   std::span<const double> errors);

}  // namespace pmelab
