#pragma once

// Background geometries whose Ricci flow is known in closed form, reduced to
// 1D grids: flat circle/torus (static metric) and the homothetically
// shrinking round 2-sphere restricted to latitude-symmetric fields.

#include <utility>
#include <vector>

namespace pmelab {

enum class ModelKind { flat_circle, flat_torus, shrinking_sphere };

const char* model_kind_name(ModelKind k);

struct GridSpec {
  int points = 0;
  double length = 0.0;   // circle: [0, L) periodic; sphere: [0, pi]
  bool periodic = false;
  double spacing = 0.0;  // L/N (periodic) or length/(N-1)
};

class ManifoldModel {
 public:
  ManifoldModel() = default;  // placeholder; build with the factories below
  static ManifoldModel flat_circle(double length, int points);
  // Fields vary in one coordinate only; the second dimension enters through
  // the dimension-dependent constants, not the stencils.
  static ManifoldModel flat_torus(double length, int points);
  static ManifoldModel shrinking_sphere(double radius0, int points);

  ModelKind kind() const { return kind_; }
  int dimension() const { return n_; }
  const GridSpec& grid() const { return grid_; }
  int size() const { return grid_.points; }
  double coord(int i) const { return i * grid_.spacing; }
  double radius0() const { return radius0_; }

  // g(t) = scale(t) * g_ref; flat models are static. Throws ExtinctionError
  // once the sphere's scale r0^2 - 2t is exhausted.
  double metric_scale(double t) const;
  double extinction_time() const;  // +inf for flat models

  // |Ric(t)| w.r.t. g(t): 0 flat, 1/(r0^2 - 2t) on the sphere.
  double ricci_bound(double t) const;
  double ricci_bound_sup(double t0, double t1) const;

  void laplacian(const std::vector<double>& f, double t, std::vector<double>& out) const;
  void gradient_sq(const std::vector<double>& f, double t, std::vector<double>& out) const;
  // <grad f, grad g>_{g(t)} pointwise.
  void gradient_dot(const std::vector<double>& f, const std::vector<double>& g, double t,
                    std::vector<double>& out) const;

  std::vector<double> laplacian(const std::vector<double>& f, double t) const;
  std::vector<double> gradient_sq(const std::vector<double>& f, double t) const;
  std::vector<double> gradient_dot(const std::vector<double>& f, const std::vector<double>& g,
                                   double t) const;

  // Geodesic distance between coordinates; exact on the circle and for
  // latitude-symmetric sphere configurations (centers at a pole).
  double distance(double x, double x0, double t) const;

  // Dual-consistent cell volumes: the discrete Laplacian telescopes against
  // them, so sum(lap f * w) vanishes to rounding on any field.
  std::vector<double> volume_weights(double t) const;

  // [begin, end) of grid indices away from the pole-regularized stencils
  // (3h exclusion); the whole grid on flat models.
  std::pair<int, int> interior_range() const;

  // Largest admissible cutoff outer radius 2R at time t.
  double injectivity_scale(double t) const;

 private:
  void check_field(const std::vector<double>& f) const;

  ModelKind kind_ = ModelKind::flat_circle;
  int n_ = 1;
  double radius0_ = 0.0;
  GridSpec grid_;
};

}  // namespace pmelab
