#pragma once

// Closed-form (alpha, phi, gamma) coefficient triples with analytic
// derivatives, plus tabulated triples, and the numerical audit of the
// admissibility systems they must satisfy.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pmelab {

struct PmeParameters {
  double m = 2.0;  // diffusion exponent, > 1
  int n = 1;       // manifold dimension, >= 1

  // n(m-1) / (n(m-1)+1), the constant entering the local estimate.
  double estimate_constant() const {
    const double q = n * (m - 1.0);
    return q / (q + 1.0);
  }
  // n(m-1) / (n(m-1)+2), the classical Euclidean sharp constant.
  double euclidean_constant() const {
    const double q = n * (m - 1.0);
    return q / (q + 2.0);
  }
  void validate() const;
};

struct FlowEnv {
  double K = 0.0;  // Ricci bound, >= 0 (units 1/time)
  double M = 1.0;  // pressure upper bound, > 0
  double T = 1.0;  // time horizon, > 0

  void validate() const;
};

enum class TripleFamily { li_yau, hamilton, li_xu, linear_li_xu, sampled };

const char* family_name(TripleFamily f);

struct TripleSample {
  double t = 0.0;
  double alpha = 0.0, alpha_prime = 0.0;
  double phi = 0.0, phi_prime = 0.0;
  double gamma = 0.0, gamma_prime = 0.0;
};

// Tabulated (t, alpha, phi, gamma) data; strictly increasing t required.
struct SampledTriple {
  std::vector<double> t, alpha, phi, gamma;

  static SampledTriple from_csv(const std::string& path);  // header: t,alpha,phi,gamma
  void validate() const;
};

// Which ratio bound is audited by check_gamma_system.
enum class RatioMode { alpha4, plain };  // gamma*alpha^4/(alpha-1)  vs  gamma/(alpha-1)

class FunctionTriple {
 public:
  static FunctionTriple li_yau(PmeParameters pme, FlowEnv env,
                               double alpha0 = 2.0, double theta = 1.0);
  static FunctionTriple hamilton(PmeParameters pme, FlowEnv env);
  static FunctionTriple li_xu(PmeParameters pme, FlowEnv env);
  // slope c in the linear family alpha = 1 + c (m-1)MKt. The c = 1 variant is
  // the one whose alpha-phi system margins are nonnegative; c = 1/3 is also
  // exposed but fails the first inequality (see check_admissibility tests).
  static FunctionTriple linear_li_xu(PmeParameters pme, FlowEnv env, double slope = 1.0);
  static FunctionTriple sampled(PmeParameters pme, FlowEnv env, SampledTriple data);

  TripleSample eval(double t) const;  // throws std::domain_error for t <= 0
  // alpha(t) - 1 without cancellation (expm1 / series forms where available).
  double alpha_minus_one(double t) const;

  TripleFamily family() const { return family_; }
  const PmeParameters& pme() const { return pme_; }
  const FlowEnv& env() const { return env_; }
  double rate() const { return (pme_.m - 1.0) * env_.M * env_.K; }  // (m-1)MK
  double alpha0() const { return alpha0_; }
  double theta() const { return theta_; }
  double slope() const { return slope_; }
  // Ratio mode matching the family's own estimate variant.
  RatioMode native_ratio_mode() const;
  std::string name() const;

 private:
  FunctionTriple() = default;

  TripleFamily family_ = TripleFamily::li_yau;
  PmeParameters pme_;
  FlowEnv env_;
  double alpha0_ = 2.0, theta_ = 1.0;  // li_yau
  double slope_ = 1.0;                 // linear_li_xu

  // sampled data with per-node derivative estimates (centered differences)
  // and precomputed monotone-cubic slopes for all six interpolants
  SampledTriple data_;
  std::vector<double> d_alpha_, d_phi_, d_gamma_;
  std::vector<double> sl_alpha_, sl_phi_, sl_gamma_, sl_da_, sl_dp_, sl_dg_;
};

// One audited inequality over a time grid. Margins are in absolute units;
// pass allows a relative slack proportional to the magnitude of the terms.
struct InequalityMargin {
  std::string name;
  double min_margin = std::numeric_limits<double>::infinity();
  double t_at_min = 0.0;
  double worst_rel = std::numeric_limits<double>::infinity();  // min of margin/scale
  double t_at_worst = 0.0;
  bool pass = true;
};

struct ConditionReport {
  std::vector<InequalityMargin> entries;
  double rel_slack = 1e-12;

  // check_gamma_system only:
  RatioMode ratio_mode = RatioMode::plain;
  double ratio_sup = std::numeric_limits<double>::quiet_NaN();
  double ratio_sup_t = std::numeric_limits<double>::quiet_NaN();
  bool ratio_finite = true;

  std::vector<std::string> notes;

  bool pass() const;
  const InequalityMargin* find(const std::string& name) const;
  std::vector<std::string> failed_names() const;
};

// 200 log-uniform points on [1e-3 T, T]; families have 1/t singularities at 0.
std::vector<double> default_condition_grid(const FlowEnv& env, int count = 200);
std::vector<double> log_grid(double t_min, double t_max, int count);

// Margins of the three alpha-phi system inequalities plus the positivity and
// monotonicity conditions, minimized over the grid.
ConditionReport check_admissibility(const FunctionTriple& triple,
                                    std::span<const double> t_grid,
                                    double rel_slack = 1e-12);

// Margin of the gamma growth condition and the sup of the
// selected ratio, reported as the empirical bound C2.
ConditionReport check_gamma_system(const FunctionTriple& triple,
                                   std::span<const double> t_grid,
                                   RatioMode mode,
                                   double rel_slack = 1e-12);

// Max over the grid and over (alpha, phi, gamma) of the relative mismatch
// between analytic derivatives and central finite differences at step fd_step.
// Guards the derivatives the condition checks rely on.
double derivative_consistency(const FunctionTriple& triple,
                              std::span<const double> t_grid,
                              double fd_step = 1e-4);

}  // namespace pmelab
