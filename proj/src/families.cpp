#include "pmelab/families.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or(double x, double fallback) {
  return std::isfinite(x) ? x : fallback;
}

// Fritsch-Carlson monotone cubic (PCHIP) node slopes.
std::vector<double> pchip_slopes(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> h(n - 1), del(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = t[i + 1] - t[i];
    del[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = del[0];
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (del[i - 1] * del[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) {
      s = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) {
      s = 3.0 * d0;
    }
    return s;
  };
  d[0] = end_slope(h[0], h[1], del[0], del[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  return d;
}

double hermite_eval(double t, double t0, double t1, double y0, double y1,
                    double d0, double d1) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return y0 * (2 * s3 - 3 * s2 + 1) + y1 * (-2 * s3 + 3 * s2) +
         h * (d0 * (s3 - 2 * s2 + s) + d1 * (s3 - s2));
}

struct Interpolant {
  const std::vector<double>* t;
  const std::vector<double>* y;
  const std::vector<double>& d;

  double operator()(double tq) const {
    const auto& tt = *t;
    auto it = std::upper_bound(tt.begin(), tt.end(), tq);
    std::size_t i = (it == tt.begin()) ? 0 : std::size_t(it - tt.begin()) - 1;
    if (i + 1 >= tt.size()) i = tt.size() - 2;
    return hermite_eval(tq, tt[i], tt[i + 1], (*y)[i], (*y)[i + 1], d[i], d[i + 1]);
  }
};

// Centered-difference derivative samples at the nodes (one-sided at the ends).
std::vector<double> node_derivatives(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      d[i] = (y[1] - y[0]) / (t[1] - t[0]);
    } else if (i + 1 == n) {
      d[i] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
    } else {
      d[i] = (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1]);
    }
  }
  return d;
}

// Li-Xu alpha(t) - 1 = coth(u) - u/sinh^2(u), u = (m-1)MKt. Below the series
// threshold the direct form cancels catastrophically (both terms ~ 1/u).
constexpr double kLiXuSeriesCut = 1e-2;

double li_xu_alpha_m1(double u) {
  if (u < kLiXuSeriesCut) {
    const double u2 = u * u;
    return u * (2.0 / 3.0 - u2 * (4.0 / 45.0 - u2 * (4.0 / 315.0)));
  }
  const double sh = std::sinh(u);
  return 1.0 / std::tanh(u) - u / (sh * sh);
}

double li_xu_alpha_prime_over_x(double u) {
  // alpha' = 2x - 2(alpha-1) x coth(u); series below the cut.
  if (u < kLiXuSeriesCut) {
    const double u2 = u * u;
    return 2.0 / 3.0 - u2 * (4.0 / 15.0 - u2 * (4.0 / 63.0));
  }
  return 2.0 - 2.0 * li_xu_alpha_m1(u) / std::tanh(u);
}

}  // namespace

void PmeParameters::validate() const {
  if (!(m > 1.0) || !std::isfinite(m))
    throw std::invalid_argument("pme: exponent m must be finite and > 1");
  if (n < 1) throw std::invalid_argument("pme: dimension n must be >= 1");
}

void FlowEnv::validate() const {
  if (!(K >= 0.0) || !std::isfinite(K))
    throw std::invalid_argument("env: Ricci bound K must be finite and >= 0");
  if (!(M > 0.0) || !std::isfinite(M))
    throw std::invalid_argument("env: pressure bound M must be finite and > 0");
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument("env: horizon T must be finite and > 0");
}

const char* family_name(TripleFamily f) {
  switch (f) {
    case TripleFamily::li_yau: return "li_yau";
    case TripleFamily::hamilton: return "hamilton";
    case TripleFamily::li_xu: return "li_xu";
    case TripleFamily::linear_li_xu: return "linear_li_xu";
    case TripleFamily::sampled: return "sampled";
  }
  return "?";
}

void SampledTriple::validate() const {
  const std::size_t n = t.size();
  if (n < 3) throw std::invalid_argument("sampled triple: need at least 3 rows");
  if (alpha.size() != n || phi.size() != n || gamma.size() != n)
    throw std::invalid_argument("sampled triple: column lengths differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t[i] > 0.0)) throw std::invalid_argument("sampled triple: t must be > 0");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw std::invalid_argument("sampled triple: t must be strictly increasing");
    if (!std::isfinite(alpha[i]) || !std::isfinite(phi[i]) || !std::isfinite(gamma[i]))
      throw std::invalid_argument("sampled triple: non-finite entry");
  }
}

SampledTriple SampledTriple::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open sampled-triple CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV: " + path);
  // tolerate a UTF-8 BOM and surrounding whitespace in the header
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::string header = line;
  header.erase(std::remove_if(header.begin(), header.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               header.end());
  if (header != "t,alpha,phi,gamma")
    throw std::invalid_argument("sampled-triple CSV header must be 't,alpha,phi,gamma', got '" +
                                line + "'");
  SampledTriple out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double vals[4];
    char comma;
    for (int k = 0; k < 4; ++k) {
      if (!(row >> vals[k])) {
        throw std::invalid_argument("bad CSV row " + std::to_string(lineno) + " in " + path);
      }
      if (k < 3 && !(row >> comma && comma == ',')) {
        throw std::invalid_argument("bad CSV row " + std::to_string(lineno) + " in " + path);
      }
    }
    out.t.push_back(vals[0]);
    out.alpha.push_back(vals[1]);
    out.phi.push_back(vals[2]);
    out.gamma.push_back(vals[3]);
  }
  out.validate();
  return out;
}

FunctionTriple FunctionTriple::li_yau(PmeParameters pme, FlowEnv env, double alpha0, double theta) {
  pme.validate();
  env.validate();
  if (!(alpha0 > 1.0)) throw std::invalid_argument("li_yau: alpha0 must be > 1");
  if (!(theta > 0.0 && theta <= 2.0))
    throw std::invalid_argument("li_yau: theta must lie in (0, 2]");
  FunctionTriple f;
  f.family_ = TripleFamily::li_yau;
  f.pme_ = pme;
  f.env_ = env;
  f.alpha0_ = alpha0;
  f.theta_ = theta;
  return f;
}

FunctionTriple FunctionTriple::hamilton(PmeParameters pme, FlowEnv env) {
  pme.validate();
  env.validate();
  FunctionTriple f;
  f.family_ = TripleFamily::hamilton;
  f.pme_ = pme;
  f.env_ = env;
  return f;
}

FunctionTriple FunctionTriple::li_xu(PmeParameters pme, FlowEnv env) {
  pme.validate();
  env.validate();
  FunctionTriple f;
  f.family_ = TripleFamily::li_xu;
  f.pme_ = pme;
  f.env_ = env;
  return f;
}

FunctionTriple FunctionTriple::linear_li_xu(PmeParameters pme, FlowEnv env, double slope) {
  pme.validate();
  env.validate();
  if (!(slope > 0.0)) throw std::invalid_argument("linear_li_xu: slope must be > 0");
  FunctionTriple f;
  f.family_ = TripleFamily::linear_li_xu;
  f.pme_ = pme;
  f.env_ = env;
  f.slope_ = slope;
  return f;
}

FunctionTriple FunctionTriple::sampled(PmeParameters pme, FlowEnv env, SampledTriple data) {
  pme.validate();
  env.validate();
  data.validate();
  FunctionTriple f;
  f.family_ = TripleFamily::sampled;
  f.pme_ = pme;
  f.env_ = env;
  f.d_alpha_ = node_derivatives(data.t, data.alpha);
  f.d_phi_ = node_derivatives(data.t, data.phi);
  f.d_gamma_ = node_derivatives(data.t, data.gamma);
  f.sl_alpha_ = pchip_slopes(data.t, data.alpha);
  f.sl_phi_ = pchip_slopes(data.t, data.phi);
  f.sl_gamma_ = pchip_slopes(data.t, data.gamma);
  f.sl_da_ = pchip_slopes(data.t, f.d_alpha_);
  f.sl_dp_ = pchip_slopes(data.t, f.d_phi_);
  f.sl_dg_ = pchip_slopes(data.t, f.d_gamma_);
  f.data_ = std::move(data);
  return f;
}

RatioMode FunctionTriple::native_ratio_mode() const {
  // Li-Xu is the gamma*alpha^4/(alpha-1) case; every other family is stated
  // with the alpha^4-weighted cutoff term, i.e. the plain-ratio hypothesis.
  return family_ == TripleFamily::li_xu ? RatioMode::alpha4 : RatioMode::plain;
}

std::string FunctionTriple::name() const { return family_name(family_); }

double FunctionTriple::alpha_minus_one(double t) const {
  if (!(t > 0.0)) throw std::domain_error("triple: t must be > 0");
  const double x = rate();
  switch (family_) {
    case TripleFamily::li_yau: return alpha0_ - 1.0;
    case TripleFamily::hamilton: return std::expm1(2.0 * x * t);
    case TripleFamily::li_xu: return li_xu_alpha_m1(x * t);
    case TripleFamily::linear_li_xu: return slope_ * x * t;
    case TripleFamily::sampled: return eval(t).alpha - 1.0;
  }
  return 0.0;
}

TripleSample FunctionTriple::eval(double t) const {
  if (!(t > 0.0)) throw std::domain_error("triple: t must be > 0");
  const double m = pme_.m;
  const double n = pme_.n;
  const double M = env_.M;
  const double K = env_.K;
  const double x = rate();
  const double nm1 = n * (m - 1.0);

  TripleSample s;
  s.t = t;
  switch (family_) {
    case TripleFamily::li_yau: {
      s.alpha = alpha0_;
      s.alpha_prime = 0.0;
      // The K-term carries a factor alpha: with it, the first admissibility
      // inequality margin is 2 alpha (alpha-1)/t > 0 for all t; without it the
      // margin is 2(alpha-1)(alpha/t - (m-1)MK)/alpha, negative for large t.
      s.phi = alpha0_ * (nm1 / t + nm1 * (m - 1.0) * M * K / (alpha0_ - 1.0));
      s.phi_prime = -alpha0_ * nm1 / (t * t);
      s.gamma = std::pow(t, theta_);
      s.gamma_prime = theta_ * std::pow(t, theta_ - 1.0);
      break;
    }
    case TripleFamily::hamilton: {
      const double e2 = std::exp(2.0 * x * t);
      const double e4 = std::exp(4.0 * x * t);
      s.alpha = e2;
      s.alpha_prime = 2.0 * x * e2;
      s.phi = nm1 / t * e4;
      s.phi_prime = nm1 * e4 * (4.0 * x / t - 1.0 / (t * t));
      s.gamma = t * e2;
      s.gamma_prime = e2 * (1.0 + 2.0 * x * t);
      break;
    }
    case TripleFamily::li_xu: {
      const double u = x * t;
      s.alpha = 1.0 + li_xu_alpha_m1(u);
      s.alpha_prime = x * li_xu_alpha_prime_over_x(u);
      const double coth_u = 1.0 / std::tanh(u);
      s.phi = 2.0 * nm1 * x * (1.0 + coth_u);
      const double sh = std::sinh(u);
      // sinh overflow gives +inf below; the limit of phi' is 0 from below.
      s.phi_prime = std::isfinite(sh) ? -2.0 * nm1 * x * x / (sh * sh) : -0.0;
      s.gamma = std::tanh(u);
      const double ch = std::cosh(u);
      s.gamma_prime = std::isfinite(ch) ? x / (ch * ch) : 0.0;
      break;
    }
    case TripleFamily::linear_li_xu: {
      const double c = slope_;
      s.alpha = 1.0 + c * x * t;
      s.alpha_prime = c * x;
      s.phi = nm1 / t + c * nm1 * (m - 1.0) * M * K;
      s.phi_prime = -nm1 / (t * t);
      s.gamma = c * x * t;
      s.gamma_prime = c * x;
      break;
    }
    case TripleFamily::sampled: {
      if (t < data_.t.front() || t > data_.t.back())
        throw std::domain_error("sampled triple: t outside tabulated range");
      Interpolant a{&data_.t, &data_.alpha, sl_alpha_};
      Interpolant p{&data_.t, &data_.phi, sl_phi_};
      Interpolant g{&data_.t, &data_.gamma, sl_gamma_};
      Interpolant da{&data_.t, &d_alpha_, sl_da_};
      Interpolant dp{&data_.t, &d_phi_, sl_dp_};
      Interpolant dg{&data_.t, &d_gamma_, sl_dg_};
      s.alpha = a(t);
      s.phi = p(t);
      s.gamma = g(t);
      s.alpha_prime = da(t);
      s.phi_prime = dp(t);
      s.gamma_prime = dg(t);
      break;
    }
  }
  return s;
}

std::vector<double> log_grid(double t_min, double t_max, int count) {
  if (!(t_min > 0.0) || !(t_max > t_min))
    throw std::invalid_argument("log_grid: need 0 < t_min < t_max");
  if (count < 2) throw std::invalid_argument("log_grid: need at least 2 points");
  std::vector<double> g(count);
  const double l0 = std::log(t_min), l1 = std::log(t_max);
  for (int i = 0; i < count; ++i)
    g[i] = std::exp(l0 + (l1 - l0) * double(i) / double(count - 1));
  g.back() = t_max;
  return g;
}

std::vector<double> default_condition_grid(const FlowEnv& env, int count) {
  return log_grid(1e-3 * env.T, env.T, count);
}

bool ConditionReport::pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return ratio_finite;
}

const InequalityMargin* ConditionReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::string> ConditionReport::failed_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (!e.pass) out.push_back(e.name);
  if (!ratio_finite) out.push_back("ratio_bound");
  return out;
}

namespace {

// Accumulate one inequality margin sample. `scale` is the magnitude of the
// terms whose difference forms the margin; only fp noise relative to it is
// tolerated.
void record_margin(InequalityMargin& e, double margin, double scale, double t,
                   double rel_slack) {
  if (std::isnan(margin)) {
    e.pass = false;
    e.min_margin = -kInf;
    e.t_at_min = t;
    e.worst_rel = -kInf;
    e.t_at_worst = t;
    return;
  }
  if (margin < e.min_margin) {
    e.min_margin = margin;
    e.t_at_min = t;
  }
  const double rel = margin / std::max(scale, std::numeric_limits<double>::min());
  if (rel < e.worst_rel) {
    e.worst_rel = rel;
    e.t_at_worst = t;
  }
  if (!(margin >= -rel_slack * scale)) e.pass = false;
}

}  // namespace

ConditionReport check_admissibility(const FunctionTriple& triple,
                                    std::span<const double> t_grid,
                                    double rel_slack) {
  if (t_grid.empty()) throw std::invalid_argument("check_admissibility: empty grid");
  ConditionReport rep;
  rep.rel_slack = rel_slack;
  rep.entries.resize(8);
  auto& c1_alpha = rep.entries[0];
  auto& c1_phi = rep.entries[1];
  auto& c1_gamma = rep.entries[2];
  auto& s1 = rep.entries[3];
  auto& s2 = rep.entries[4];
  auto& s3 = rep.entries[5];
  auto& mono_a = rep.entries[6];
  auto& mono_g = rep.entries[7];
  c1_alpha.name = "alpha>1";
  c1_phi.name = "phi>0";
  c1_gamma.name = "gamma>0";
  s1.name = "alpha-phi (i)";
  s2.name = "alpha-phi (ii)";
  s3.name = "alpha-phi (iii)";
  mono_a.name = "alpha nondecreasing";
  mono_g.name = "gamma nondecreasing";

  const double nm1 = triple.pme().n * (triple.pme().m - 1.0);
  const double mk2 = 2.0 * (triple.pme().m - 1.0) * triple.env().M * triple.env().K;

  double prev_alpha = 0.0, prev_gamma = 0.0;
  bool have_prev = false;
  for (double t : t_grid) {
    const TripleSample s = triple.eval(t);
    const double am1 = triple.alpha_minus_one(t);

    record_margin(c1_alpha, am1, std::max(1.0, std::abs(s.alpha)), t, rel_slack);
    record_margin(c1_phi, s.phi, std::abs(s.phi), t, rel_slack);
    record_margin(c1_gamma, s.gamma, std::abs(s.gamma), t, rel_slack);

    const double A = 2.0 * s.phi / nm1;
    // (i)  A - 2(m-1)MK >= (A - alpha')/alpha
    const double m1 = (A - mk2) - (A - s.alpha_prime) / s.alpha;
    const double sc1 = std::abs(A) + mk2 + std::abs(A - s.alpha_prime) / s.alpha;
    record_margin(s1, m1, sc1, t, rel_slack);
    // (ii) A - alpha' > 0
    record_margin(s2, A - s.alpha_prime, std::abs(A) + std::abs(s.alpha_prime), t, rel_slack);
    // (iii) phi^2/(n(m-1)) + alpha phi' >= 0
    const double q1 = s.phi * s.phi / nm1;
    const double q2 = s.alpha * s.phi_prime;
    record_margin(s3, finite_or(q1 + q2, (q1 > 0 && !std::isfinite(q1)) ? kInf : q1 + q2),
                  finite_or(q1 + std::abs(q2), kInf), t, rel_slack);

    // monotonicity via the analytic derivatives and via consecutive samples
    record_margin(mono_a, s.alpha_prime, std::max(std::abs(s.alpha_prime), std::abs(s.alpha) / t), t,
                  rel_slack);
    record_margin(mono_g, s.gamma_prime, std::max(std::abs(s.gamma_prime), std::abs(s.gamma) / t), t,
                  rel_slack);
    if (have_prev) {
      record_margin(mono_a, s.alpha - prev_alpha, std::abs(s.alpha), t, rel_slack);
      record_margin(mono_g, s.gamma - prev_gamma, std::abs(s.gamma), t, rel_slack);
    }
    prev_alpha = s.alpha;
    prev_gamma = s.gamma;
    have_prev = true;
  }
  return rep;
}

ConditionReport check_gamma_system(const FunctionTriple& triple,
                                   std::span<const double> t_grid,
                                   RatioMode mode,
                                   double rel_slack) {
  if (t_grid.empty()) throw std::invalid_argument("check_gamma_system: empty grid");
  ConditionReport rep;
  rep.rel_slack = rel_slack;
  rep.ratio_mode = mode;
  rep.ratio_sup = -kInf;
  rep.entries.resize(1);
  auto& g1 = rep.entries[0];
  g1.name = "gamma growth";

  const double nm1 = triple.pme().n * (triple.pme().m - 1.0);
  for (double t : t_grid) {
    const TripleSample s = triple.eval(t);
    const double A = 2.0 * s.phi / nm1;
    // gamma'/gamma <= (A - alpha')/alpha
    const double lhs = s.gamma_prime / s.gamma;
    const double rhs = (A - s.alpha_prime) / s.alpha;
    record_margin(g1, rhs - lhs, std::abs(lhs) + std::abs(rhs), t, rel_slack);

    const double am1 = triple.alpha_minus_one(t);
    double ratio;
    if (am1 <= 0.0 || !std::isfinite(am1)) {
      ratio = kInf;
    } else {
      ratio = s.gamma / am1;
      if (mode == RatioMode::alpha4) {
        const double a2 = s.alpha * s.alpha;
        ratio *= a2 * a2;
      }
    }
    if (ratio > rep.ratio_sup) {
      rep.ratio_sup = ratio;
      rep.ratio_sup_t = t;
    }
    if (!std::isfinite(ratio)) rep.ratio_finite = false;
  }

  if (triple.family() == TripleFamily::hamilton && mode == RatioMode::plain) {
    const double x = triple.rate();
    if (x > 0.0) {
      rep.notes.push_back("gamma/(alpha-1) -> 1/(2(m-1)MK) = " +
                          std::to_string(1.0 / (2.0 * x)) + " as t -> 0+");
    }
  }
  return rep;
}

double derivative_consistency(const FunctionTriple& triple,
                              std::span<const double> t_grid,
                              double fd_step) {
  if (t_grid.size() < 3)
    throw std::invalid_argument("derivative_consistency: need at least 3 grid points");
  if (!(fd_step > 0.0)) throw std::invalid_argument("derivative_consistency: fd_step must be > 0");
  // Per quantity: max |analytic - centered FD| over the grid, normalized by
  // the grid max of |analytic| (each derivative checked at its own scale).
  double abs_err[3] = {0, 0, 0};
  double scale[3] = {1, 1, 1};
  for (double t : t_grid) {
    if (t - fd_step <= 0.0)
      throw std::invalid_argument("derivative_consistency: fd_step >= smallest grid time");
    const TripleSample c = triple.eval(t);
    const TripleSample lo = triple.eval(t - fd_step);
    const TripleSample hi = triple.eval(t + fd_step);
    const double inv2h = 1.0 / (2.0 * fd_step);
    const double pairs[3][2] = {
        {c.alpha_prime, (hi.alpha - lo.alpha) * inv2h},
        {c.phi_prime, (hi.phi - lo.phi) * inv2h},
        {c.gamma_prime, (hi.gamma - lo.gamma) * inv2h},
    };
    for (int q = 0; q < 3; ++q) {
      abs_err[q] = std::max(abs_err[q], std::abs(pairs[q][0] - pairs[q][1]));
      scale[q] = std::max(scale[q], std::abs(pairs[q][0]));
    }
  }
  double worst = 0.0;
  for (int q = 0; q < 3; ++q) worst = std::max(worst, abs_err[q] / scale[q]);
  return worst;
}

}  // namespace pmelab
