#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>
#include <random>
#include <vector>

#include "pmelab/estimates.hpp"
#include "pmelab/oracle.hpp"

using namespace pmelab;

namespace {
constexpr double kPi = std::numbers::pi;

RunTrace constant_trace(const ManifoldModel& model, double c, const PmeParameters& pme,
                        const FlowEnv& env, const std::vector<double>& times) {
  RunTrace trace;
  trace.model = model;
  trace.pme = pme;
  trace.env = env;
  for (double t : times) trace.snapshots.push_back({std::vector<double>(model.size(), c), t});
  return trace;
}

RunTrace smooth_circle_run(int N, double t_end, std::vector<double> snaps) {
  auto m = ManifoldModel::flat_circle(2 * kPi, N);
  std::vector<double> v0(N);
  for (int i = 0; i < N; ++i) v0[i] = 1.5 + 0.5 * std::sin(m.coord(i));
  return solve(m, v0, PmeParameters{2.0, 1}, 0.0, t_end, snaps);
}

std::vector<double> uniform_times(double first, double dt, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = first + i * dt;
  return out;
}
}  // namespace

TEST_SUITE_BEGIN("estimates");

TEST_CASE("compute_F on the constant solution: F = -alpha phi, bare = 0") {
  PmeParameters pme{2.0, 1};
  FlowEnv env{0.5, 3.0, 1.0};
  auto model = ManifoldModel::flat_circle(2 * kPi, 64);
  auto trace = constant_trace(model, 3.0, pme, env, {0.25, 0.5, 1.0});
  auto triple = FunctionTriple::li_yau(pme, env, 2.0, 1.0);
  const EstimateSeries series = compute_F(trace, triple);
  for (const auto& row : series.rows) {
    const TripleSample s = triple.eval(row.t);
    CHECK(row.sup_F == doctest::Approx(-s.alpha * s.phi).epsilon(1e-14));
    CHECK(row.sup_bare == 0.0);
    CHECK(row.G == doctest::Approx(s.gamma * row.sup_F).epsilon(1e-15));
  }
}

TEST_CASE("compute_F rejects snapshots at t = 0") {
  PmeParameters pme{2.0, 1};
  FlowEnv env{0.0, 1.0, 1.0};
  auto model = ManifoldModel::flat_circle(2 * kPi, 64);
  auto trace = constant_trace(model, 1.0, pme, env, {0.0, 0.5});
  auto triple = FunctionTriple::li_yau(pme, env);
  CHECK_THROWS_AS(compute_F(trace, triple), std::domain_error);
}

TEST_CASE("F identity against an independent stencil oracle") {
  // F + alpha phi + alpha (m-1) lap v + (alpha-1)|grad v|^2 / v = 0, with the
  // oracle building every piece from its own periodic central differences.
  const int N = 96;
  auto model = ManifoldModel::flat_circle(2 * kPi, N);
  PmeParameters pme{2.5, 1};
  FlowEnv env{0.3, 4.0, 1.0};
  auto triple = FunctionTriple::hamilton(pme, env);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> amp(-0.3, 0.3);
  std::vector<double> v(N, 2.0);
  for (int k = 1; k <= 4; ++k) {
    const double a = amp(rng);
    for (int i = 0; i < N; ++i) v[i] += a * std::sin(k * model.coord(i) + k);
  }
  const double t = 0.7;
  RunTrace trace;
  trace.model = model;
  trace.pme = pme;
  trace.env = env;
  trace.snapshots.push_back({v, t});
  const EstimateSeries series = compute_F(trace, triple);

  const double h = 2 * kPi / N;
  const TripleSample s = triple.eval(t);
  double sup_oracle = -1e300;
  for (int i = 0; i < N; ++i) {
    const double vp = v[(i + 1) % N], vm = v[(i + N - 1) % N];
    const double lap = (vp - 2 * v[i] + vm) / (h * h);
    const double grad = (vp - vm) / (2 * h);
    const double g2 = grad * grad;
    const double vt_over_v = (pme.m - 1) * lap + g2 / v[i];
    const double F = g2 / v[i] - s.alpha * vt_over_v - s.alpha * s.phi;
    // identity with PDE-consistent v_t
    const double scale = std::abs(s.alpha * s.phi) + std::abs(s.alpha * (pme.m - 1) * lap) +
                         std::abs((s.alpha - 1) * g2 / v[i]);
    CHECK(std::abs(F + s.alpha * s.phi + s.alpha * (pme.m - 1) * lap +
                   (s.alpha - 1) * g2 / v[i]) <= 1e-12 * scale);
    sup_oracle = std::max(sup_oracle, F);
  }
  CHECK(series.rows[0].sup_F ==
        doctest::Approx(sup_oracle).epsilon(1e-12));
}

TEST_CASE("estimate RHS structure") {
  PmeParameters pme{2.0, 1};
  FlowEnv env{0.0, 2.0, 1.0};
  auto triple = FunctionTriple::li_yau(pme, env, 2.0, 1.0);

  SUBCASE("K = 0 leaves only the R-terms") {
    const RhsBreakdown r = local_rhs(pme, env, triple, 1.5, 1.0, 0.5, RhsMode::local_plain);
    CHECK(r.a == doctest::Approx(0.5).epsilon(1e-15));  // n=1, m=2
    const TripleSample s = triple.eval(0.5);
    CHECK(r.local == doctest::Approx(r.a * s.alpha * s.alpha / (1.5 * 1.5)).epsilon(1e-14));
    CHECK(r.cutoff ==
          doctest::Approx(r.a * env.M * 4.0 / (1.5 * 1.5 * s.gamma)).epsilon(1e-14));
    CHECK(r.curv1 == 0.0);
    CHECK(r.curv2 == 0.0);
    // the weighted mode carries the alpha^4 factor
    const RhsBreakdown rb = local_rhs(pme, env, triple, 1.5, 1.0, 0.5, RhsMode::local_weighted);
    CHECK(rb.cutoff == doctest::Approx(r.cutoff * 16.0).epsilon(1e-13));
  }

  SUBCASE("R -> infinity recovers the global form, term by term") {
    FlowEnv envk{0.7, 2.0, 1.0};
    auto trip = FunctionTriple::hamilton(pme, envk);
    const double t = 0.4;
    const RhsBreakdown big = local_rhs(pme, envk, trip, 1e9, 1.3, t, RhsMode::local_plain);
    const RhsBreakdown cor = global_rhs(pme, envk, trip, 1.3, t);
    CHECK(big.local == doctest::Approx(cor.local).epsilon(1e-8));
    CHECK(big.cutoff <= 1e-12);
    CHECK(big.curv1 == doctest::Approx(cor.curv1).epsilon(1e-15));
    CHECK(big.curv2 == doctest::Approx(cor.curv2).epsilon(1e-15));
  }

  SUBCASE("global bound with K = 0 vanishes") {
    const RhsBreakdown r = global_rhs(pme, env, triple, 1.0, 0.5);
    CHECK(r.total() == 0.0);
  }

  SUBCASE("frozen sphere baseline") {
    // m=2, n=2, M=2, K=1/3, Hamilton at t=0.25, C=1.
    PmeParameters pme2{2.0, 2};
    FlowEnv env2{1.0 / 3.0, 2.0, 0.5};
    auto trip = FunctionTriple::hamilton(pme2, env2);
    const RhsBreakdown r = global_rhs(pme2, env2, trip, 1.0, 0.25);
    CHECK(r.total() == doctest::Approx(1.712619030535411).epsilon(1e-12));
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(local_rhs(pme, env, triple, 0.0, 1.0, 0.5, RhsMode::local_plain),
                    std::invalid_argument);
    CHECK_THROWS_AS(local_rhs(pme, env, triple, 1.0, 1.0, 0.0, RhsMode::local_plain),
                    std::domain_error);
  }
}

TEST_CASE("verify_estimate") {
  SUBCASE("constant solution passes with C* = 0") {
    PmeParameters pme{2.0, 1};
    FlowEnv env{0.5, 3.0, 1.0};
    auto model = ManifoldModel::flat_circle(2 * kPi, 64);
    auto trace = constant_trace(model, 3.0, pme, env, uniform_times(0.1, 0.1, 10));
    auto triple = FunctionTriple::hamilton(pme, env);
    VerifyOptions opts;
    opts.mode = RhsMode::global_bound;
    const VerifyReport rep = verify_estimate(trace, triple, opts);
    CHECK(rep.pass);
    CHECK(rep.c_star == 0.0);
    for (const auto& row : rep.series.rows) CHECK(row.margin >= 0.0);
  }

  SUBCASE("inadmissible triple is refused with the condition named") {
    PmeParameters pme{2.0, 1};
    FlowEnv env{1.0, 2.0, 1.0};
    auto model = ManifoldModel::flat_circle(2 * kPi, 64);
    auto trace = constant_trace(model, 2.0, pme, env, {0.5});
    auto bad = FunctionTriple::linear_li_xu(pme, env, 1.0 / 3.0);
    VerifyOptions opts;
    try {
      verify_estimate(trace, bad, opts);
      FAIL("expected a precondition error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("alpha-phi (i)") != std::string::npos);
    }
  }

  SUBCASE("smooth flat run: negative sup F, PASS at C = 1, refinement-stable C*") {
    std::vector<double> snaps = uniform_times(0.05, 0.05, 20);
    double cstar_prev = -1.0;
    for (int N : {256, 512}) {
      RunTrace trace = smooth_circle_run(N, 1.0, snaps);
      auto triple = FunctionTriple::li_yau(trace.pme, trace.env, 2.0, 1.0);
      VerifyOptions opts;
      opts.mode = RhsMode::local_weighted;
      opts.R = kPi;
      opts.C = 1.0;
      const VerifyReport rep = verify_estimate(trace, triple, opts);
      CHECK(rep.pass);
      for (const auto& row : rep.series.rows) CHECK(row.sup_F < 0.0);
      // calibration path
      VerifyOptions cal = opts;
      cal.C.reset();
      const VerifyReport repc = verify_estimate(trace, triple, cal);
      CHECK(std::isfinite(repc.c_star));
      if (cstar_prev >= 0.0) {
        const double scale = std::max({cstar_prev, repc.c_star, 1e-30});
        CHECK(std::abs(repc.c_star - cstar_prev) <= 0.2 * scale);
      }
      cstar_prev = repc.c_star;
    }
  }

  SUBCASE("bare quantity violates the K=0 global bound at small t (diagnostic)") {
    std::vector<double> snaps = uniform_times(0.05, 0.05, 20);
    RunTrace trace = smooth_circle_run(128, 1.0, snaps);
    auto triple = FunctionTriple::li_yau(trace.pme, trace.env, 2.0, 1.0);
    VerifyOptions opts;  // global mode, K = 0: RHS = 0
    opts.C = 1.0;
    const VerifyReport rep = verify_estimate(trace, triple, opts);
    CHECK(rep.pass);                 // F-based margins pass
    CHECK(rep.bare_violations > 0);  // bare = F + alpha phi does not
    for (const auto& row : rep.series.rows) CHECK(row.sup_bare > row.sup_F);
  }
}

TEST_CASE("gamma scaling: G column scales, compensated C* is invariant") {
  std::vector<double> snaps = uniform_times(0.1, 0.1, 8);
  RunTrace trace = smooth_circle_run(128, 0.8, snaps);
  FlowEnv env = trace.env;
  env.K = 0.5;  // admissible upper bound larger than the model's exact 0
  auto triple = FunctionTriple::li_yau(trace.pme, env, 2.0, 1.0);

  // tabulate the triple and scale gamma by lambda
  const double lambda = 3.0;
  SampledTriple data;
  for (double t : log_grid(1e-3 * env.T, env.T, 400)) {
    const TripleSample s = triple.eval(t);
    data.t.push_back(t);
    data.alpha.push_back(s.alpha);
    data.phi.push_back(s.phi);
    data.gamma.push_back(lambda * s.gamma);
  }
  auto scaled = FunctionTriple::sampled(trace.pme, env, data);

  const EstimateSeries base = compute_F(trace, triple);
  const EstimateSeries scl = compute_F(trace, scaled);
  REQUIRE(base.rows.size() == scl.rows.size());

  double cstar_base = 0.0, cstar_comp = 0.0;
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    // sampled triples interpolate phi/gamma, so allow the PCHIP error
    CHECK(scl.rows[i].sup_F == doctest::Approx(base.rows[i].sup_F).epsilon(1e-5));
    CHECK(scl.rows[i].G == doctest::Approx(lambda * base.rows[i].G).epsilon(1e-5));

    const double t = base.rows[i].t;
    const RhsBreakdown rb = local_rhs(trace.pme, env, triple, kPi, 1.0, t, RhsMode::local_plain);
    const RhsBreakdown rs = local_rhs(trace.pme, env, scaled, kPi, 1.0, t, RhsMode::local_plain);
    // cutoff term scales by 1/lambda; lambda * scaled-cutoff restores it
    CHECK(lambda * rs.cutoff == doctest::Approx(rb.cutoff).epsilon(1e-5));
    const double P_base = rb.c_coefficient();
    const double P_comp = rs.local + lambda * rs.cutoff;  // compensated rescale
    const double Q = rb.c_free();
    cstar_base = std::max(cstar_base, std::max(0.0, (base.rows[i].sup_F - Q) / P_base));
    cstar_comp = std::max(cstar_comp, std::max(0.0, (scl.rows[i].sup_F - Q) / P_comp));
  }
  CHECK(cstar_comp == doctest::Approx(cstar_base).epsilon(1e-4));
}

TEST_CASE("lemma residual") {
  SUBCASE("constant solution reduces to the 1D time inequality, exactly") {
    // margin(t) = gamma [ phi^2/(n(m-1)) + alpha phi' - phi^2 ] + (m-1) alpha^2 gamma K^2
    PmeParameters pme{2.0, 1};
    auto model = ManifoldModel::flat_circle(2 * kPi, 64);

    // Spatial terms vanish for constants, so the 1D reduction is exact:
    //   margin(t_j) = RHS(t_j) - [G(t_{j+1}) - G(t_{j-1})]/(2 dt),
    // with G(t) = -gamma alpha phi and every piece from the closed forms.
    auto check_family = [&](const FunctionTriple& triple, double K) {
      FlowEnv env = triple.env();
      const auto times = uniform_times(0.2, 0.05, 9);
      auto trace = constant_trace(model, env.M, pme, env, times);
      const LemmaResidual res = lemma_residual(trace, triple, K);
      REQUIRE(res.times.size() == 7);
      const double a = pme.estimate_constant();
      const double nm1 = pme.n * (pme.m - 1);
      auto G_of = [&](double t) {
        const TripleSample s = triple.eval(t);
        return -s.gamma * s.alpha * s.phi;
      };
      for (std::size_t j = 0; j < res.times.size(); ++j) {
        const double t = res.times[j];
        const TripleSample s = triple.eval(t);
        const double G = G_of(t);
        const double lg_disc = (G_of(times[j + 2]) - G_of(times[j])) / 0.1;
        const double bracket =
            s.gamma_prime / s.gamma - (2 * s.phi / nm1 - s.alpha_prime) / s.alpha;
        const double rhs = -G * G / (a * s.alpha * s.alpha * s.gamma) + bracket * G +
                           (pme.m - 1) * s.alpha * s.alpha * s.gamma * K * K;
        CHECK(res.min_margin_per_time[j] == doctest::Approx(rhs - lg_disc).epsilon(1e-12));
      }
      CHECK(res.positive_g_points == 0);
      CHECK(std::isinf(res.min_margin_positive_g));
    };

    // Li-Yau, K=0: G = -alpha^2 n(m-1) is constant in time, the centered
    // dG/dt vanishes exactly, and the margin is -gamma phi^2 (1 - 1/(n(m-1)))
    // + gamma alpha phi' = -4/t here.
    FlowEnv env0{0.0, 2.0, 1.0};
    check_family(FunctionTriple::li_yau(pme, env0, 2.0, 1.0), 0.0);
    const LemmaResidual res = lemma_residual(
        constant_trace(model, 2.0, pme, env0, uniform_times(0.2, 0.05, 9)),
        FunctionTriple::li_yau(pme, env0, 2.0, 1.0), 0.0);
    CHECK(res.min_margin_per_time[0] == doctest::Approx(-4.0 / 0.25).epsilon(1e-12));

    // Hamilton, K>0: G = -n(m-1)e^{8xt} moves, exercising the time stencil.
    FlowEnv envk{0.4, 2.0, 1.0};
    check_family(FunctionTriple::hamilton(pme, envk), 0.4);
  }

  SUBCASE("usage errors") {
    PmeParameters pme{2.0, 1};
    FlowEnv env{0.0, 1.0, 1.0};
    auto model = ManifoldModel::flat_circle(2 * kPi, 64);
    auto triple = FunctionTriple::li_yau(pme, env);
    auto two = constant_trace(model, 1.0, pme, env, {0.2, 0.4});
    CHECK_THROWS_AS(lemma_residual(two, triple, 0.0), std::invalid_argument);
    auto uneven = constant_trace(model, 1.0, pme, env, {0.2, 0.25, 0.4});
    CHECK_THROWS_AS(lemma_residual(uneven, triple, 0.0), std::invalid_argument);
  }

  SUBCASE("smooth run: margin field is finite and spatial terms enter") {
    std::vector<double> snaps = uniform_times(0.1, 0.05, 9);
    RunTrace trace = smooth_circle_run(128, 0.5, snaps);
    auto triple = FunctionTriple::li_yau(trace.pme, trace.env, 2.0, 1.0);
    const LemmaResidual res = lemma_residual(trace, triple, 0.0);
    CHECK(std::isfinite(res.min_margin));
    CHECK(res.t_at_min > 0.0);
  }
}

TEST_CASE("cutoff profiles") {
  SUBCASE("shape values") {
    CHECK(cutoff_shape(0.3) == 1.0);
    CHECK(cutoff_shape(2.4) == 0.0);
    CHECK(cutoff_shape(1.5) == doctest::Approx(0.5625).epsilon(1e-15));
    const double dpsi = cutoff_shape_derivative(1.5);
    CHECK(dpsi * dpsi / cutoff_shape(1.5) == doctest::Approx(4.0).epsilon(1e-14));
  }

  SUBCASE("chi = 1 inside the inner ball, 0 outside the outer one") {
    auto m = ManifoldModel::flat_circle(16.0, 512);
    const CutoffProfile p = build_cutoff(m, 8.0, 1.0, 0.0);
    for (int i = 0; i < m.size(); ++i) {
      const double rho = m.distance(m.coord(i), 8.0, 0.0);
      if (rho <= 1.0) CHECK(p.chi[i] == 1.0);
      if (rho >= 2.0) CHECK(p.chi[i] == 0.0);
    }
  }

  SUBCASE("flat constants: c1 below 16 + 10h, c2 modest, R-invariant") {
    auto m = ManifoldModel::flat_circle(16.0, 1024);
    const double h = m.grid().spacing;
    double c1_at[3];
    int idx = 0;
    for (double R : {1.0, 2.0}) {
      const CutoffProfile p = build_cutoff(m, 8.0, R, 0.0);
      const CutoffConstants c = verify_cutoff(p, m, 0.0, 0.0);
      CHECK(c.c1 <= 16.0 + 10.0 * h);
      CHECK(c.c2 <= 32.0);
      CHECK(c.pass);
      c1_at[idx++] = c.c1;
    }
    CHECK(std::abs(c1_at[1] - c1_at[0]) <= 0.05 * c1_at[0]);
  }

  SUBCASE("sphere pole-centered constants") {
    auto m = ManifoldModel::shrinking_sphere(2.0, 256);
    const double t = 0.25;
    const double K = m.ricci_bound(t);
    const CutoffProfile p = build_cutoff(m, 0.0, 0.5, t);
    const CutoffConstants c = verify_cutoff(p, m, t, K);
    CHECK(c.c1 <= 16.0 + 10.0 * m.grid().spacing);
    CHECK(c.c2 <= 32.0);
    CHECK(c.pass);
  }

  SUBCASE("sphere constants drift less than 10% in time") {
    auto m = ManifoldModel::shrinking_sphere(2.0, 256);
    CutoffConstants ref{};
    for (double t : {0.05, 0.25, 0.45}) {
      const CutoffProfile p = build_cutoff(m, 0.0, 0.5, t);
      const CutoffConstants c = verify_cutoff(p, m, t, m.ricci_bound(t));
      if (t == 0.05) {
        ref = c;
      } else {
        CHECK(std::abs(c.c1 - ref.c1) <= 0.10 * ref.c1);
        CHECK(std::abs(c.c2 - ref.c2) <= 0.10 * ref.c2);
      }
    }
  }

  SUBCASE("oversized radius is a geometry error") {
    auto m = ManifoldModel::flat_circle(2 * kPi, 64);
    CHECK_THROWS_AS(build_cutoff(m, kPi, 2.0, 0.0), std::invalid_argument);
    auto s = ManifoldModel::shrinking_sphere(1.0, 64);
    CHECK_THROWS_AS(build_cutoff(s, 0.0, 2.0, 0.45), std::invalid_argument);
  }
}

TEST_CASE("classical sharpness check") {
  SUBCASE("constant solutions give zero") {
    PmeParameters pme{2.0, 1};
    FlowEnv env{0.0, 1.0, 1.0};
    auto model = ManifoldModel::flat_circle(2 * kPi, 64);
    auto trace = constant_trace(model, 1.0, pme, env, {0.5, 1.0});
    const SharpnessSeries s = classical_ab_check(trace);
    for (double v : s.sup_value) CHECK(v == 0.0);
  }
  SUBCASE("smooth positive run stays within 5% of the bound") {
    std::vector<double> snaps = uniform_times(0.1, 0.1, 10);
    RunTrace trace = smooth_circle_run(256, 1.0, snaps);
    const SharpnessSeries s = classical_ab_check(trace);
    CHECK(s.a_euclidean == doctest::Approx(1.0 / 3.0));
    CHECK(s.max_ratio <= 1.05);
  }
  SUBCASE("sphere traces are rejected") {
    PmeParameters pme{2.0, 2};
    FlowEnv env{0.25, 1.0, 0.5};
    auto model = ManifoldModel::shrinking_sphere(2.0, 64);
    auto trace = constant_trace(model, 1.0, pme, env, {0.25});
    CHECK_THROWS_AS(classical_ab_check(trace), std::invalid_argument);
  }
}

TEST_SUITE_END();
