#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "biot_iga/errors.hpp"
#include "biot_iga/harness.hpp"

using namespace biot;

namespace {

constexpr double kPi = std::numbers::pi;

BiotState zero_state(const MixedBiotSpaces& sp, double t) {
  BiotState s;
  s.t = t;
  s.u = Eigen::VectorXd::Zero(sp.V.size());
  s.psi = Eigen::VectorXd::Zero(sp.M.size());
  s.w = Eigen::VectorXd::Zero(sp.W.size());
  s.p = Eigen::VectorXd::Zero(sp.Q.size());
  return s;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("order estimates") {
  CHECK(estimate_order(1.13e0, 2.73e-1, 1.0 / 6, 1.0 / 12) == doctest::Approx(2.04).epsilon(0.005));
  CHECK(estimate_order(1.91e-1, 3.02e-2, 1.0 / 6, 1.0 / 12) == doctest::Approx(2.66).epsilon(0.005));
  CHECK(estimate_order(0.3, 0.3, 0.5, 0.25) == 0.0);
  CHECK(estimate_order(1.0, 0.25, 0.5, 0.25) == doctest::Approx(2.0));
  CHECK_THROWS_AS(estimate_order(0.0, 1.0, 0.5, 0.25), ParameterError);
  CHECK_THROWS_AS(estimate_order(1.0, 1.0, 0.5, 0.5), ParameterError);
}

TEST_CASE("coupled time step") {
  CHECK(coupled_time_step(1.0 / 6, 2) == doctest::Approx(1.0));
  CHECK(coupled_time_step(1.0 / 12, 2) == doctest::Approx(0.25));
  CHECK(coupled_time_step(1.0 / 12, 3) == doctest::Approx(0.125));
  CHECK(coupled_time_step(1.0 / 18, 3) == doctest::Approx(1.0 / 27));
}

TEST_CASE("time norms follow the field rules") {
  const FieldErrors seq[] = {{1.0, 2.0, 3.0, 4.0}, {5.0, 1.0, 2.0, 1.0}};
  const double dt = 0.5;

  MaterialParams finite;
  ErrorAccumulator a(finite, dt);
  for (const auto& e : seq) a.add(e);
  CHECK(a.result().E_u == 5.0);
  CHECK(a.result().E_w == doctest::Approx(2.5));
  CHECK(a.result().E_psi == 2.0);
  CHECK(a.result().E_p == 4.0);

  MaterialParams limit;
  limit.lambda_infinite = true;
  limit.c0 = 0.0;
  ErrorAccumulator b(limit, dt);
  for (const auto& e : seq) b.add(e);
  CHECK(b.result().E_u == 5.0);
  CHECK(b.result().E_psi == doctest::Approx(1.5));
  CHECK(b.result().E_p == doctest::Approx(2.5));
}

TEST_CASE("norms of a zero state are the exact-field norms") {
  // Test 5: u = (e^t - 1)(s, s) with s = sin(pi x) sin(pi y), p = (e^-t - 1) cos(pi x).
  const MaterialParams params = default_params(TestId::Test5);
  const ManufacturedSolution ms(TestId::Test5, params);
  const GeometryMap geo = unit_square();
  const auto sp = spaces_for_mesh(geo, 8, {1, 0, 2, 0}, true);
  const double t = 0.5;
  const double a = std::exp(t) - 1.0;
  const double b = std::exp(-t) - 1.0;

  const FieldErrors direct = state_errors(zero_state(sp, t), ms, sp, geo, 5);
  const FieldErrors sampled = ErrorSampler(sp, geo, 5).errors(zero_state(sp, t), ms);
  for (const FieldErrors& e : {direct, sampled}) {
    CHECK(e.u == doctest::Approx(a * std::sqrt(2.0 * (0.25 + kPi * kPi / 2))).epsilon(1e-9));
    CHECK(e.psi == doctest::Approx(a * kPi / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(e.w == doctest::Approx(std::abs(b) * kPi / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(e.p == doctest::Approx(std::abs(b) / std::sqrt(2.0)).epsilon(1e-9));
  }
  // At t = 0 every Test 5 field vanishes.
  const FieldErrors e0 = state_errors(zero_state(sp, 0.0), ms, sp, geo, 5);
  CHECK(e0.u + e0.psi + e0.w + e0.p < 1e-14);
}

TEST_CASE("error sampler agrees with direct evaluation") {
  const GeometryMap geo = quarter_annulus(1.0, 2.0);
  const ManufacturedSolution ms(TestId::Test1, default_params(TestId::Test1));
  const auto sp = spaces_for_mesh(geo, 3, {2, 1, 3, 1}, false);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  BiotState s = zero_state(sp, 0.3);
  for (Eigen::VectorXd* v : {&s.u, &s.psi, &s.w, &s.p}) {
    for (long i = 0; i < v->size(); ++i) (*v)[i] = U(rng);
  }
  const FieldErrors a = state_errors(s, ms, sp, geo, 5);
  const FieldErrors b = ErrorSampler(sp, geo, 5).errors(s, ms);
  CHECK(b.u == doctest::Approx(a.u).epsilon(1e-12));
  CHECK(b.psi == doctest::Approx(a.psi).epsilon(1e-12));
  CHECK(b.w == doctest::Approx(a.w).epsilon(1e-12));
  CHECK(b.p == doctest::Approx(a.p).epsilon(1e-12));
}

TEST_CASE("projected exact fields converge under refinement") {
  const GeometryMap geo = quarter_annulus(1.0, 2.0);
  const ManufacturedSolution ms(TestId::Test1, default_params(TestId::Test1));
  const double t = 0.3;
  FieldErrors prev;
  for (int n : {4, 8}) {
    const auto sp = spaces_for_mesh(geo, n, {1, 0, 2, 0}, false);
    const int nq = default_rule_order(sp.degrees) + 1;
    BiotState s;
    s.t = t;
    s.u = l2_project(sp.V, geo, VectorField([&](const Point& x) { return ms.u(x, t); }), nq);
    s.psi = l2_project(sp.M, geo, ScalarField([&](const Point& x) { return ms.psi(x, t); }), nq);
    s.w = l2_project(sp.W, geo, VectorField([&](const Point& x) { return ms.w(x, t); }), nq);
    s.p = l2_project(sp.Q, geo, ScalarField([&](const Point& x) { return ms.p(x, t); }), nq);
    const FieldErrors e = state_errors(s, ms, sp, geo, nq);
    if (n == 8) {
      // H1 of a quadratic projection: order 2; L2 of linears: order 2.
      CHECK(prev.u / e.u > 3.0);
      CHECK(prev.psi / e.psi > 3.0);
      CHECK(prev.w / e.w > 3.0);
      CHECK(prev.p / e.p > 3.0);
    }
    prev = e;
  }
}

TEST_CASE("Test 1 study reproduces the first table rows") {
  StudyConfig c;
  c.test = TestId::Test1;
  c.params = default_params(TestId::Test1);
  c.degrees = {1, 0, 2, 0};
  c.meshes = {6, 12};
  const auto rep = convergence_study(c);
  REQUIRE(rep.rows.size() == 2);
  const auto& r0 = rep.rows[0];
  const auto& r1 = rep.rows[1];
  CHECK(r0.dt == doctest::Approx(1.0));
  CHECK(r1.dt == doctest::Approx(0.25));
  CHECK(r1.steps == 4);
  // The published dof column counts one multiplier; the step system has two.
  CHECK(r0.total_dofs == 425 + 1);
  CHECK(r1.total_dofs == 1709 + 1);
  CHECK(r0.errors.E_u == doctest::Approx(1.13).epsilon(0.02));
  CHECK(r1.errors.E_u == doctest::Approx(2.73e-1).epsilon(0.02));
  CHECK(r0.errors.E_p == doctest::Approx(3.12e-1).epsilon(0.02));
  CHECK(r0.errors.E_w == doctest::Approx(9.66e-1).epsilon(0.02));
  CHECK(r0.errors.E_psi == doctest::Approx(3.76e-1).epsilon(0.02));
  CHECK_FALSE(r0.orders.has_value());
  REQUIRE(r1.orders.has_value());
  CHECK(r1.orders->E_u ==
        doctest::Approx(estimate_order(r0.errors.E_u, r1.errors.E_u, r0.h, r1.h)));
  CHECK(r1.max_residual < 1e-12);

  std::ostringstream out;
  const std::string comments[] = {"test=test1", "p_v=2"};
  write_csv(out, rep, comments);
  const auto lines = csv_lines(out.str());
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "# test=test1");
  CHECK(lines[1] == "# p_v=2");
  CHECK(lines[2] == "h,dt,dof_u,dof_psi,dof_w,dof_p,E_u,ord_u,E_p,ord_p,E_w,ord_w,E_psi,ord_psi");
  CHECK(lines[3].rfind("0.166667,1,242,49,84,49,", 0) == 0);
  CHECK(std::count(lines[3].begin(), lines[3].end(), ',') == 13);
  CHECK(std::count(lines[4].begin(), lines[4].end(), ',') == 13);

  std::ostringstream again;
  write_csv(again, convergence_study(c), comments);
  CHECK(again.str() == out.str());
}

TEST_CASE("study input checks") {
  StudyConfig c;
  c.degrees = {1, 0, 2, 0};
  CHECK_THROWS_AS(convergence_study(c), ConfigError);
  c.meshes = {2};
  c.degrees = {2, 1, 2, 1};
  CHECK_THROWS_AS(convergence_study(c), StabilityConditionError);
  CHECK_THROWS_AS(spaces_for_mesh(unit_square(), 0, {1, 0, 2, 0}, false), ParameterError);
}

TEST_CASE("pressure mean is pinned when c0 = 0") {
  const MaterialParams params = default_params(TestId::Test6);
  const ManufacturedSolution ms(TestId::Test6, params);
  const GeometryMap geo = unit_square();
  const auto sp = spaces_for_mesh(geo, 4, {1, 0, 2, 0}, true);
  ProblemData d = manufactured_problem(ms, geo);
  BiotStepper st(sp, geo, params, d);
  REQUIRE(st.p_constrained());
  const auto r = run_transient(st, SchemeSpec::backward_euler(), 1.0, 0.25);
  for (const BiotState& s : r.states) {
    const double mean = st.p_mean_row().dot(s.p);
    CHECK(std::abs(mean - d.p_mean(s.t)) < 1e-9 * std::max(1.0, s.p.norm()));
  }
}

TEST_CASE("temporal study rows") {
  const SchemeSpec schemes[] = {SchemeSpec::backward_euler(), SchemeSpec::bdf(2)};
  const double dts[] = {0.5, 0.25};
  const auto rows = temporal_study(TestId::Test5, default_params(TestId::Test5), {1, 0, 2, 0}, 2,
                                   schemes, dts);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].dt == 0.5);
  CHECK(rows[1].scheme.kind == SchemeSpec::Kind::BDF);
  CHECK(rows[2].dt == 0.25);
  for (const auto& r : rows) {
    CHECK(r.errors.E_p > 0.0);
    CHECK(r.max_residual < 1e-12);
  }
  CHECK(rows[2].errors.E_p < rows[0].errors.E_p);
}

TEST_CASE("inf-sup constants of the stable pair are mesh independent") {
  const int meshes[] = {2, 4, 8};
  for (const GeometryMap& geo : {unit_square(), quarter_annulus()}) {
    const auto rows = infsup_sweep(geo, {1, 0, 2, 0}, meshes);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].beta_th > 0.05);
      CHECK(rows[i].beta_div > 0.05);
      if (i > 0) {
        const double rt = rows[i - 1].beta_th / rows[i].beta_th;
        const double rd = rows[i - 1].beta_div / rows[i].beta_div;
        CHECK(rt >= 0.8);
        CHECK(rt <= 1.25);
        CHECK(rd >= 0.8);
        CHECK(rd <= 1.25);
      }
    }
  }
}

TEST_CASE("equal-order pair loses inf-sup stability") {
  const int meshes[] = {2, 4};
  const auto rows = infsup_sweep(unit_square(), {2, 1, 2, 1}, meshes, false);
  for (const auto& r : rows) CHECK(r.beta_th < 1e-6);
  CHECK_THROWS_AS(infsup_sweep(unit_square(), {2, 1, 2, 1}, meshes), StabilityConditionError);
}

TEST_CASE("dense inf-sup refuses large systems") {
  const auto sp = spaces_for_mesh(unit_square(), 40, {1, 0, 2, 0}, true);
  CHECK_THROWS_AS(infsup_taylor_hood(sp, unit_square()), ParameterError);
}

TEST_CASE("cantilever parameters and zero load") {
  const CantileverConfig c;
  CHECK(c.params.mu == doctest::Approx(1e5 / 2.8));
  CHECK(c.params.mu == doctest::Approx(35714.29).epsilon(1e-6));
  CHECK(c.params.lambda == doctest::Approx(142857.14).epsilon(1e-6));
  CHECK(c.params.alpha == 0.93);
  CHECK(c.params.kappa == 1e-7);
  CHECK(c.params.c0 == 0.0);

  CantileverConfig z;
  z.traction_scale = 0.0;
  z.mesh = 4;
  z.samples = 9;
  const auto r = cantilever_2d(z);
  CHECK(r.p_min == 0.0);
  CHECK(r.p_max == 0.0);
  CHECK(r.max_sign_changes == 0);
}

TEST_CASE("cantilever pressure metrics") {
  CantileverConfig c;
  c.mesh = 4;
  c.samples = 16;
  const auto r = cantilever_2d(c);
  CHECK(r.samples.rows() == 16);
  CHECK(r.samples.cols() == 16);
  CHECK(r.sign_changes.size() == 16);
  CHECK(r.p_min == doctest::Approx(r.samples.minCoeff()));
  CHECK(r.p_max == doctest::Approx(r.samples.maxCoeff()));
  CHECK(r.p_max > 0.0);
  CHECK(r.max_sign_changes <= 1);
  // Doubling the load doubles the (linear) response.
  c.traction_scale = 2.0;
  const auto r2 = cantilever_2d(c);
  CHECK((r2.samples - 2.0 * r.samples).lpNorm<Eigen::Infinity>() <
        1e-9 * r.samples.lpNorm<Eigen::Infinity>());
}

TEST_CASE("log-log slope") {
  const double x[] = {10, 20, 40, 80};
  double y[4];
  for (int i = 0; i < 4; ++i) y[i] = 3.0 * std::pow(x[i], -2.0);
  CHECK(log_log_slope(x, y) == doctest::Approx(-2.0));
  const double one[] = {1.0};
  CHECK_THROWS_AS(log_log_slope(one, one), ParameterError);
}

TEST_CASE("Test 6 refinement comparison smoke run") {
  Test6Config c;
  c.h_degrees = {1, 0, 2, 0};
  c.h_meshes = {2, 4};
  c.pk_mesh = 2;
  c.pk_degrees = {2, 3};
  c.dt = 0.25;
  c.scheme = SchemeSpec::backward_euler();
  const auto pts = refinement_comparison_test6(c);
  int counts[3] = {0, 0, 0};
  for (const auto& p : pts) {
    counts[static_cast<int>(p.strategy)]++;
    CHECK(p.dofs > 0);
    CHECK(p.errors.E_u > 0.0);
    CHECK(p.errors.E_p > 0.0);
    CHECK(p.errors.E_w > 0.0);
    CHECK(p.errors.E_psi > 0.0);
    if (p.strategy == RefinementStrategy::P) CHECK(p.degrees.k_v == 0);
    if (p.strategy == RefinementStrategy::K) CHECK(p.degrees.k_v == p.degrees.p_v - 2);
  }
  CHECK(counts[0] == 2);
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 2);
  CHECK(to_string(RefinementStrategy::K) == "k-IGA");
}
