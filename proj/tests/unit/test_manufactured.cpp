#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "biot_iga/errors.hpp"
#include "biot_iga/manufactured.hpp"

using namespace biot;

namespace {

Point vec2(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

// Sixth-order central stencils in space.
constexpr double kH = 1e-2;

double d1(const std::function<double(double)>& f) {
  const double h = kH;
  return (-f(-3 * h) + 9 * f(-2 * h) - 45 * f(-h) + 45 * f(h) - 9 * f(2 * h) + f(3 * h)) / (60 * h);
}

double d2(const std::function<double(double)>& f) {
  const double h = kH;
  return (2 * f(-3 * h) - 27 * f(-2 * h) + 270 * f(-h) - 490 * f(0) + 270 * f(h) - 27 * f(2 * h) +
          2 * f(3 * h)) /
         (180 * h * h);
}

using Scalar2 = std::function<double(double, double)>;

double dx(const Scalar2& f, double x, double y, int k) {
  return k == 0 ? d1([&](double s) { return f(x + s, y); }) : d1([&](double s) { return f(x, y + s); });
}

double dxx(const Scalar2& f, double x, double y, int j, int k) {
  if (j == k) {
    return j == 0 ? d2([&](double s) { return f(x + s, y); }) : d2([&](double s) { return f(x, y + s); });
  }
  return d1([&](double s) { return dx(f, x + s, y, 1); });
}

// Fourth-order central difference in time.
double dt4(const std::function<double(double)>& f, double t, double d) {
  return (f(t - 2 * d) - 8 * f(t - d) + 8 * f(t + d) - f(t + 2 * d)) / (12 * d);
}

struct Sample {
  double x, y, t;
};

std::vector<Sample> samples(TestId id, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Sample> s;
  while (static_cast<int>(s.size()) < n) {
    double x = 0, y = 0;
    switch (id) {
      case TestId::Test1: {
        const double r = 2 + 2 * U(rng), a = 1.5707963267948966 * U(rng);
        x = r * std::cos(a);
        y = r * std::sin(a);
        break;
      }
      case TestId::Test2:
      case TestId::Test3:
        x = -1 + 2 * U(rng);
        y = -1 + 2 * U(rng);
        if (x > 0 && y > 0) continue;
        break;
      default:
        x = U(rng);
        y = U(rng);
    }
    s.push_back({x, y, U(rng)});
  }
  return s;
}

void check_pde_residuals(TestId id, const MaterialParams& mp) {
  const auto ms = builtin_solution(id, mp);
  const double lam = mp.lambda;
  for (const auto& s : samples(id, 100, 7u + static_cast<unsigned>(id))) {
    const double t = s.t;
    auto ui = [&](int i, double tt) {
      return Scalar2([&, i, tt](double a, double b) { return ms.u(vec2(a, b), tt)[i]; });
    };
    const Scalar2 u0 = ui(0, t), u1 = ui(1, t);
    const Scalar2 pf = [&](double a, double b) { return ms.p(vec2(a, b), t); };
    const Scalar2 psif = [&](double a, double b) { return ms.psi(vec2(a, b), t); };
    const Scalar2* u[2] = {&u0, &u1};

    // -mu (lap u + grad div u) + grad psi + alpha grad p = f_u
    const Point f = ms.f_u(vec2(s.x, s.y), t);
    for (int i = 0; i < 2; ++i) {
      double lap = 0.0, grad_div = 0.0;
      for (int j = 0; j < 2; ++j) {
        lap += dxx(*u[i], s.x, s.y, j, j);
        grad_div += dxx(*u[j], s.x, s.y, i, j);
      }
      const double r = -mp.mu * (lap + grad_div) + dx(psif, s.x, s.y, i) +
                       mp.alpha * dx(pf, s.x, s.y, i) - f[i];
      CHECK(std::abs(r) < 1e-8 * std::max(1.0, std::abs(f[i])));
    }

    // psi = -lambda div u
    const double div = dx(u0, s.x, s.y, 0) + dx(u1, s.x, s.y, 1);
    if (!mp.lambda_infinite) {
      CHECK(std::abs(ms.psi(vec2(s.x, s.y), t) + lam * div) < 1e-8 * std::max(1.0, lam));
    }

    // c0 p_t + alpha div u_t - kappa lap p = f_p
    const double pt = (ms.p(vec2(s.x, s.y), t + 1e-6) - ms.p(vec2(s.x, s.y), t - 1e-6)) / 2e-6;
    const double div_ut = dt4(
        [&](double tt) {
          const Scalar2 a = ui(0, tt), b = ui(1, tt);
          return dx(a, s.x, s.y, 0) + dx(b, s.x, s.y, 1);
        },
        t, 1e-3);
    const double lap_p = dxx(pf, s.x, s.y, 0, 0) + dxx(pf, s.x, s.y, 1, 1);
    const double fp = ms.f_p(vec2(s.x, s.y), t);
    const double rp = mp.c0 * pt + mp.alpha * div_ut - mp.kappa * lap_p - fp;
    CHECK(std::abs(rp) < 1e-8 * std::max(1.0, std::abs(fp)));

    // w = -kappa grad p, div w = -kappa lap p
    const Point w = ms.w(vec2(s.x, s.y), t);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(w[i] + mp.kappa * dx(pf, s.x, s.y, i)) < 1e-9 * std::max(1.0, mp.kappa));
    }
    CHECK(std::abs(ms.div_w(vec2(s.x, s.y), t) + mp.kappa * lap_p) < 1e-8);

    const SmallMatrix g = ms.grad_u(vec2(s.x, s.y), t);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(std::abs(g(i, j) - dx(*u[i], s.x, s.y, j)) < 1e-9);
  }
}

}  // namespace

TEST_CASE("manufactured sources satisfy the Biot equations") {
  for (TestId id : {TestId::Test1, TestId::Test2, TestId::Test3, TestId::Test5, TestId::Test6}) {
    INFO(to_string(id));
    check_pde_residuals(id, default_params(id));
  }
  MaterialParams mp;
  mp.lambda = 1e3;
  mp.mu = 2.0;
  mp.alpha = 0.7;
  mp.kappa = 1e-3;
  mp.c0 = 1e-3;
  check_pde_residuals(TestId::Test3, mp);
  mp.lambda_infinite = true;
  check_pde_residuals(TestId::Test6, mp);
}

TEST_CASE("manufactured solution spot values") {
  const auto t1 = builtin_solution(TestId::Test1, default_params(TestId::Test1));
  CHECK(t1.u(vec2(3.0, 0.0), 0.0).norm() < 1e-15);
  CHECK(t1.p(vec2(0.0, 2.0), 0.0) == doctest::Approx(1.1505));

  // The lambda-scaled quadratic part contributes e^t (x + y) to div u, so
  // psi = -e^t (x + y) for every lambda.
  for (double lam : {1e3, 1e8}) {
    MaterialParams mp;
    mp.lambda = lam;
    const auto t3 = builtin_solution(TestId::Test3, mp);
    CHECK(t3.psi(vec2(-0.3, 0.4), 0.5) == doctest::Approx(-std::exp(0.5) * 0.1).epsilon(1e-12));
  }

  const auto t5 = builtin_solution(TestId::Test5, default_params(TestId::Test5));
  const Point x = vec2(0.3, 0.8);
  CHECK(t5.u(x, 0.0).norm() == 0.0);
  CHECK(t5.p(x, 0.0) == 0.0);
  CHECK(t5.psi(x, 0.0) == 0.0);
  CHECK(t5.w(x, 0.0).norm() == 0.0);
}

TEST_CASE("manufactured solution argument checks") {
  MaterialParams mp;
  mp.lambda_infinite = true;
  CHECK_THROWS_AS(builtin_solution(TestId::Test1, mp), ParameterError);
  CHECK_NOTHROW(builtin_solution(TestId::Test6, mp));
  CHECK(parse_test_id("test5") == TestId::Test5);
  CHECK_THROWS_AS(parse_test_id("test4"), ConfigError);
  CHECK(default_params(TestId::Test6).lambda == 1e8);
  CHECK(default_params(TestId::Test6).c0 == 0.0);
}

TEST_CASE("manufactured problem means match the fields") {
  const auto geo = test_geometry(TestId::Test6);
  const auto ms = builtin_solution(TestId::Test6, default_params(TestId::Test6));
  const ProblemData d = manufactured_problem(ms, geo);
  // 4/pi^2 is exactly the mean of sin(pi x) sin(pi y) on the unit square.
  CHECK(std::abs(d.p_mean(0.7)) < 1e-12);
  CHECK(d.psi_mean(0.0) == doctest::Approx(-1.0).epsilon(1e-12));
}
