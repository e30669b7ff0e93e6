#include "biot_iga/manufactured.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "biot_iga/errors.hpp"
#include "biot_iga/quadrature.hpp"

namespace biot {

namespace {

constexpr double kPi = std::numbers::pi;

// Second-order jet in the variables (x, y, t).
struct Jet {
  double v = 0.0;
  std::array<double, 3> g{};
  std::array<std::array<double, 3>, 3> h{};

  static Jet constant(double c) {
    Jet j;
    j.v = c;
    return j;
  }
  static Jet variable(double value, int k) {
    Jet j;
    j.v = value;
    j.g[k] = 1.0;
    return j;
  }
};

Jet operator+(Jet a, const Jet& b) {
  a.v += b.v;
  for (int i = 0; i < 3; ++i) {
    a.g[i] += b.g[i];
    for (int k = 0; k < 3; ++k) a.h[i][k] += b.h[i][k];
  }
  return a;
}

Jet operator*(double s, Jet a) {
  a.v *= s;
  for (int i = 0; i < 3; ++i) {
    a.g[i] *= s;
    for (int k = 0; k < 3; ++k) a.h[i][k] *= s;
  }
  return a;
}

Jet operator-(const Jet& a, const Jet& b) { return a + (-1.0) * b; }
Jet operator+(const Jet& a, double c) { return a + Jet::constant(c); }
Jet operator-(const Jet& a, double c) { return a + Jet::constant(-c); }
Jet operator-(double c, const Jet& a) { return Jet::constant(c) - a; }

Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  for (int i = 0; i < 3; ++i) {
    r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (int k = 0; k < 3; ++k) {
      r.h[i][k] = a.h[i][k] * b.v + a.v * b.h[i][k] + a.g[i] * b.g[k] + a.g[k] * b.g[i];
    }
  }
  return r;
}

// f(a) from f, f', f'' at a.v.
Jet chain(const Jet& a, double f0, double f1, double f2) {
  Jet r;
  r.v = f0;
  for (int i = 0; i < 3; ++i) {
    r.g[i] = f1 * a.g[i];
    for (int k = 0; k < 3; ++k) r.h[i][k] = f1 * a.h[i][k] + f2 * a.g[i] * a.g[k];
  }
  return r;
}

Jet sin(const Jet& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
Jet cos(const Jet& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

struct Definition {
  // u = u0 + u1 / lambda.
  std::array<Jet, 2> u0, u1;
  Jet p;
};

Definition define(TestId id, const Jet& x, const Jet& y, const Jet& t) {
  Definition d;
  const Jet zero = Jet::constant(0.0);
  d.u1 = {zero, zero};
  const Jet sx = sin(kPi * x), sy = sin(kPi * y), cx = cos(kPi * x), cy = cos(kPi * y);
  switch (id) {
    case TestId::Test1: {
      const Jet a = sx * sy * exp(t);
      d.u0 = {a, a};
      d.p = (cx + 0.1505) * exp(-1.0 * t);
      break;
    }
    case TestId::Test2:
      d.u0 = {exp(t) * x * (1.0 - x) * y * (1.0 - y), exp(t) * sx * sy};
      d.p = exp(-1.0 * t) * cx * sy;
      break;
    case TestId::Test3:
    case TestId::Test6: {
      const double shift = id == TestId::Test3 ? 4.0 / (3.0 * kPi * kPi) : 4.0 / (kPi * kPi);
      d.u0 = {exp(t) * sx * cy, -1.0 * (exp(t) * cx * sy)};
      d.u1 = {0.5 * (exp(t) * x * x), 0.5 * (exp(t) * y * y)};
      d.p = exp(t) * (sx * sy - shift);
      break;
    }
    case TestId::Test5: {
      const Jet a = (exp(t) - 1.0) * sx * sy;
      d.u0 = {a, a};
      d.p = (exp(-1.0 * t) - 1.0) * cx;
      break;
    }
  }
  return d;
}

bool solenoidal_leading_part(TestId id) { return id == TestId::Test3 || id == TestId::Test6; }

Point vec2(double a, double b) {
  Point r(2);
  r << a, b;
  return r;
}

}  // namespace

struct ManufacturedSolution::Fields {
  double u[2];
  double grad_u[2][2];
  double psi;
  double grad_p[2];
  double p;
  double lap_p;
  double f_u[2];
  double f_p;
};

TestId parse_test_id(std::string_view name) {
  if (name == "test1") return TestId::Test1;
  if (name == "test2") return TestId::Test2;
  if (name == "test3") return TestId::Test3;
  if (name == "test5") return TestId::Test5;
  if (name == "test6") return TestId::Test6;
  throw ConfigError("unknown test id '" + std::string(name) + "'");
}

std::string to_string(TestId id) {
  switch (id) {
    case TestId::Test1: return "test1";
    case TestId::Test2: return "test2";
    case TestId::Test3: return "test3";
    case TestId::Test5: return "test5";
    case TestId::Test6: return "test6";
  }
  return "unknown";
}

MaterialParams default_params(TestId id) {
  MaterialParams m;
  if (id == TestId::Test5) m.c0 = 0.0;
  if (id == TestId::Test6) {
    m.lambda = 1e8;
    m.c0 = 0.0;
  }
  return m;
}

GeometryMap test_geometry(TestId id) {
  switch (id) {
    case TestId::Test1: return quarter_annulus(1.0, 2.0);
    case TestId::Test2:
    case TestId::Test3: return l_shape();
    default: return unit_square();
  }
}

ManufacturedSolution::ManufacturedSolution(TestId id, const MaterialParams& params)
    : id_(id), params_(params) {
  params_.validate();
  if (params_.lambda_infinite && !solenoidal_leading_part(id)) {
    throw ParameterError(to_string(id) + " needs a finite lambda (psi = -lambda div u)");
  }
  const MaterialParams m = params_;
  eval_ = [id, m](const double* xy, double time, Fields& f) {
    const Jet x = Jet::variable(xy[0], 0), y = Jet::variable(xy[1], 1), t = Jet::variable(time, 2);
    const Definition d = define(id, x, y, t);
    const double il = m.inv_lambda();
    // u = u0 + il u1, psi = -lambda div u0 - div u1. A solenoidal u0 drops
    // out of psi exactly instead of leaving lambda-scaled rounding.
    const double lam = m.lambda_infinite || solenoidal_leading_part(id) ? 0.0 : m.lambda;
    double lap[2], grad_div[2], grad_psi[2];
    double div_ut = 0.0;
    for (int i = 0; i < 2; ++i) {
      const Jet& a = d.u0[i];
      const Jet& b = d.u1[i];
      f.u[i] = a.v + il * b.v;
      for (int j = 0; j < 2; ++j) f.grad_u[i][j] = a.g[j] + il * b.g[j];
      lap[i] = a.h[0][0] + a.h[1][1] + il * (b.h[0][0] + b.h[1][1]);
      div_ut += a.h[i][2] + il * b.h[i][2];
    }
    f.psi = -lam * (d.u0[0].g[0] + d.u0[1].g[1]) - (d.u1[0].g[0] + d.u1[1].g[1]);
    for (int j = 0; j < 2; ++j) {
      const double gd0 = d.u0[0].h[0][j] + d.u0[1].h[1][j];
      const double gd1 = d.u1[0].h[0][j] + d.u1[1].h[1][j];
      grad_div[j] = gd0 + il * gd1;
      grad_psi[j] = -lam * gd0 - gd1;
    }
    f.p = d.p.v;
    f.grad_p[0] = d.p.g[0];
    f.grad_p[1] = d.p.g[1];
    f.lap_p = d.p.h[0][0] + d.p.h[1][1];
    for (int i = 0; i < 2; ++i) {
      f.f_u[i] = -m.mu * (lap[i] + grad_div[i]) + grad_psi[i] + m.alpha * f.grad_p[i];
    }
    f.f_p = m.c0 * d.p.g[2] + m.alpha * div_ut - m.kappa * f.lap_p;
  };
}

namespace {
ManufacturedSolution::Fields eval_fields(
    const std::function<void(const double*, double, ManufacturedSolution::Fields&)>& fn,
    const Point& x, double t) {
  if (x.size() != 2) throw DimensionError("manufactured solutions are two-dimensional");
  ManufacturedSolution::Fields f{};
  fn(x.data(), t, f);
  return f;
}
}  // namespace

ManufacturedSolution::Sample ManufacturedSolution::sample(const Point& x, double t) const {
  const auto f = eval_fields(eval_, x, t);
  Sample s;
  s.u = vec2(f.u[0], f.u[1]);
  s.grad_u.resize(2, 2);
  s.grad_u << f.grad_u[0][0], f.grad_u[0][1], f.grad_u[1][0], f.grad_u[1][1];
  s.psi = f.psi;
  s.w = vec2(-params_.kappa * f.grad_p[0], -params_.kappa * f.grad_p[1]);
  s.p = f.p;
  return s;
}

Point ManufacturedSolution::u(const Point& x, double t) const {
  const auto f = eval_fields(eval_, x, t);
  return vec2(f.u[0], f.u[1]);
}

SmallMatrix ManufacturedSolution::grad_u(const Point& x, double t) const {
  const auto f = eval_fields(eval_, x, t);
  SmallMatrix g(2, 2);
  g << f.grad_u[0][0], f.grad_u[0][1], f.grad_u[1][0], f.grad_u[1][1];
  return g;
}

double ManufacturedSolution::psi(const Point& x, double t) const { return eval_fields(eval_, x, t).psi; }

Point ManufacturedSolution::w(const Point& x, double t) const {
  const auto f = eval_fields(eval_, x, t);
  return vec2(-params_.kappa * f.grad_p[0], -params_.kappa * f.grad_p[1]);
}

double ManufacturedSolution::div_w(const Point& x, double t) const {
  return -params_.kappa * eval_fields(eval_, x, t).lap_p;
}

double ManufacturedSolution::p(const Point& x, double t) const { return eval_fields(eval_, x, t).p; }

Point ManufacturedSolution::f_u(const Point& x, double t) const {
  const auto f = eval_fields(eval_, x, t);
  return vec2(f.f_u[0], f.f_u[1]);
}

double ManufacturedSolution::f_p(const Point& x, double t) const { return eval_fields(eval_, x, t).f_p; }

ManufacturedSolution builtin_solution(TestId id, const MaterialParams& params) {
  return ManufacturedSolution(id, params);
}

ProblemData manufactured_problem(const ManufacturedSolution& ms, const GeometryMap& geo,
                                 InitialMode mode) {
  ProblemData d;
  d.displacement_faces = all_faces(2);
  d.flux_faces = all_faces(2);
  d.body_force = [ms](const Point& x, double t) { return ms.f_u(x, t); };
  d.fluid_source = [ms](const Point& x, double t) { return ms.f_p(x, t); };
  d.displacement = [ms](const Point& x, double t) { return ms.u(x, t); };
  d.flux = [ms](const Point& x, double t) { return ms.w(x, t); };
  d.initial_mode = mode;
  d.initial_u = d.displacement;
  d.initial_w = d.flux;
  d.initial_psi = [ms](const Point& x, double t) { return ms.psi(x, t); };
  d.initial_p = [ms](const Point& x, double t) { return ms.p(x, t); };
  const auto el = geo.elements_for_mesh(8);
  const ParametricMesh mesh = ParametricMesh::uniform(el);
  d.psi_mean = [ms, geo, mesh](double t) {
    return integrate_scalar([&](const Point& x) { return ms.psi(x, t); }, geo, mesh, 10);
  };
  d.p_mean = [ms, geo, mesh](double t) {
    return integrate_scalar([&](const Point& x) { return ms.p(x, t); }, geo, mesh, 10);
  };
  return d;
}

}  // namespace biot
