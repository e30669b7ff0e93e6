#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "biot_iga/assembly.hpp"
#include "biot_iga/time_stepping.hpp"

namespace biot {

enum class TestId { Test1, Test2, Test3, Test5, Test6 };

/// "test1", "test2", ...; throws ConfigError otherwise.
TestId parse_test_id(std::string_view name);
std::string to_string(TestId id);

/// Material parameters the built-in test uses unless overridden.
MaterialParams default_params(TestId id);
/// Domain of the built-in test. Test 1 uses the quarter annulus with radii
/// (1, 2), the domain on which its reference error table is reproduced.
GeometryMap test_geometry(TestId id);

/// Closed-form fields of a 2D manufactured Biot solution and the matching
/// sources. Derivatives are exact (forward-mode second-order jets).
class ManufacturedSolution {
 public:
  struct Fields;

  /// All exact fields at one point.
  struct Sample {
    Point u;
    SmallMatrix grad_u;
    double psi = 0.0;
    Point w;
    double p = 0.0;
  };

  ManufacturedSolution(TestId id, const MaterialParams& params);

  TestId id() const noexcept { return id_; }
  const MaterialParams& params() const noexcept { return params_; }

  Sample sample(const Point& x, double t) const;
  Point u(const Point& x, double t) const;
  /// Row i holds the gradient of u_i.
  SmallMatrix grad_u(const Point& x, double t) const;
  double psi(const Point& x, double t) const;
  Point w(const Point& x, double t) const;
  double div_w(const Point& x, double t) const;
  double p(const Point& x, double t) const;
  Point f_u(const Point& x, double t) const;
  double f_p(const Point& x, double t) const;

 private:
  TestId id_;
  MaterialParams params_;
  std::function<void(const double*, double, Fields&)> eval_;
};

ManufacturedSolution builtin_solution(TestId id, const MaterialParams& params);

/// Loads, Dirichlet data for u and the normal flux on every face, exact means
/// and initial data of `ms` on `geo`.
ProblemData manufactured_problem(const ManufacturedSolution& ms, const GeometryMap& geo,
                                 InitialMode mode = InitialMode::Consistent);

}  // namespace biot
