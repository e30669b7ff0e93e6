#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biot_iga/manufactured.hpp"
#include "biot_iga/time_stepping.hpp"

namespace biot {

/// Spaces on `geo` for mesh parameter n (n elements per unit length), with
/// the geometry's C0 lines carried into the spline spaces.
MixedBiotSpaces spaces_for_mesh(const GeometryMap& geo, int n, const MixedDegrees& degrees,
                                bool c0_is_zero, bool enforce_stability_condition = true);

/// Errors of one time level: H1 norm of u, L2 norms of psi, w and p.
struct FieldErrors {
  double u = 0.0;
  double psi = 0.0;
  double w = 0.0;
  double p = 0.0;
};

FieldErrors state_errors(const BiotState& state, const ManufacturedSolution& ms,
                         const MixedBiotSpaces& spaces, const GeometryMap& geo,
                         int quadrature_points);

/// Same result as state_errors, with the quadrature points and basis values
/// of the four spaces evaluated once and reused for every state.
class ErrorSampler {
 public:
  ErrorSampler(const MixedBiotSpaces& spaces, const GeometryMap& geo, int quadrature_points);

  FieldErrors errors(const BiotState& state, const ManufacturedSolution& ms) const;

 private:
  int dim_ = 2;
  std::vector<Point> points_;
  std::vector<double> weights_;
  SparseMatrix eval_u_, eval_psi_, eval_w_, eval_p_;
};

struct ErrorNorms {
  double E_u = 0.0;
  double E_p = 0.0;
  double E_w = 0.0;
  double E_psi = 0.0;
};

/// Streams the time norms over states n = 1..N: E_u is a max in time, E_w a
/// dt-weighted sum, E_psi a max when lambda is finite and a sum otherwise,
/// E_p a sum when c0 = 0 and a max otherwise.
class ErrorAccumulator {
 public:
  ErrorAccumulator(const MaterialParams& params, double dt);
  void add(const FieldErrors& e);
  ErrorNorms result() const { return norms_; }

 private:
  bool psi_sum_;
  bool p_sum_;
  double dt_;
  ErrorNorms norms_;
};

/// Skips trajectory[0] (the initial state).
ErrorNorms compute_errors(std::span<const BiotState> trajectory, const ManufacturedSolution& ms,
                          const MixedBiotSpaces& spaces, const GeometryMap& geo,
                          int quadrature_points, double dt);

double estimate_order(double e_coarse, double e_fine, double h_coarse, double h_fine);

/// dt(h) = (6 h)^gamma: h^gamma / dt held at its value for h = 1/6, dt = 1.
double coupled_time_step(double h, int gamma);

struct StudyConfig {
  TestId test = TestId::Test1;
  /// Domain override; null selects test_geometry(test).
  std::shared_ptr<const GeometryMap> geometry;
  MixedDegrees degrees;
  std::vector<int> meshes;
  SchemeSpec scheme = SchemeSpec::backward_euler();
  MaterialParams params;
  double T = 1.0;
  /// Explicit step; unset means coupled_time_step.
  std::optional<double> dt;
  InitialMode initial_mode = InitialMode::Consistent;
  int quadrature_points = 0;
  /// Study rows run concurrently on up to this many threads.
  int threads = 1;
};

struct ConvergenceRow {
  int mesh = 0;
  double h = 0.0;
  double dt = 0.0;
  int steps = 0;
  int dof_u = 0;
  int dof_psi = 0;
  int dof_w = 0;
  int dof_p = 0;
  /// Unknowns of the step system, constraints included.
  int total_dofs = 0;
  ErrorNorms errors;
  std::optional<ErrorNorms> orders;
  double max_residual = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
};

ConvergenceReport convergence_study(const StudyConfig& config);

struct TemporalRow {
  SchemeSpec scheme;
  double dt = 0.0;
  ErrorNorms errors;
  double max_residual = 0.0;
};

/// Errors of every scheme and step size on one fixed mesh; the operator
/// blocks are assembled once. Rows are ordered by step size, then scheme.
std::vector<TemporalRow> temporal_study(TestId test, const MaterialParams& params,
                                        const MixedDegrees& degrees, int mesh,
                                        std::span<const SchemeSpec> schemes,
                                        std::span<const double> dts, double T = 1.0);

/// CSV with the header h,dt,dof_u,...,E_psi,ord_psi; `comments` are emitted
/// first as "# " lines.
void write_csv(std::ostream& out, const ConvergenceReport& report,
               std::span<const std::string> comments = {});

/// Dense discrete inf-sup constants on the zero-mean pressure subspace.
/// Throws ParameterError above 4000 unknowns.
double infsup_taylor_hood(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                          int quadrature_points = 0);
double infsup_hdiv(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                   int quadrature_points = 0);

struct InfSupRow {
  int mesh = 0;
  double beta_th = 0.0;
  double beta_div = 0.0;
};

std::vector<InfSupRow> infsup_sweep(const GeometryMap& geo, const MixedDegrees& degrees,
                                    std::span<const int> meshes,
                                    bool enforce_stability_condition = true);

struct CantileverConfig {
  MaterialParams params = MaterialParams::from_young_poisson(1e5, 0.4, 1e-7, 0.93, 0.0);
  MixedDegrees degrees{1, 0, 2, 0};
  int mesh = 16;
  double T = 1e-3;
  double dt = 1e-4;
  double traction_scale = 1.0;
  int samples = 64;
};

struct CantileverResult {
  /// samples(i, j) = p_h at xi = (i, j) / (samples - 1); i runs along the
  /// radial direction.
  Eigen::MatrixXd samples;
  double p_min = 0.0;
  double p_max = 0.0;
  /// Sign changes of p_h along each radial line (fixed j).
  std::vector<int> sign_changes;
  int max_sign_changes = 0;
  int total_dofs = 0;
  BiotState final_state;
};

/// Quarter annulus with u = 0 on the inner arc, traction (0, -1) elsewhere,
/// zero normal flux everywhere and zero initial data, run with backward Euler.
CantileverResult cantilever_2d(const CantileverConfig& config = {});

enum class RefinementStrategy { H, P, K };
std::string to_string(RefinementStrategy s);

struct RefinementPoint {
  RefinementStrategy strategy = RefinementStrategy::H;
  MixedDegrees degrees;
  int mesh = 0;
  int dofs = 0;
  ErrorNorms errors;
};

struct Test6Config {
  MaterialParams params = default_params(TestId::Test6);
  /// h-refinement: degrees fixed, meshes refined.
  MixedDegrees h_degrees{3, 2, 4, 2};
  std::vector<int> h_meshes{2, 4, 8};
  /// p- and k-refinement on a fixed mesh over these displacement degrees.
  int pk_mesh = 4;
  std::vector<int> pk_degrees{2, 3, 4, 5};
  SchemeSpec scheme = SchemeSpec::bdf(2);
  double dt = 1.0 / 128;
  double T = 1.0;
  int threads = 1;
};

/// p-IGA uses C0 splines with p_p = p_v - 1; k-IGA uses the highest
/// regularity admitted by the stability condition, k_p = p_p - 1 = k_v.
std::vector<RefinementPoint> refinement_comparison_test6(const Test6Config& config = {});

/// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace biot
