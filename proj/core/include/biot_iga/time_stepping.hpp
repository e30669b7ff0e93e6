#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biot_iga/assembly.hpp"

namespace biot {

/// Discrete fields at one time level (full coefficient vectors, boundary
/// dofs included).
struct BiotState {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd psi;
  Eigen::VectorXd w;
  Eigen::VectorXd p;
};

struct SchemeSpec {
  enum class Kind { BackwardEuler, CrankNicolson, BDF };
  Kind kind = Kind::BackwardEuler;
  int bdf_order = 1;

  static SchemeSpec backward_euler() { return {Kind::BackwardEuler, 1}; }
  static SchemeSpec crank_nicolson() { return {Kind::CrankNicolson, 1}; }
  static SchemeSpec bdf(int k) { return {Kind::BDF, k}; }
  /// Nominal order of accuracy in time.
  int order() const;
  std::string name() const;
};

/// Coefficients lambda_0..lambda_k of sum_j lambda_j y^{n-j} ~ dt y'(t^n).
std::vector<double> bdf_coefficients(int k);

using SpaceTimeScalar = std::function<double(const Point&, double)>;
using SpaceTimeVector = std::function<Point(const Point&, double)>;

enum class InitialMode {
  /// p^0 projected, then (u^0, psi^0) and w^0 solved from the static and
  /// Darcy equations so that the discrete constraints hold at t = 0.
  Consistent,
  /// Independent L2 projections of the four initial fields.
  Projection,
  Zero,
};

/// Loads, boundary data and initial data of a transient problem. Unset
/// functions mean zero.
struct ProblemData {
  SpaceTimeVector body_force;
  SpaceTimeScalar fluid_source;

  std::vector<Face> displacement_faces;
  SpaceTimeVector displacement;
  std::vector<Face> flux_faces;
  SpaceTimeVector flux;
  std::vector<Face> traction_faces;
  SpaceTimeVector traction;

  InitialMode initial_mode = InitialMode::Consistent;
  SpaceTimeVector initial_u;
  SpaceTimeScalar initial_psi;
  SpaceTimeVector initial_w;
  SpaceTimeScalar initial_p;

  /// Prescribed domain integrals of psi and p, used when the constraint is
  /// active (see BiotStepper).
  std::function<double(double)> psi_mean;
  std::function<double(double)> p_mean;
};

/// Assembles the operator blocks once and advances states with implicit
/// schemes. Each distinct (scheme, dt) system is factorized once and reused.
///
/// Mean constraints: the psi integral is constrained when u is prescribed on
/// every face; the p integral when u and the normal flux are both prescribed
/// on every face (the only remaining control of the mean is then c0).
class BiotStepper {
 public:
  BiotStepper(const MixedBiotSpaces& spaces, const GeometryMap& geo,
              const MaterialParams& params, ProblemData data,
              const AssemblyOptions& options = {});
  ~BiotStepper();
  BiotStepper(BiotStepper&&) noexcept;
  BiotStepper& operator=(BiotStepper&&) noexcept;

  const BiotBlocks& blocks() const noexcept { return blocks_; }
  const MixedBiotSpaces& spaces() const noexcept { return spaces_; }
  const MaterialParams& params() const noexcept { return params_; }
  bool psi_constrained() const noexcept { return psi_constrained_; }
  bool p_constrained() const noexcept { return p_constrained_; }
  const Eigen::VectorXd& p_mean_row() const noexcept { return p_row_; }
  int quadrature_points() const noexcept { return nq_; }

  BiotState initial_state();

  BiotState backward_euler_step(const BiotState& prev, double dt);
  BiotState crank_nicolson_step(const BiotState& prev, double dt);
  /// history[0] is the most recent state, history[k-1] the oldest.
  BiotState bdf_step(std::span<const BiotState> history, double dt, int k);

  /// Relative residual of the last solve.
  double last_residual() const noexcept { return last_residual_; }
  int factorizations() const noexcept { return static_cast<int>(solvers_.size()); }
  /// Releases cached factorizations.
  void clear_factorizations();
  /// Tolerance on the relative solve residual; exceeded -> NumericalError.
  void set_residual_tolerance(double tol) { residual_tol_ = tol; }

 private:
  struct StepSystem;
  BiotState step(std::span<const BiotState> history, std::span<const double> a, double theta,
                 double dt);
  StepSystem& system_for(double a0, double theta, double dt);
  BiotState compute_initial_state();
  EssentialValues displacement_values(double t) const;
  EssentialValues flux_values(double t) const;
  Eigen::VectorXd momentum_load(double t) const;
  Eigen::VectorXd fluid_load(double t);

  MixedBiotSpaces spaces_;
  GeometryMap geo_;
  MaterialParams params_;
  ProblemData data_;
  int nq_;
  BiotBlocks blocks_;
  std::optional<LoadOperator> body_op_, source_op_;

  std::vector<int> free_v_, fixed_v_, free_w_, fixed_w_;
  SparseMatrix A1ff_, A1fe_, B1f_, B1e_, B2f_, B2e_, A3ff_, A3fe_, B3f_, B3e_;
  SparseMatrix B1fT_, B2fT_, B3fT_;
  bool psi_constrained_ = false;
  bool p_constrained_ = false;
  Eigen::VectorXd p_row_;

  std::map<std::array<double, 3>, std::unique_ptr<StepSystem>> solvers_;
  std::map<double, Eigen::VectorXd> fluid_cache_;
  std::optional<BiotState> initial_;
  double last_residual_ = 0.0;
  double residual_tol_ = 1e-9;
};

struct TransientResult {
  /// All states (initial included) when the step count is <= 4096.
  std::vector<BiotState> states;
  BiotState final_state;
  int steps = 0;
  double max_residual = 0.0;
};

using StateObserver = std::function<void(const BiotState&)>;

/// T / dt must be an integer within 1e-9; observer sees every state
/// including the initial one.
TransientResult run_transient(BiotStepper& stepper, const SchemeSpec& scheme, double T,
                              double dt, const StateObserver& observer = {});

TransientResult run_transient(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                              const MaterialParams& params, const SchemeSpec& scheme, double T,
                              double dt, const ProblemData& data,
                              const StateObserver& observer = {});

/// Number of uniform steps; throws ParameterError when T/dt is not integral.
int step_count(double T, double dt);

}  // namespace biot
