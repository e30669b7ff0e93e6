#include "biot_iga/time_stepping.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "biot_iga/errors.hpp"

namespace biot {

int SchemeSpec::order() const {
  switch (kind) {
    case Kind::BackwardEuler: return 1;
    case Kind::CrankNicolson: return 2;
    case Kind::BDF: return bdf_order;
  }
  return 1;
}

std::string SchemeSpec::name() const {
  switch (kind) {
    case Kind::BackwardEuler: return "backward_euler";
    case Kind::CrankNicolson: return "crank_nicolson";
    case Kind::BDF: return "bdf" + std::to_string(bdf_order);
  }
  return "unknown";
}

std::vector<double> bdf_coefficients(int k) {
  switch (k) {
    case 1: return {1.0, -1.0};
    case 2: return {1.5, -2.0, 0.5};
    default: throw ParameterError("BDF order must be 1 or 2");
  }
}

int step_count(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw ParameterError("T and dt must be positive");
  const double r = T / dt;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
    throw ParameterError("T / dt = " + std::to_string(r) + " is not an integer step count");
  }
  return static_cast<int>(n);
}

namespace {

std::vector<int> complement(int n, const std::vector<int>& sorted) {
  std::vector<int> out;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < sorted.size() && sorted[k] == i) {
      ++k;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

bool covers_all_faces(const std::vector<Face>& faces, int dim) {
  for (const Face& f : all_faces(dim)) {
    if (std::find(faces.begin(), faces.end(), f) == faces.end()) return false;
  }
  return true;
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& idx) {
  Eigen::VectorXd y(static_cast<long>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) y[i] = x[idx[i]];
  return y;
}

void scatter(Eigen::VectorXd& x, const std::vector<int>& idx, const Eigen::VectorXd& v) {
  for (std::size_t i = 0; i < idx.size(); ++i) x[idx[i]] = v[i];
}

// Values ordered like `dofs` (essential value helpers return sorted dofs).
Eigen::VectorXd ordered_values(const EssentialValues& ev, const std::vector<int>& dofs) {
  if (ev.dofs != dofs) throw NumericalError("essential dof sets disagree");
  return ev.values;
}

}  // namespace

struct BiotStepper::StepSystem {
  explicit StepSystem(const BlockSystem& s) : solver(s) {}
  BlockSolver solver;
};

BiotStepper::BiotStepper(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                         const MaterialParams& params, ProblemData data,
                         const AssemblyOptions& options)
    : spaces_(spaces),
      geo_(geo),
      params_(params),
      data_(std::move(data)),
      nq_(options.quadrature_points > 0 ? options.quadrature_points
                                        : default_rule_order(spaces.degrees)),
      blocks_(assemble_blocks(spaces, geo, params, options)) {
  const int d = spaces_.dim();
  if (data_.body_force) body_op_.emplace(spaces_.V, geo_, nq_);
  if (data_.fluid_source) source_op_.emplace(spaces_.Q, geo_, nq_);
  fixed_v_ = boundary_dofs(spaces_.V, data_.displacement_faces);
  free_v_ = complement(spaces_.V.size(), fixed_v_);
  fixed_w_ = boundary_dofs(spaces_.W, data_.flux_faces);
  free_w_ = complement(spaces_.W.size(), fixed_w_);

  std::vector<int> all_m(spaces_.M.size()), all_q(spaces_.Q.size());
  for (int i = 0; i < spaces_.M.size(); ++i) all_m[i] = i;
  for (int i = 0; i < spaces_.Q.size(); ++i) all_q[i] = i;
  const auto& B = blocks_;
  A1ff_ = B.A1.submatrix(free_v_, free_v_);
  A1fe_ = B.A1.submatrix(free_v_, fixed_v_);
  B1f_ = B.B1.submatrix(all_m, free_v_);
  B1e_ = B.B1.submatrix(all_m, fixed_v_);
  B2f_ = B.B2.submatrix(all_q, free_v_);
  B2e_ = B.B2.submatrix(all_q, fixed_v_);
  A3ff_ = B.A3.submatrix(free_w_, free_w_);
  A3fe_ = B.A3.submatrix(free_w_, fixed_w_);
  B3f_ = B.B3.submatrix(all_q, free_w_);
  B3e_ = B.B3.submatrix(all_q, fixed_w_);
  B1fT_ = B1f_.transpose();
  B2fT_ = B2f_.transpose();
  B3fT_ = B3f_.transpose();

  const bool u_everywhere = covers_all_faces(data_.displacement_faces, d);
  psi_constrained_ = u_everywhere;
  p_constrained_ = u_everywhere && covers_all_faces(data_.flux_faces, d);
  p_row_ = spaces_.zero_mean_Q ? *spaces_.zero_mean_Q : parametric_integrals(spaces_.Q.component(0));
}

void BiotStepper::clear_factorizations() { solvers_.clear(); }

BiotStepper::~BiotStepper() = default;
BiotStepper::BiotStepper(BiotStepper&&) noexcept = default;
BiotStepper& BiotStepper::operator=(BiotStepper&&) noexcept = default;

EssentialValues BiotStepper::displacement_values(double t) const {
  if (!data_.displacement) {
    return {fixed_v_, Eigen::VectorXd::Zero(static_cast<long>(fixed_v_.size()))};
  }
  return essential_displacement_values(
      spaces_.V, geo_, data_.displacement_faces,
      [&](const Point& x) { return data_.displacement(x, t); }, nq_);
}

EssentialValues BiotStepper::flux_values(double t) const {
  if (!data_.flux) return {fixed_w_, Eigen::VectorXd::Zero(static_cast<long>(fixed_w_.size()))};
  return essential_flux_values(spaces_.W, geo_, data_.flux_faces,
                               [&](const Point& x) { return data_.flux(x, t); }, nq_);
}

Eigen::VectorXd BiotStepper::momentum_load(double t) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(spaces_.V.size());
  if (data_.body_force) {
    f += body_op_->apply(VectorField([&](const Point& x) { return data_.body_force(x, t); }));
  }
  if (data_.traction && !data_.traction_faces.empty()) {
    f += assemble_traction(spaces_.V, geo_, data_.traction_faces,
                           [&](const Point& x) { return data_.traction(x, t); }, nq_);
  }
  return f;
}

Eigen::VectorXd BiotStepper::fluid_load(double t) {
  const auto it = fluid_cache_.find(t);
  if (it != fluid_cache_.end()) return it->second;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spaces_.Q.size());
  if (data_.fluid_source) {
    g = source_op_->apply(ScalarField([&](const Point& x) { return data_.fluid_source(x, t); }));
  }
  while (fluid_cache_.size() >= 2) fluid_cache_.erase(fluid_cache_.begin());
  fluid_cache_[t] = g;
  return g;
}

BiotStepper::StepSystem& BiotStepper::system_for(double a0, double theta, double dt) {
  const std::array<double, 3> key{a0, theta, dt};
  auto it = solvers_.find(key);
  if (it != solvers_.end()) return *it->second;
  const int nv = static_cast<int>(free_v_.size());
  const int nw = static_cast<int>(free_w_.size());
  BlockSystem sys({nv, spaces_.M.size(), nw, spaces_.Q.size()});
  sys.add_block(0, 0, A1ff_);
  sys.add_block(0, 1, B1fT_, -1.0);
  sys.add_block(0, 3, B2fT_, -1.0);
  sys.add_block(1, 0, B1f_, -a0);
  sys.add_block(1, 1, blocks_.A2, -a0);
  sys.add_block(2, 2, A3ff_, dt);
  sys.add_block(2, 3, B3fT_, -dt);
  sys.add_block(3, 0, B2f_, -a0);
  sys.add_block(3, 2, B3f_, -theta * dt);
  sys.add_block(3, 3, blocks_.A4, -a0);
  if (psi_constrained_) sys.add_constraint(1, spaces_.zero_mean_M);
  if (p_constrained_) sys.add_constraint(3, p_row_);
  auto [pos, ok] = solvers_.emplace(key, std::make_unique<StepSystem>(sys));
  (void)ok;
  return *pos->second;
}

BiotState BiotStepper::step(std::span<const BiotState> history, std::span<const double> a,
                            double theta, double dt) {
  const BiotState& prev = history[0];
  const double t = prev.t + dt;
  const double a0 = a[0];
  const Eigen::VectorXd gu = ordered_values(displacement_values(t), fixed_v_);
  const Eigen::VectorXd gw = ordered_values(flux_values(t), fixed_w_);

  Eigen::VectorXd hist_m = Eigen::VectorXd::Zero(spaces_.M.size());
  Eigen::VectorXd hist_q = Eigen::VectorXd::Zero(spaces_.Q.size());
  for (std::size_t j = 1; j < a.size(); ++j) {
    const BiotState& s = history[j - 1];
    hist_m += a[j] * (blocks_.B1 * s.u + blocks_.A2 * s.psi);
    hist_q += a[j] * (blocks_.A4 * s.p + blocks_.B2 * s.u);
  }

  Eigen::VectorXd rv = gather(momentum_load(t), free_v_) - A1fe_ * gu;
  Eigen::VectorXd rm = hist_m + a0 * (B1e_ * gu);
  Eigen::VectorXd rw = -dt * (A3fe_ * gw);
  Eigen::VectorXd rq = -theta * dt * fluid_load(t) + hist_q + a0 * (B2e_ * gu) +
                       theta * dt * (B3e_ * gw);
  if (theta != 1.0) {
    rq += (1.0 - theta) * dt * (blocks_.B3 * prev.w - fluid_load(prev.t));
  }

  Eigen::VectorXd targets(static_cast<int>(psi_constrained_) + static_cast<int>(p_constrained_));
  int k = 0;
  if (psi_constrained_) targets[k++] = data_.psi_mean ? data_.psi_mean(t) : 0.0;
  if (p_constrained_) targets[k++] = data_.p_mean ? data_.p_mean(t) : 0.0;

  StepSystem& sys = system_for(a0, theta, dt);
  const Eigen::VectorXd rhs[] = {rv, rm, rw, rq};
  const BlockSolution sol = sys.solver.solve(rhs, targets);
  last_residual_ = sol.residual;
  if (!(sol.residual < residual_tol_)) {
    throw NumericalError("step residual " + std::to_string(sol.residual) +
                         " exceeds tolerance at t = " + std::to_string(t));
  }
  BiotState next;
  next.t = t;
  next.u = Eigen::VectorXd::Zero(spaces_.V.size());
  scatter(next.u, free_v_, sol.fields[0]);
  scatter(next.u, fixed_v_, gu);
  next.psi = sol.fields[1];
  next.w = Eigen::VectorXd::Zero(spaces_.W.size());
  scatter(next.w, free_w_, sol.fields[2]);
  scatter(next.w, fixed_w_, gw);
  next.p = sol.fields[3];
  return next;
}

BiotState BiotStepper::backward_euler_step(const BiotState& prev, double dt) {
  return bdf_step(std::span<const BiotState>(&prev, 1), dt, 1);
}

BiotState BiotStepper::crank_nicolson_step(const BiotState& prev, double dt) {
  const double a[] = {1.0, -1.0};
  return step(std::span<const BiotState>(&prev, 1), a, 0.5, dt);
}

BiotState BiotStepper::bdf_step(std::span<const BiotState> history, double dt, int k) {
  const auto a = bdf_coefficients(k);
  if (static_cast<int>(history.size()) < k) {
    throw ParameterError("BDF" + std::to_string(k) + " needs " + std::to_string(k) +
                         " past states");
  }
  return step(history, a, 1.0, dt);
}

BiotState BiotStepper::initial_state() {
  if (!initial_) initial_ = compute_initial_state();
  return *initial_;
}

BiotState BiotStepper::compute_initial_state() {
  BiotState s;
  s.t = 0.0;
  const auto& sp = spaces_;
  s.u = Eigen::VectorXd::Zero(sp.V.size());
  s.psi = Eigen::VectorXd::Zero(sp.M.size());
  s.w = Eigen::VectorXd::Zero(sp.W.size());
  s.p = Eigen::VectorXd::Zero(sp.Q.size());
  if (data_.initial_mode == InitialMode::Zero) return s;

  const Eigen::VectorXd gu = ordered_values(displacement_values(0.0), fixed_v_);
  const Eigen::VectorXd gw = ordered_values(flux_values(0.0), fixed_w_);
  std::optional<MeanConstraint> pc, mc;
  if (p_constrained_) pc = MeanConstraint{p_row_, data_.p_mean ? data_.p_mean(0.0) : 0.0};
  if (psi_constrained_) {
    mc = MeanConstraint{sp.zero_mean_M, data_.psi_mean ? data_.psi_mean(0.0) : 0.0};
  }
  if (data_.initial_p) {
    s.p = l2_project(sp.Q, geo_, [&](const Point& x) { return data_.initial_p(x, 0.0); }, nq_, pc);
  }

  if (data_.initial_mode == InitialMode::Projection) {
    if (data_.initial_u) {
      s.u = l2_project(sp.V, geo_, [&](const Point& x) { return data_.initial_u(x, 0.0); }, nq_);
    }
    if (data_.initial_psi) {
      s.psi = l2_project(sp.M, geo_, [&](const Point& x) { return data_.initial_psi(x, 0.0); },
                         nq_, mc);
    }
    if (data_.initial_w) {
      s.w = l2_project(sp.W, geo_, [&](const Point& x) { return data_.initial_w(x, 0.0); }, nq_);
    }
    scatter(s.u, fixed_v_, gu);
    scatter(s.w, fixed_w_, gw);
    return s;
  }

  // Static elasticity with the initial pressure as load.
  BlockSystem el({static_cast<int>(free_v_.size()), sp.M.size()});
  el.add_block(0, 0, A1ff_);
  el.add_block(0, 1, B1fT_, -1.0);
  el.add_block(1, 0, B1f_, -1.0);
  el.add_block(1, 1, blocks_.A2, -1.0);
  Eigen::VectorXd targets;
  if (mc) {
    el.add_constraint(1, mc->row);
    targets = Eigen::VectorXd::Constant(1, mc->target);
  }
  const Eigen::VectorXd rhs[] = {
      gather(momentum_load(0.0), free_v_) - A1fe_ * gu + B2fT_ * s.p, B1e_ * gu};
  const BlockSolution us = solve_constrained(el, rhs, targets);
  if (!(us.residual < residual_tol_)) throw NumericalError("initial elasticity solve inaccurate");
  scatter(s.u, free_v_, us.fields[0]);
  scatter(s.u, fixed_v_, gu);
  s.psi = us.fields[1];

  // Darcy law with the initial pressure.
  if (!free_w_.empty()) {
    BlockSystem da({static_cast<int>(free_w_.size())});
    da.add_block(0, 0, A3ff_);
    const Eigen::VectorXd drhs[] = {B3fT_ * s.p - A3fe_ * gw};
    const BlockSolution ws = solve_constrained(da, drhs);
    if (!(ws.residual < residual_tol_)) throw NumericalError("initial Darcy solve inaccurate");
    scatter(s.w, free_w_, ws.fields[0]);
  }
  scatter(s.w, fixed_w_, gw);
  return s;
}

TransientResult run_transient(BiotStepper& stepper, const SchemeSpec& scheme, double T,
                              double dt, const StateObserver& observer) {
  const int n = step_count(T, dt);
  TransientResult r;
  r.steps = n;
  const bool keep = n <= 4096;
  std::deque<BiotState> hist;
  BiotState s = stepper.initial_state();
  if (observer) observer(s);
  if (keep) r.states.push_back(s);
  hist.push_front(s);
  const int k = scheme.kind == SchemeSpec::Kind::BDF ? scheme.bdf_order : 1;
  if (scheme.kind == SchemeSpec::Kind::BDF) bdf_coefficients(k);
  for (int step = 1; step <= n; ++step) {
    BiotState next;
    switch (scheme.kind) {
      case SchemeSpec::Kind::BackwardEuler: next = stepper.backward_euler_step(hist.front(), dt); break;
      case SchemeSpec::Kind::CrankNicolson: next = stepper.crank_nicolson_step(hist.front(), dt); break;
      case SchemeSpec::Kind::BDF: {
        // Lower-order startup: step j uses order min(j, k).
        const int order = std::min(step, k);
        std::vector<BiotState> h(hist.begin(), hist.begin() + order);
        next = stepper.bdf_step(h, dt, order);
        break;
      }
    }
    // Pin the clock to the uniform grid.
    next.t = step == n ? T : step * dt;
    r.max_residual = std::max(r.max_residual, stepper.last_residual());
    if (observer) observer(next);
    if (keep) r.states.push_back(next);
    hist.push_front(std::move(next));
    while (static_cast<int>(hist.size()) > k) hist.pop_back();
  }
  r.final_state = hist.front();
  return r;
}

TransientResult run_transient(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                              const MaterialParams& params, const SchemeSpec& scheme, double T,
                              double dt, const ProblemData& data, const StateObserver& observer) {
  BiotStepper stepper(spaces, geo, params, data);
  return run_transient(stepper, scheme, T, dt, observer);
}

}  // namespace biot
