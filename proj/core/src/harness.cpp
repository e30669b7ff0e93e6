#include "biot_iga/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <Eigen/Dense>

#include "biot_iga/errors.hpp"
#include "biot_iga/quadrature.hpp"

namespace biot {

namespace {

// Runs f(i) for i in [0, n) on up to `threads` workers; rethrows the
// exception of the lowest failing index.
template <class Fn>
void parallel_for(int n, int threads, Fn f) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

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

std::vector<int> iota(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

int error_rule(const MixedDegrees& d, int requested) {
  return requested > 0 ? requested + 1 : default_rule_order(d) + 1;
}

// Orthonormal basis of the complement of m.
Eigen::MatrixXd complement_basis(const Eigen::VectorXd& m) {
  const long n = m.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - 1);
}

double infsup_constant(const SparseMatrix& gram, const SparseMatrix& coupling,
                       const SparseMatrix& pressure_mass, const Eigen::VectorXd& mean_row) {
  const int nf = gram.rows();
  const int np = coupling.rows();
  if (nf + np > 4000) {
    throw ParameterError("inf-sup test with " + std::to_string(nf + np) +
                         " unknowns exceeds the dense limit 4000; use a coarser mesh");
  }
  const SparseLU lu(gram);
  const Eigen::MatrixXd B = coupling.to_dense();
  Eigen::MatrixXd X(nf, np);
  for (int j = 0; j < np; ++j) X.col(j) = lu.solve(B.row(j).transpose());
  Eigen::MatrixXd S = B * X;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::MatrixXd Z = complement_basis(mean_row);
  Eigen::MatrixXd Mz = Z.transpose() * pressure_mass.to_dense() * Z;
  Mz = 0.5 * (Mz + Mz.transpose()).eval();
  const Eigen::MatrixXd Sz = Z.transpose() * S * Z;
  const Eigen::MatrixXd Szs = 0.5 * (Sz + Sz.transpose());
  const Eigenpair e = smallest_generalized_eigenvalue(Szs, Mz);
  return std::sqrt(std::max(e.value, 0.0));
}

int total_unknowns(const BiotStepper& st, const std::vector<int>& fixed_v,
                   const std::vector<int>& fixed_w) {
  const auto& sp = st.spaces();
  return sp.V.size() - static_cast<int>(fixed_v.size()) + sp.M.size() + sp.W.size() -
         static_cast<int>(fixed_w.size()) + sp.Q.size() + (st.psi_constrained() ? 1 : 0) +
         (st.p_constrained() ? 1 : 0);
}

struct RunOutcome {
  ErrorNorms errors;
  int steps = 0;
  int total = 0;
  double max_residual = 0.0;
};

RunOutcome run_manufactured(const ManufacturedSolution& ms, const GeometryMap& geo,
                            const MixedBiotSpaces& sp, const SchemeSpec& scheme, double T,
                            double dt, InitialMode mode, int nq) {
  AssemblyOptions opt;
  opt.quadrature_points = nq;
  BiotStepper st(sp, geo, ms.params(), manufactured_problem(ms, geo, mode), opt);
  const int enq = error_rule(sp.degrees, nq);
  const ErrorSampler sampler(sp, geo, enq);
  ErrorAccumulator acc(ms.params(), dt);
  bool first = true;
  const auto r = run_transient(st, scheme, T, dt, [&](const BiotState& s) {
    if (first) {
      first = false;
      return;
    }
    acc.add(sampler.errors(s, ms));
  });
  RunOutcome out;
  out.errors = acc.result();
  out.steps = r.steps;
  out.max_residual = r.max_residual;
  out.total = total_unknowns(st, boundary_dofs(sp.V, all_faces(2)), boundary_dofs(sp.W, all_faces(2)));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

MixedBiotSpaces spaces_for_mesh(const GeometryMap& geo, int n, const MixedDegrees& degrees,
                                bool c0_is_zero, bool enforce_stability_condition) {
  if (n < 1) throw ParameterError("mesh parameter must be positive");
  SpaceOptions opt;
  opt.c0_lines = geo.c0_lines();
  opt.enforce_stability_condition = enforce_stability_condition;
  const auto el = geo.elements_for_mesh(n);
  return build_mixed_spaces(geo.dim(), el, degrees, c0_is_zero, opt);
}

FieldErrors state_errors(const BiotState& s, const ManufacturedSolution& ms,
                         const MixedBiotSpaces& sp, const GeometryMap& geo, int nq) {
  const ParametricMesh mesh = field_mesh(sp, geo);
  const QuadratureRule rule = gauss_legendre(nq);
  double eu = 0, epsi = 0, ew = 0, ep = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const QuadPoint& q : element_points(geo, mesh, e, rule)) {
      const auto ex = ms.sample(q.map.x, s.t);
      const H1Value u = eval_h1_field(sp.V, s.u, q);
      eu += q.weight * ((u.value - ex.u).squaredNorm() + (u.gradient - ex.grad_u).squaredNorm());
      const double dpsi = eval_l2_field(sp.M, s.psi, q) - ex.psi;
      epsi += q.weight * dpsi * dpsi;
      ew += q.weight * (eval_hdiv_field(sp.W, s.w, q).value - ex.w).squaredNorm();
      const double dp = eval_l2_field(sp.Q, s.p, q) - ex.p;
      ep += q.weight * dp * dp;
    }
  }
  return {std::sqrt(eu), std::sqrt(epsi), std::sqrt(ew), std::sqrt(ep)};
}

ErrorSampler::ErrorSampler(const MixedBiotSpaces& sp, const GeometryMap& geo, int nq)
    : dim_(geo.dim()) {
  const ParametricMesh mesh = field_mesh(sp, geo);
  const QuadratureRule rule = gauss_legendre(nq);
  const int d = dim_;
  // Rows per point: u holds d values then the d x d gradient (row-major).
  std::vector<Triplet> tu, tpsi, tw, tp;
  int k = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const QuadPoint& q : element_points(geo, mesh, e, rule)) {
      points_.push_back(q.map.x);
      weights_.push_back(q.weight);
      const int ru = k * (d + d * d);
      const auto bu = physical_basis(sp.V, q);
      for (std::size_t i = 0; i < bu.dofs.size(); ++i) {
        const int c = bu.component[i];
        tu.push_back({ru + c, bu.dofs[i], bu.scalars[i]});
        for (int j = 0; j < d; ++j) tu.push_back({ru + d + c * d + j, bu.dofs[i], bu.vectors[i][j]});
      }
      const auto bw = physical_basis(sp.W, q);
      for (std::size_t i = 0; i < bw.dofs.size(); ++i) {
        for (int j = 0; j < d; ++j) tw.push_back({k * d + j, bw.dofs[i], bw.vectors[i][j]});
      }
      const auto bm = physical_basis(sp.M, q);
      for (std::size_t i = 0; i < bm.dofs.size(); ++i) tpsi.push_back({k, bm.dofs[i], bm.scalars[i]});
      const auto bq = physical_basis(sp.Q, q);
      for (std::size_t i = 0; i < bq.dofs.size(); ++i) tp.push_back({k, bq.dofs[i], bq.scalars[i]});
      ++k;
    }
  }
  eval_u_ = SparseMatrix::from_triplets(k * (d + d * d), sp.V.size(), std::move(tu));
  eval_w_ = SparseMatrix::from_triplets(k * d, sp.W.size(), std::move(tw));
  eval_psi_ = SparseMatrix::from_triplets(k, sp.M.size(), std::move(tpsi));
  eval_p_ = SparseMatrix::from_triplets(k, sp.Q.size(), std::move(tp));
}

FieldErrors ErrorSampler::errors(const BiotState& s, const ManufacturedSolution& ms) const {
  const int d = dim_;
  const Eigen::VectorXd u = eval_u_ * s.u;
  const Eigen::VectorXd w = eval_w_ * s.w;
  const Eigen::VectorXd psi = eval_psi_ * s.psi;
  const Eigen::VectorXd p = eval_p_ * s.p;
  double eu = 0, epsi = 0, ew = 0, ep = 0;
  for (std::size_t k = 0; k < points_.size(); ++k) {
    const auto ex = ms.sample(points_[k], s.t);
    const long ru = static_cast<long>(k) * (d + d * d);
    double su = 0.0, sw = 0.0;
    for (int c = 0; c < d; ++c) {
      su += std::pow(u[ru + c] - ex.u[c], 2);
      for (int j = 0; j < d; ++j) su += std::pow(u[ru + d + c * d + j] - ex.grad_u(c, j), 2);
      sw += std::pow(w[static_cast<long>(k) * d + c] - ex.w[c], 2);
    }
    const double wk = weights_[k];
    eu += wk * su;
    ew += wk * sw;
    epsi += wk * std::pow(psi[static_cast<long>(k)] - ex.psi, 2);
    ep += wk * std::pow(p[static_cast<long>(k)] - ex.p, 2);
  }
  return {std::sqrt(eu), std::sqrt(epsi), std::sqrt(ew), std::sqrt(ep)};
}

ErrorAccumulator::ErrorAccumulator(const MaterialParams& params, double dt)
    : psi_sum_(params.lambda_infinite), p_sum_(params.c0 == 0.0), dt_(dt) {}

void ErrorAccumulator::add(const FieldErrors& e) {
  norms_.E_u = std::max(norms_.E_u, e.u);
  norms_.E_w += dt_ * e.w;
  norms_.E_psi = psi_sum_ ? norms_.E_psi + dt_ * e.psi : std::max(norms_.E_psi, e.psi);
  norms_.E_p = p_sum_ ? norms_.E_p + dt_ * e.p : std::max(norms_.E_p, e.p);
}

ErrorNorms compute_errors(std::span<const BiotState> trajectory, const ManufacturedSolution& ms,
                          const MixedBiotSpaces& spaces, const GeometryMap& geo, int nq,
                          double dt) {
  ErrorAccumulator acc(ms.params(), dt);
  for (std::size_t n = 1; n < trajectory.size(); ++n) {
    acc.add(state_errors(trajectory[n], ms, spaces, geo, nq));
  }
  return acc.result();
}

double estimate_order(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  if (!(e_coarse > 0 && e_fine > 0 && h_coarse > 0 && h_fine > 0) || h_coarse == h_fine) {
    throw ParameterError("orders need positive errors and distinct mesh sizes");
  }
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

double coupled_time_step(double h, int gamma) { return std::pow(6.0 * h, gamma); }

ConvergenceReport convergence_study(const StudyConfig& c) {
  if (c.meshes.empty()) throw ConfigError("mesh list is empty");
  check_stability_condition(c.degrees);
  const ManufacturedSolution ms(c.test, c.params);
  const GeometryMap geo = c.geometry ? *c.geometry : test_geometry(c.test);
  ConvergenceReport rep;
  rep.rows.resize(c.meshes.size());
  parallel_for(static_cast<int>(c.meshes.size()), c.threads, [&](int i) {
    const int n = c.meshes[i];
    const auto sp = spaces_for_mesh(geo, n, c.degrees, c.params.c0 == 0.0);
    ConvergenceRow& row = rep.rows[i];
    row.mesh = n;
    row.h = 1.0 / n;
    row.dt = c.dt ? *c.dt : coupled_time_step(row.h, sp.gamma);
    const RunOutcome o =
        run_manufactured(ms, geo, sp, c.scheme, c.T, row.dt, c.initial_mode, c.quadrature_points);
    row.steps = o.steps;
    row.errors = o.errors;
    row.max_residual = o.max_residual;
    row.total_dofs = o.total;
    row.dof_u = sp.V.size() - static_cast<int>(boundary_dofs(sp.V, all_faces(2)).size());
    row.dof_psi = sp.M.size();
    row.dof_w = sp.W.size() - static_cast<int>(boundary_dofs(sp.W, all_faces(2)).size());
    row.dof_p = sp.Q.size();
  });
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    auto ord = [&](double ea, double eb) {
      return ea > 0 && eb > 0 ? estimate_order(ea, eb, a.h, b.h) : std::nan("");
    };
    rep.rows[i].orders = ErrorNorms{ord(a.errors.E_u, b.errors.E_u), ord(a.errors.E_p, b.errors.E_p),
                                    ord(a.errors.E_w, b.errors.E_w),
                                    ord(a.errors.E_psi, b.errors.E_psi)};
  }
  return rep;
}

std::vector<TemporalRow> temporal_study(TestId test, const MaterialParams& params,
                                        const MixedDegrees& degrees, int mesh,
                                        std::span<const SchemeSpec> schemes,
                                        std::span<const double> dts, double T) {
  const ManufacturedSolution ms(test, params);
  const GeometryMap geo = test_geometry(test);
  const auto sp = spaces_for_mesh(geo, mesh, degrees, params.c0 == 0.0);
  BiotStepper st(sp, geo, params, manufactured_problem(ms, geo));
  const ErrorSampler sampler(sp, geo, error_rule(degrees, 0));
  std::vector<TemporalRow> rows;
  // Step size outermost: BDF2 reuses the backward-Euler factorization for
  // its startup step before the cache is dropped.
  for (double dt : dts) {
    for (const SchemeSpec& scheme : schemes) {
      ErrorAccumulator acc(params, dt);
      bool first = true;
      const auto r = run_transient(st, scheme, T, dt, [&](const BiotState& s) {
        if (!first) acc.add(sampler.errors(s, ms));
        first = false;
      });
      rows.push_back({scheme, dt, acc.result(), r.max_residual});
    }
    st.clear_factorizations();
  }
  return rows;
}

void write_csv(std::ostream& out, const ConvergenceReport& report,
               std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "h,dt,dof_u,dof_psi,dof_w,dof_p,E_u,ord_u,E_p,ord_p,E_w,ord_w,E_psi,ord_psi\n";
  for (const auto& r : report.rows) {
    auto ord = [&](double ErrorNorms::*f) { return r.orders ? fmt((*r.orders).*f) : std::string(); };
    out << fmt(r.h) << ',' << fmt(r.dt) << ',' << r.dof_u << ',' << r.dof_psi << ',' << r.dof_w
        << ',' << r.dof_p << ',' << fmt(r.errors.E_u) << ',' << ord(&ErrorNorms::E_u) << ','
        << fmt(r.errors.E_p) << ',' << ord(&ErrorNorms::E_p) << ',' << fmt(r.errors.E_w) << ','
        << ord(&ErrorNorms::E_w) << ',' << fmt(r.errors.E_psi) << ',' << ord(&ErrorNorms::E_psi)
        << '\n';
  }
}

double infsup_taylor_hood(const MixedBiotSpaces& sp, const GeometryMap& geo, int nq) {
  if (nq <= 0) nq = default_rule_order(sp.degrees);
  AssemblyOptions opt;
  opt.quadrature_points = nq;
  const BiotBlocks b = assemble_blocks(sp, geo, MaterialParams{}, opt);
  const auto free = complement(sp.V.size(), boundary_dofs(sp.V, all_faces(sp.dim())));
  return infsup_constant(h1_gram(sp.V, geo, nq).submatrix(free, free),
                         b.B1.submatrix(iota(sp.M.size()), free), mass_matrix(sp.M, geo, nq),
                         sp.zero_mean_M);
}

double infsup_hdiv(const MixedBiotSpaces& sp, const GeometryMap& geo, int nq) {
  if (nq <= 0) nq = default_rule_order(sp.degrees);
  AssemblyOptions opt;
  opt.quadrature_points = nq;
  const BiotBlocks b = assemble_blocks(sp, geo, MaterialParams{}, opt);
  const auto free = complement(sp.W.size(), boundary_dofs(sp.W, all_faces(sp.dim())));
  return infsup_constant(hdiv_gram(sp.W, geo, nq).submatrix(free, free),
                         b.B3.submatrix(iota(sp.Q.size()), free), mass_matrix(sp.Q, geo, nq),
                         zero_mean_row(sp.Q, geo, nq));
}

std::vector<InfSupRow> infsup_sweep(const GeometryMap& geo, const MixedDegrees& degrees,
                                    std::span<const int> meshes, bool enforce) {
  std::vector<InfSupRow> rows;
  for (int n : meshes) {
    const auto sp = spaces_for_mesh(geo, n, degrees, true, enforce);
    rows.push_back({n, infsup_taylor_hood(sp, geo), infsup_hdiv(sp, geo)});
  }
  return rows;
}

CantileverResult cantilever_2d(const CantileverConfig& c) {
  const GeometryMap geo = quarter_annulus();
  const auto sp = spaces_for_mesh(geo, c.mesh, c.degrees, c.params.c0 == 0.0);
  ProblemData d;
  d.displacement_faces = {{0, 0}};
  d.flux_faces = all_faces(2);
  d.traction_faces = {{0, 1}, {1, 0}, {1, 1}};
  const double s = c.traction_scale;
  d.traction = [s](const Point&, double) {
    Point t(2);
    t << 0.0, -s;
    return t;
  };
  d.initial_mode = InitialMode::Zero;
  BiotStepper st(sp, geo, c.params, d);
  const auto r = run_transient(st, SchemeSpec::backward_euler(), c.T, c.dt);

  CantileverResult out;
  out.final_state = r.final_state;
  out.total_dofs = total_unknowns(st, boundary_dofs(sp.V, d.displacement_faces),
                                  boundary_dofs(sp.W, d.flux_faces));
  const int n = c.samples;
  out.samples.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      QuadPoint q;
      q.xi = Point(2);
      q.xi << static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1);
      q.map = geo.eval(q.xi);
      out.samples(i, j) = eval_l2_field(sp.Q, r.final_state.p, q);
    }
  }
  out.p_min = out.samples.minCoeff();
  out.p_max = out.samples.maxCoeff();
  const double zero = 1e-12 * out.samples.cwiseAbs().maxCoeff();
  for (int j = 0; j < n; ++j) {
    int changes = 0, last = 0;
    for (int i = 0; i < n; ++i) {
      const double v = out.samples(i, j);
      if (std::abs(v) <= zero) continue;
      const int sign = v > 0 ? 1 : -1;
      if (last != 0 && sign != last) ++changes;
      last = sign;
    }
    out.sign_changes.push_back(changes);
    out.max_sign_changes = std::max(out.max_sign_changes, changes);
  }
  return out;
}

std::string to_string(RefinementStrategy s) {
  switch (s) {
    case RefinementStrategy::H: return "h-IGA";
    case RefinementStrategy::P: return "p-IGA";
    case RefinementStrategy::K: return "k-IGA";
  }
  return "unknown";
}

std::vector<RefinementPoint> refinement_comparison_test6(const Test6Config& c) {
  std::vector<RefinementPoint> pts;
  for (int n : c.h_meshes) pts.push_back({RefinementStrategy::H, c.h_degrees, n, 0, {}});
  for (int p : c.pk_degrees) {
    if (p < 2) throw ParameterError("p- and k-refinement need p_v >= 2");
    pts.push_back({RefinementStrategy::P, MixedDegrees{p - 1, 0, p, 0}, c.pk_mesh, 0, {}});
  }
  for (int p : c.pk_degrees) {
    pts.push_back({RefinementStrategy::K, MixedDegrees{p - 1, p - 2, p, p - 2}, c.pk_mesh, 0, {}});
  }
  const ManufacturedSolution ms(TestId::Test6, c.params);
  const GeometryMap geo = test_geometry(TestId::Test6);
  parallel_for(static_cast<int>(pts.size()), c.threads, [&](int i) {
    auto& pt = pts[i];
    const auto sp = spaces_for_mesh(geo, pt.mesh, pt.degrees, c.params.c0 == 0.0);
    const RunOutcome o = run_manufactured(ms, geo, sp, c.scheme, c.T, c.dt, InitialMode::Consistent, 0);
    pt.dofs = o.total;
    pt.errors = o.errors;
  });
  return pts;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope needs >= 2 paired values");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace biot
