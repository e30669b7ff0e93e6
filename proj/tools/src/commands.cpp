#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "biot_iga/errors.hpp"

namespace biot::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> echo_lines(const RunConfig& c) {
  std::vector<std::string> lines;
  for (const auto& [k, v] : c.echo()) lines.push_back(k + "=" + v);
  return lines;
}

void write_comments(std::ostream& out, const RunConfig& c) {
  for (const auto& line : echo_lines(c)) out << "# " << line << '\n';
}

int run_study(const RunConfig& c, std::ostream& out) {
  StudyConfig s;
  s.test = c.test;
  if (c.geometry != "default") s.geometry = std::make_shared<const GeometryMap>(c.domain());
  s.degrees = c.degrees;
  s.meshes = c.meshes;
  s.scheme = c.scheme;
  s.params = c.params;
  s.T = c.T;
  s.dt = c.dt;
  s.initial_mode = c.initial_mode;
  s.quadrature_points = c.quadrature_points;
  s.threads = c.threads;
  const ConvergenceReport report = convergence_study(s);
  const auto comments = echo_lines(c);
  write_csv(out, report, comments);
  int peak = 0;
  for (const auto& r : report.rows) peak = std::max(peak, r.total_dofs);
  return peak;
}

int run_infsup(const RunConfig& c, std::ostream& out) {
  const GeometryMap geo = c.domain();
  const auto rows = infsup_sweep(geo, c.degrees, c.meshes);
  write_comments(out, c);
  out << "h,beta_th,beta_div\n";
  for (const auto& r : rows) {
    out << fmt(1.0 / r.mesh) << ',' << fmt(r.beta_th) << ',' << fmt(r.beta_div) << '\n';
  }
  const int finest = *std::max_element(c.meshes.begin(), c.meshes.end());
  const auto sp = spaces_for_mesh(geo, finest, c.degrees, true);
  return sp.V.size() + sp.M.size() + sp.W.size() + sp.Q.size();
}

int run_cantilever(const RunConfig& c, std::ostream& out) {
  CantileverConfig cc;
  cc.params = c.params;
  cc.degrees = c.degrees;
  cc.mesh = c.meshes.front();
  cc.T = c.T;
  cc.dt = c.dt.value();
  cc.traction_scale = c.traction;
  cc.samples = c.samples;
  const CantileverResult r = cantilever_2d(cc);
  write_comments(out, c);
  out << "xi,eta,p\n";
  const double last = c.samples - 1;
  for (int i = 0; i < r.samples.rows(); ++i) {
    for (int j = 0; j < r.samples.cols(); ++j) {
      out << fmt(i / last) << ',' << fmt(j / last) << ',' << fmt(r.samples(i, j)) << '\n';
    }
  }
  out << "# metrics p_min=" << fmt(r.p_min) << " p_max=" << fmt(r.p_max)
      << " max_sign_changes=" << r.max_sign_changes << " total_dofs=" << r.total_dofs << '\n';
  return r.total_dofs;
}

int run_compare6(const RunConfig& c, std::ostream& out) {
  Test6Config t;
  t.params = c.params;
  t.h_degrees = c.degrees;
  t.h_meshes = c.meshes;
  t.pk_mesh = c.pk_mesh;
  t.pk_degrees = c.pk_degrees;
  t.scheme = c.scheme;
  t.dt = c.dt.value();
  t.T = c.T;
  t.threads = c.threads;
  const auto points = refinement_comparison_test6(t);
  write_comments(out, c);
  out << "strategy,p_p,k_p,p_v,k_v,mesh,dofs,E_u,E_p,E_w,E_psi\n";
  int peak = 0;
  for (const auto& p : points) {
    const auto& d = p.degrees;
    out << to_string(p.strategy) << ',' << d.p_p << ',' << d.k_p << ',' << d.p_v << ','
        << d.k_v << ',' << p.mesh << ',' << p.dofs << ',' << fmt(p.errors.E_u) << ','
        << fmt(p.errors.E_p) << ',' << fmt(p.errors.E_w) << ',' << fmt(p.errors.E_psi) << '\n';
    peak = std::max(peak, p.dofs);
  }
  return peak;
}

}  // namespace

RunSummary run(const RunConfig& config, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  switch (config.command) {
    case Command::Solve:
    case Command::Convergence: summary.peak_dofs = run_study(config, out); break;
    case Command::InfSup: summary.peak_dofs = run_infsup(config, out); break;
    case Command::Cantilever: summary.peak_dofs = run_cantilever(config, out); break;
    case Command::Compare6: summary.peak_dofs = run_compare6(config, out); break;
  }
  out.flush();
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace biot::cli
