#include "biot_iga/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "biot_iga/errors.hpp"

namespace biot {

QuadratureRule gauss_legendre(int n) {
  if (n < 1 || n > 16) throw ParameterError("Gauss-Legendre rule size must be in 1..16");
  // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
  // Legendre recurrence, weights 2 v_0^2.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  QuadratureRule rule;
  if (n == 1) {
    rule.points = {0.0};
    rule.weights = {2.0};
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points[i] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    rule.weights[i] = 2.0 * v * v;
  }
  // Symmetrize to remove eigensolver round-off.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.points[j] - rule.points[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.points[i] = -x;
    rule.points[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w *= 2.0 / total;
  return rule;
}

int default_rule_order(const MixedDegrees& d) { return std::max(d.p_v, d.p_p + 1) + 1; }

ParametricMesh::ParametricMesh(std::vector<std::vector<double>> breakpoints)
    : breaks_(std::move(breakpoints)) {
  if (breaks_.empty() || breaks_.size() > kMaxDim) {
    throw ParameterError("mesh dimension must be 1..3");
  }
  count_ = 1;
  for (const auto& b : breaks_) {
    if (b.size() < 2) throw ParameterError("each direction needs an element");
    count_ *= static_cast<int>(b.size()) - 1;
  }
}

ParametricMesh ParametricMesh::uniform(std::span<const int> elements) {
  std::vector<std::vector<double>> br;
  for (int n : elements) {
    if (n < 1) throw ParameterError("element count must be >= 1");
    std::vector<double> b(n + 1);
    for (int i = 0; i <= n; ++i) b[i] = static_cast<double>(i) / n;
    br.push_back(std::move(b));
  }
  return ParametricMesh(std::move(br));
}

Index3 ParametricMesh::element_index(int e) const {
  Index3 idx{0, 0, 0};
  for (int l = 0; l < dim(); ++l) {
    idx[l] = e % elements_in(l);
    e /= elements_in(l);
  }
  return idx;
}

std::pair<double, double> ParametricMesh::bounds(int e, int l) const {
  const int i = element_index(e)[l];
  return {breaks_[l][i], breaks_[l][i + 1]};
}

std::vector<QuadPoint> element_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                      int element, std::span<const QuadratureRule> rules) {
  const int d = mesh.dim();
  if (geo.dim() != d) throw DimensionError("mesh and geometry dimensions differ");
  if (element < 0 || element >= mesh.num_elements()) {
    throw ParameterError("element index out of range");
  }
  Index3 n{1, 1, 1};
  std::array<std::pair<double, double>, kMaxDim> b{};
  for (int l = 0; l < d; ++l) {
    n[l] = rules[l].size();
    b[l] = mesh.bounds(element, l);
  }
  std::vector<QuadPoint> out;
  out.reserve(n[0] * n[1] * n[2]);
  Index3 a{0, 0, 0};
  for (a[2] = 0; a[2] < n[2]; ++a[2]) {
    for (a[1] = 0; a[1] < n[1]; ++a[1]) {
      for (a[0] = 0; a[0] < n[0]; ++a[0]) {
        QuadPoint q;
        q.xi.resize(d);
        double w = 1.0;
        for (int l = 0; l < d; ++l) {
          const double half = 0.5 * (b[l].second - b[l].first);
          q.xi[l] = b[l].first + half * (1.0 + rules[l].points[a[l]]);
          w *= half * rules[l].weights[a[l]];
        }
        q.map = geo.eval(q.xi);
        q.weight = w * q.map.det;
        out.push_back(std::move(q));
      }
    }
  }
  return out;
}

std::vector<QuadPoint> element_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                      int element, const QuadratureRule& rule) {
  std::vector<QuadratureRule> rules(mesh.dim(), rule);
  return element_points(geo, mesh, element, rules);
}

double integrate_scalar(const std::function<double(const Point&)>& f,
                        const GeometryMap& geo, const ParametricMesh& mesh, int n) {
  const QuadratureRule rule = gauss_legendre(n);
  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const auto& q : element_points(geo, mesh, e, rule)) total += q.weight * f(q.map.x);
  }
  return total;
}

std::vector<FacePoint> face_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                   const Face& face, const QuadratureRule& rule) {
  const int d = mesh.dim();
  std::vector<int> tang;
  for (int l = 0; l < d; ++l) {
    if (l != face.direction) tang.push_back(l);
  }
  const double fixed = face.side == 0 ? 0.0 : 1.0;
  std::vector<FacePoint> out;
  // Iterate over the face elements (tensor grid in the tangential directions).
  int count = 1;
  for (int l : tang) count *= mesh.elements_in(l);
  const int nq = rule.size();
  int per = 1;
  for (std::size_t t = 0; t < tang.size(); ++t) per *= nq;
  for (int fe = 0; fe < count; ++fe) {
    Index3 ei{0, 0, 0};
    int rem = fe;
    for (std::size_t t = 0; t < tang.size(); ++t) {
      ei[t] = rem % mesh.elements_in(tang[t]);
      rem /= mesh.elements_in(tang[t]);
    }
    for (int k = 0; k < per; ++k) {
      FacePoint fp;
      fp.xi.resize(d);
      fp.xi[face.direction] = fixed;
      double w = 1.0;
      int kr = k;
      for (std::size_t t = 0; t < tang.size(); ++t) {
        const int l = tang[t];
        const int a = kr % nq;
        kr /= nq;
        const double lo = mesh.breakpoints(l)[ei[t]];
        const double hi = mesh.breakpoints(l)[ei[t] + 1];
        const double half = 0.5 * (hi - lo);
        fp.xi[l] = lo + half * (1.0 + rule.points[a]);
        w *= half * rule.weights[a];
      }
      fp.map = geo.eval(fp.xi);
      // Area-weighted normal: cofactor column = det * DF^{-T} e_dir.
      const SmallMatrix inv_t = fp.map.jacobian.inverse().transpose();
      Point nvec = inv_t.col(face.direction) * fp.map.det;
      if (face.side == 0) nvec = -nvec;
      const double len = nvec.norm();
      fp.normal = nvec / len;
      fp.weight = w * len;
      out.push_back(std::move(fp));
    }
  }
  return out;
}

}  // namespace biot
