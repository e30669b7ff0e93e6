#include "biot_iga/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "biot_iga/errors.hpp"

namespace biot {

MaterialParams MaterialParams::from_young_poisson(double E, double nu, double kappa,
                                                  double alpha, double c0) {
  MaterialParams p;
  p.mu = E / (2.0 * (1.0 + nu));
  p.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  p.kappa = kappa;
  p.alpha = alpha;
  p.c0 = c0;
  return p;
}

void MaterialParams::validate() const {
  if (!(mu > 0.0)) throw ParameterError("mu must be positive");
  if (!lambda_infinite && !(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  if (!(c0 >= 0.0)) throw ParameterError("c0 must be non-negative");
}

namespace {

int rule_points(const MixedBiotSpaces& s, const AssemblyOptions& o) {
  return o.quadrature_points > 0 ? o.quadrature_points : default_rule_order(s.degrees);
}

// Union of the breakpoints of every component of `space` in direction l.
std::vector<double> union_breakpoints(const TensorSplineSpace& space, int l) {
  std::set<double> b;
  for (int c = 0; c < space.num_components(); ++c) {
    for (double x : space.component(c).direction(l).breakpoints()) b.insert(x);
  }
  return {b.begin(), b.end()};
}

ParametricMesh mesh_from(std::vector<std::vector<double>> br, const GeometryMap& geo) {
  for (int l = 0; l < geo.dim(); ++l) {
    for (double g : geo.basis().direction(l).breakpoints()) {
      if (!std::binary_search(br[l].begin(), br[l].end(), g)) {
        throw DimensionError("geometry breakpoint " + std::to_string(g) +
                             " is not a line of the field mesh");
      }
    }
  }
  return ParametricMesh(std::move(br));
}

template <class Fn>
void run_partitioned(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(count, 1));
  if (threads == 1) {
    fn(0, 0, count);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int lo = static_cast<int>(static_cast<long>(count) * t / threads);
    const int hi = static_cast<int>(static_cast<long>(count) * (t + 1) / threads);
    pool.emplace_back([&, t, lo, hi] { fn(t, lo, hi); });
  }
  for (auto& th : pool) th.join();
}

double dot(const Point& a, const Point& b) { return a.dot(b); }

}  // namespace

ParametricMesh field_mesh(const TensorSplineSpace& space, const GeometryMap& geo) {
  std::vector<std::vector<double>> br;
  for (int l = 0; l < space.dim(); ++l) br.push_back(union_breakpoints(space, l));
  return mesh_from(std::move(br), geo);
}

ParametricMesh field_mesh(const MixedBiotSpaces& spaces, const GeometryMap& geo) {
  if (spaces.dim() != geo.dim()) throw DimensionError("space and geometry dimensions differ");
  std::vector<std::vector<double>> br;
  for (int l = 0; l < spaces.dim(); ++l) {
    const auto v = union_breakpoints(spaces.V, l);
    for (const auto* s : {&spaces.M, &spaces.W, &spaces.Q}) {
      if (union_breakpoints(*s, l) != v) {
        throw DimensionError("mixed spaces do not share the breakpoint mesh");
      }
    }
    br.push_back(v);
  }
  return mesh_from(std::move(br), geo);
}

LocalScalarBasis local_basis(const ScalarTensorSpace& space, std::span<const double> xi) {
  const int d = space.dim();
  std::array<BasisDerivatives, kMaxDim> b;
  Index3 n{1, 1, 1};
  for (int l = 0; l < d; ++l) {
    const auto& kv = space.direction(l);
    b[l] = kv.eval_derivatives(xi[l], kv.degree() >= 1 ? 1 : 0);
    if (b[l].rows.size() == 1) b[l].rows.emplace_back(kv.degree() + 1, 0.0);
    n[l] = kv.degree() + 1;
  }
  LocalScalarBasis out;
  const int total = n[0] * n[1] * n[2];
  out.dofs.reserve(total);
  out.values.reserve(total);
  out.gradients.reserve(total);
  Index3 a{0, 0, 0};
  for (a[2] = 0; a[2] < n[2]; ++a[2]) {
    for (a[1] = 0; a[1] < n[1]; ++a[1]) {
      for (a[0] = 0; a[0] < n[0]; ++a[0]) {
        Index3 idx{0, 0, 0};
        double v = 1.0;
        for (int l = 0; l < d; ++l) {
          idx[l] = b[l].first + a[l];
          v *= b[l].rows[0][a[l]];
        }
        Point g(d);
        for (int k = 0; k < d; ++k) {
          double dv = 1.0;
          for (int l = 0; l < d; ++l) dv *= (l == k ? b[l].rows[1][a[l]] : b[l].rows[0][a[l]]);
          g[k] = dv;
        }
        out.dofs.push_back(space.flat(idx));
        out.values.push_back(v);
        out.gradients.push_back(std::move(g));
      }
    }
  }
  return out;
}

PhysicalBasis physical_basis(const TensorSplineSpace& space, const QuadPoint& q) {
  PhysicalBasis pb;
  const std::span<const double> xi(q.xi.data(), q.xi.size());
  const auto& m = q.map;
  switch (space.pullback()) {
    case Pullback::H1: {
      const SmallMatrix inv_t = m.jacobian.inverse().transpose();
      for (int c = 0; c < space.num_components(); ++c) {
        const auto lb = local_basis(space.component(c), xi);
        for (std::size_t a = 0; a < lb.dofs.size(); ++a) {
          pb.dofs.push_back(space.offset(c) + lb.dofs[a]);
          pb.component.push_back(c);
          pb.scalars.push_back(lb.values[a]);
          pb.vectors.push_back(inv_t * lb.gradients[a]);
        }
      }
      break;
    }
    case Pullback::HDiv: {
      for (int c = 0; c < space.num_components(); ++c) {
        const auto lb = local_basis(space.component(c), xi);
        const Point col = m.jacobian.col(c) / m.det;
        for (std::size_t a = 0; a < lb.dofs.size(); ++a) {
          pb.dofs.push_back(space.offset(c) + lb.dofs[a]);
          pb.component.push_back(c);
          pb.scalars.push_back(lb.gradients[a][c] / m.det);
          pb.vectors.push_back(col * lb.values[a]);
        }
      }
      break;
    }
    case Pullback::L2: {
      for (int c = 0; c < space.num_components(); ++c) {
        const auto lb = local_basis(space.component(c), xi);
        for (std::size_t a = 0; a < lb.dofs.size(); ++a) {
          pb.dofs.push_back(space.offset(c) + lb.dofs[a]);
          pb.component.push_back(c);
          pb.scalars.push_back(lb.values[a] / m.det);
        }
      }
      break;
    }
  }
  return pb;
}

BiotBlocks assemble_blocks(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                           const MaterialParams& params, const AssemblyOptions& options) {
  params.validate();
  const ParametricMesh mesh = field_mesh(spaces, geo);
  const QuadratureRule rule = gauss_legendre(rule_points(spaces, options));
  const double mu = params.mu;
  const double inv_lambda = params.inv_lambda();
  const double inv_kappa = 1.0 / params.kappa;

  enum { kA1, kA2, kA3, kA4, kB1, kB2, kB3, kCount };
  int threads = std::max(1, options.threads);
  std::vector<std::array<std::vector<Triplet>, kCount>> buffers(threads);

  run_partitioned(mesh.num_elements(), threads, [&](int t, int lo, int hi) {
    auto& buf = buffers[t];
    for (int e = lo; e < hi; ++e) {
      for (const auto& q : element_points(geo, mesh, e, rule)) {
        const double w = q.weight;
        const auto v = physical_basis(spaces.V, q);
        const auto mm = physical_basis(spaces.M, q);
        const auto wf = physical_basis(spaces.W, q);
        const auto qq = physical_basis(spaces.Q, q);
        const std::size_t nv = v.dofs.size();
        for (std::size_t i = 0; i < nv; ++i) {
          const int ci = v.component[i];
          for (std::size_t j = 0; j < nv; ++j) {
            const int cj = v.component[j];
            double eps = v.vectors[i][cj] * v.vectors[j][ci];
            if (ci == cj) eps += dot(v.vectors[i], v.vectors[j]);
            buf[kA1].push_back({v.dofs[i], v.dofs[j], mu * eps * w});
          }
        }
        for (std::size_t i = 0; i < mm.dofs.size(); ++i) {
          for (std::size_t j = 0; j < mm.dofs.size(); ++j) {
            if (inv_lambda != 0.0) {
              buf[kA2].push_back(
                  {mm.dofs[i], mm.dofs[j], inv_lambda * mm.scalars[i] * mm.scalars[j] * w});
            }
          }
          for (std::size_t j = 0; j < nv; ++j) {
            const double div = v.vectors[j][v.component[j]];
            buf[kB1].push_back({mm.dofs[i], v.dofs[j], mm.scalars[i] * div * w});
          }
        }
        for (std::size_t i = 0; i < wf.dofs.size(); ++i) {
          for (std::size_t j = 0; j < wf.dofs.size(); ++j) {
            buf[kA3].push_back(
                {wf.dofs[i], wf.dofs[j], inv_kappa * dot(wf.vectors[i], wf.vectors[j]) * w});
          }
        }
        for (std::size_t i = 0; i < qq.dofs.size(); ++i) {
          if (params.c0 != 0.0) {
            for (std::size_t j = 0; j < qq.dofs.size(); ++j) {
              buf[kA4].push_back(
                  {qq.dofs[i], qq.dofs[j], params.c0 * qq.scalars[i] * qq.scalars[j] * w});
            }
          }
          for (std::size_t j = 0; j < nv; ++j) {
            const double div = v.vectors[j][v.component[j]];
            buf[kB2].push_back({qq.dofs[i], v.dofs[j], params.alpha * qq.scalars[i] * div * w});
          }
          for (std::size_t j = 0; j < wf.dofs.size(); ++j) {
            buf[kB3].push_back({qq.dofs[i], wf.dofs[j], qq.scalars[i] * wf.scalars[j] * w});
          }
        }
      }
    }
  });

  auto merged = [&](int k) {
    std::vector<Triplet> all;
    std::size_t total = 0;
    for (const auto& b : buffers) total += b[k].size();
    all.reserve(total);
    for (auto& b : buffers) {
      all.insert(all.end(), b[k].begin(), b[k].end());
      std::vector<Triplet>().swap(b[k]);
    }
    return all;
  };
  const int nV = spaces.V.size(), nM = spaces.M.size(), nW = spaces.W.size(),
            nQ = spaces.Q.size();
  BiotBlocks B;
  B.A1 = SparseMatrix::from_triplets(nV, nV, merged(kA1));
  B.A2 = SparseMatrix::from_triplets(nM, nM, merged(kA2));
  B.A3 = SparseMatrix::from_triplets(nW, nW, merged(kA3));
  B.A4 = SparseMatrix::from_triplets(nQ, nQ, merged(kA4));
  B.B1 = SparseMatrix::from_triplets(nM, nV, merged(kB1));
  B.B2 = SparseMatrix::from_triplets(nQ, nV, merged(kB2));
  B.B3 = SparseMatrix::from_triplets(nQ, nW, merged(kB3));
  return B;
}

namespace {

// (f, phi_i) for any space kind, f returning a vector (scalars use entry 0).
Eigen::VectorXd load_vector(const TensorSplineSpace& space, const GeometryMap& geo,
                            const VectorField& f, int n) {
  const ParametricMesh mesh = field_mesh(space, geo);
  const QuadratureRule rule = gauss_legendre(n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const auto& q : element_points(geo, mesh, e, rule)) {
      const Point fx = f(q.map.x);
      const auto pb = physical_basis(space, q);
      for (std::size_t i = 0; i < pb.dofs.size(); ++i) {
        double v = 0.0;
        switch (space.pullback()) {
          case Pullback::H1: v = fx[pb.component[i]] * pb.scalars[i]; break;
          case Pullback::HDiv: v = dot(fx, pb.vectors[i]); break;
          case Pullback::L2: v = fx[0] * pb.scalars[i]; break;
        }
        b[pb.dofs[i]] += v * q.weight;
      }
    }
  }
  return b;
}

double basis_product(Pullback kind, const PhysicalBasis& pb, std::size_t i, std::size_t j) {
  switch (kind) {
    case Pullback::H1:
      return pb.component[i] == pb.component[j] ? pb.scalars[i] * pb.scalars[j] : 0.0;
    case Pullback::HDiv: return dot(pb.vectors[i], pb.vectors[j]);
    case Pullback::L2: return pb.scalars[i] * pb.scalars[j];
  }
  return 0.0;
}

template <class Entry>
SparseMatrix gram(const TensorSplineSpace& space, const GeometryMap& geo, int n, Entry entry) {
  const ParametricMesh mesh = field_mesh(space, geo);
  const QuadratureRule rule = gauss_legendre(n);
  std::vector<Triplet> t;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const auto& q : element_points(geo, mesh, e, rule)) {
      const auto pb = physical_basis(space, q);
      for (std::size_t i = 0; i < pb.dofs.size(); ++i) {
        for (std::size_t j = 0; j < pb.dofs.size(); ++j) {
          const double v = entry(pb, i, j);
          if (v != 0.0) t.push_back({pb.dofs[i], pb.dofs[j], v * q.weight});
        }
      }
    }
  }
  return SparseMatrix::from_triplets(space.size(), space.size(), std::move(t));
}

}  // namespace

Eigen::VectorXd assemble_body_load(const TensorSplineSpace& V, const GeometryMap& geo,
                                   const VectorField& f, int quadrature_points) {
  if (V.pullback() != Pullback::H1) throw ParameterError("body load needs the H1 space");
  return load_vector(V, geo, f, quadrature_points);
}

Eigen::VectorXd assemble_fluid_source(const TensorSplineSpace& Q, const GeometryMap& geo,
                                      const ScalarField& f, int quadrature_points) {
  if (Q.num_components() != 1) throw ParameterError("fluid source needs a scalar space");
  return load_vector(
      Q, geo,
      [&](const Point& x) {
        Point v(1);
        v[0] = f(x);
        return v;
      },
      quadrature_points);
}

LoadOperator::LoadOperator(const TensorSplineSpace& space, const GeometryMap& geo, int n)
    : width_(space.pullback() == Pullback::L2 ? 1 : geo.dim()) {
  const ParametricMesh mesh = field_mesh(space, geo);
  const QuadratureRule rule = gauss_legendre(n);
  std::vector<Triplet> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (const auto& q : element_points(geo, mesh, e, rule)) {
      const int col = static_cast<int>(points_.size()) * width_;
      points_.push_back(q.map.x);
      const auto pb = physical_basis(space, q);
      for (std::size_t i = 0; i < pb.dofs.size(); ++i) {
        switch (space.pullback()) {
          case Pullback::H1:
            trips.push_back({pb.dofs[i], col + pb.component[i], pb.scalars[i] * q.weight});
            break;
          case Pullback::HDiv:
            for (int d = 0; d < width_; ++d) {
              trips.push_back({pb.dofs[i], col + d, pb.vectors[i][d] * q.weight});
            }
            break;
          case Pullback::L2: trips.push_back({pb.dofs[i], col, pb.scalars[i] * q.weight}); break;
        }
      }
    }
  }
  weights_ = SparseMatrix::from_triplets(space.size(), static_cast<int>(points_.size()) * width_,
                                         std::move(trips));
}

Eigen::VectorXd LoadOperator::apply(const VectorField& f) const {
  Eigen::VectorXd vals(weights_.cols());
  for (std::size_t k = 0; k < points_.size(); ++k) {
    const Point v = f(points_[k]);
    for (int d = 0; d < width_; ++d) vals[static_cast<long>(k) * width_ + d] = v[d];
  }
  return weights_ * vals;
}

Eigen::VectorXd LoadOperator::apply(const ScalarField& f) const {
  if (width_ != 1) throw ParameterError("scalar load on a vector space");
  Eigen::VectorXd vals(weights_.cols());
  for (std::size_t k = 0; k < points_.size(); ++k) vals[static_cast<long>(k)] = f(points_[k]);
  return weights_ * vals;
}

Eigen::VectorXd assemble_traction(const TensorSplineSpace& V, const GeometryMap& geo,
                                  std::span<const Face> faces, const VectorField& traction,
                                  int quadrature_points) {
  const ParametricMesh mesh = field_mesh(V, geo);
  const QuadratureRule rule = gauss_legendre(quadrature_points);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(V.size());
  for (const Face& face : faces) {
    for (const auto& fp : face_points(geo, mesh, face, rule)) {
      const Point t = traction(fp.map.x);
      const std::span<const double> xi(fp.xi.data(), fp.xi.size());
      for (int c = 0; c < V.num_components(); ++c) {
        const auto lb = local_basis(V.component(c), xi);
        for (std::size_t a = 0; a < lb.dofs.size(); ++a) {
          b[V.offset(c) + lb.dofs[a]] += t[c] * lb.values[a] * fp.weight;
        }
      }
    }
  }
  return b;
}

namespace {

bool face_selected(std::span<const Face> faces, int direction, int side) {
  return std::any_of(faces.begin(), faces.end(), [&](const Face& f) {
    return f.direction == direction && f.side == side;
  });
}

// Gauss points of the sub-entity of the parametric cube where the directions
// with key[l] >= 0 are fixed at key[l]; weights carry the physical measure.
struct EntityPoint {
  Point xi;
  Point x;
  double weight;
};

std::vector<EntityPoint> entity_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                       const Index3& key, const QuadratureRule& rule) {
  const int d = mesh.dim();
  std::vector<int> free_dirs;
  for (int l = 0; l < d; ++l) {
    if (key[l] < 0) free_dirs.push_back(l);
  }
  const int nf = static_cast<int>(free_dirs.size());
  std::vector<EntityPoint> out;
  int elements = 1;
  for (int l : free_dirs) elements *= mesh.elements_in(l);
  int per = 1;
  for (int k = 0; k < nf; ++k) per *= rule.size();
  for (int e = 0; e < elements; ++e) {
    std::vector<int> ei(nf);
    int rem = e;
    for (int k = 0; k < nf; ++k) {
      ei[k] = rem % mesh.elements_in(free_dirs[k]);
      rem /= mesh.elements_in(free_dirs[k]);
    }
    for (int a = 0; a < per; ++a) {
      Point xi(d);
      for (int l = 0; l < d; ++l) xi[l] = key[l] < 0 ? 0.0 : key[l];
      double w = 1.0;
      int ar = a;
      for (int k = 0; k < nf; ++k) {
        const int l = free_dirs[k];
        const int g = ar % rule.size();
        ar /= rule.size();
        const double lo = mesh.breakpoints(l)[ei[k]];
        const double hi = mesh.breakpoints(l)[ei[k] + 1];
        const double half = 0.5 * (hi - lo);
        xi[l] = lo + half * (1.0 + rule.points[g]);
        w *= half * rule.weights[g];
      }
      const MapPoint m = geo.eval(xi);
      SmallMatrix J(d, nf);
      for (int k = 0; k < nf; ++k) J.col(k) = m.jacobian.col(free_dirs[k]);
      const double measure = std::sqrt((J.transpose() * J).determinant());
      out.push_back({xi, m.x, w * measure});
    }
  }
  return out;
}

// Trace fit of one scalar component on the selected faces.
std::map<int, double> fit_component_trace(const ScalarTensorSpace& S, const GeometryMap& geo,
                                          const ParametricMesh& mesh,
                                          std::span<const Face> faces,
                                          const ScalarField& u, const QuadratureRule& rule) {
  const int d = S.dim();
  auto key_of = [&](int i) {
    const Index3 idx = S.multi(i);
    Index3 key{-1, -1, -1};
    for (int l = 0; l < d; ++l) {
      if (idx[l] == 0) key[l] = 0;
      else if (idx[l] == S.size_in(l) - 1) key[l] = 1;
    }
    return key;
  };
  std::map<Index3, std::vector<int>> groups;
  for (int i = 0; i < S.size(); ++i) {
    const Index3 key = key_of(i);
    bool on = false;
    for (int l = 0; l < d; ++l) on |= key[l] >= 0 && face_selected(faces, l, key[l]);
    if (on) groups[key].push_back(i);
  }
  std::vector<std::pair<int, Index3>> order;
  for (const auto& [key, dofs] : groups) {
    int dimension = 0;
    for (int l = 0; l < d; ++l) dimension += key[l] < 0;
    order.push_back({dimension, key});
  }
  std::sort(order.begin(), order.end());

  std::map<int, double> fixed;
  for (const auto& [dimension, key] : order) {
    const auto& unknown = groups[key];
    if (dimension == 0) {
      Point xi(d);
      for (int l = 0; l < d; ++l) xi[l] = key[l];
      fixed[unknown.front()] = u(geo.eval(xi).x);
      continue;
    }
    std::map<int, int> local;
    for (std::size_t k = 0; k < unknown.size(); ++k) local[unknown[k]] = static_cast<int>(k);
    const int nu = static_cast<int>(unknown.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nu, nu);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nu);
    for (const auto& ep : entity_points(geo, mesh, key, rule)) {
      const auto lb = local_basis(S, std::span<const double>(ep.xi.data(), ep.xi.size()));
      double known = 0.0;
      std::vector<std::pair<int, double>> act;
      for (std::size_t a = 0; a < lb.dofs.size(); ++a) {
        if (lb.values[a] == 0.0) continue;
        const auto it = local.find(lb.dofs[a]);
        if (it != local.end()) {
          act.push_back({it->second, lb.values[a]});
        } else {
          const auto f = fixed.find(lb.dofs[a]);
          if (f == fixed.end()) {
            throw NumericalError("trace fit reached a dof outside the entity closure");
          }
          known += f->second * lb.values[a];
        }
      }
      const double r = u(ep.x) - known;
      for (const auto& [i, vi] : act) {
        b[i] += ep.weight * vi * r;
        for (const auto& [j, vj] : act) A(i, j) += ep.weight * vi * vj;
      }
    }
    const Eigen::VectorXd c = A.ldlt().solve(b);
    for (int k = 0; k < nu; ++k) fixed[unknown[k]] = c[k];
  }
  return fixed;
}

}  // namespace

EssentialValues essential_displacement_values(const TensorSplineSpace& V,
                                              const GeometryMap& geo,
                                              std::span<const Face> faces, const VectorField& u,
                                              int quadrature_points) {
  if (V.pullback() != Pullback::H1) throw ParameterError("displacement data needs an H1 space");
  const ParametricMesh mesh = field_mesh(V, geo);
  const QuadratureRule rule = gauss_legendre(quadrature_points);
  EssentialValues ev;
  std::vector<double> vals;
  for (int c = 0; c < V.num_components(); ++c) {
    const auto fixed = fit_component_trace(
        V.component(c), geo, mesh, faces, [&](const Point& x) { return u(x)[c]; }, rule);
    for (const auto& [dof, v] : fixed) {
      ev.dofs.push_back(V.offset(c) + dof);
      vals.push_back(v);
    }
  }
  ev.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
  return ev;
}

EssentialValues essential_flux_values(const TensorSplineSpace& W, const GeometryMap& geo,
                                      std::span<const Face> faces, const VectorField& w,
                                      int quadrature_points) {
  if (W.pullback() != Pullback::HDiv) throw ParameterError("flux data needs a Piola space");
  const ParametricMesh mesh = field_mesh(W, geo);
  const QuadratureRule rule = gauss_legendre(quadrature_points);
  const int d = W.dim();
  std::map<int, double> fixed;
  for (const Face& face : faces) {
    const int c = face.direction;
    const auto& S = W.component(c);
    const int end = face.side == 0 ? 0 : S.size_in(c) - 1;
    std::map<int, int> local;
    std::vector<int> dofs;
    for (int i = 0; i < S.size(); ++i) {
      if (S.multi(i)[c] == end) {
        local[i] = static_cast<int>(dofs.size());
        dofs.push_back(i);
      }
    }
    const int n = static_cast<int>(dofs.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    Index3 key{-1, -1, -1};
    key[c] = face.side;
    // Parametric measure: use the identity-length weights of entity_points by
    // integrating on the unit cube directly.
    const GeometryMap param = [&] {
      std::vector<double> ones(d, 1.0);
      return scaled_box(ones);
    }();
    for (const auto& ep : entity_points(param, mesh, key, rule)) {
      const MapPoint m = geo.eval(ep.xi);
      const Point what = m.det * m.jacobian.partialPivLu().solve(w(m.x));
      const auto lb = local_basis(S, std::span<const double>(ep.xi.data(), ep.xi.size()));
      std::vector<std::pair<int, double>> act;
      for (std::size_t a = 0; a < lb.dofs.size(); ++a) {
        const auto it = local.find(lb.dofs[a]);
        if (it != local.end() && lb.values[a] != 0.0) act.push_back({it->second, lb.values[a]});
      }
      for (const auto& [i, vi] : act) {
        b[i] += ep.weight * vi * what[c];
        for (const auto& [j, vj] : act) A(i, j) += ep.weight * vi * vj;
      }
    }
    const Eigen::VectorXd sol = A.ldlt().solve(b);
    for (int k = 0; k < n; ++k) fixed[W.offset(c) + dofs[k]] = sol[k];
  }
  EssentialValues ev;
  ev.values.resize(static_cast<long>(fixed.size()));
  int k = 0;
  for (const auto& [dof, v] : fixed) {
    ev.dofs.push_back(dof);
    ev.values[k++] = v;
  }
  return ev;
}

SparseMatrix mass_matrix(const TensorSplineSpace& space, const GeometryMap& geo,
                         int quadrature_points) {
  const Pullback kind = space.pullback();
  return gram(space, geo, quadrature_points,
              [&](const PhysicalBasis& pb, std::size_t i, std::size_t j) {
                return basis_product(kind, pb, i, j);
              });
}

SparseMatrix h1_gram(const TensorSplineSpace& V, const GeometryMap& geo, int quadrature_points) {
  if (V.pullback() != Pullback::H1) throw ParameterError("H1 Gram needs an H1 space");
  return gram(V, geo, quadrature_points, [](const PhysicalBasis& pb, std::size_t i, std::size_t j) {
    if (pb.component[i] != pb.component[j]) return 0.0;
    return pb.scalars[i] * pb.scalars[j] + dot(pb.vectors[i], pb.vectors[j]);
  });
}

SparseMatrix hdiv_gram(const TensorSplineSpace& W, const GeometryMap& geo,
                       int quadrature_points) {
  if (W.pullback() != Pullback::HDiv) throw ParameterError("H(div) Gram needs a Piola space");
  return gram(W, geo, quadrature_points, [](const PhysicalBasis& pb, std::size_t i, std::size_t j) {
    return dot(pb.vectors[i], pb.vectors[j]) + pb.scalars[i] * pb.scalars[j];
  });
}

Eigen::VectorXd l2_project(const TensorSplineSpace& space, const GeometryMap& geo,
                           const VectorField& f, int quadrature_points,
                           const std::optional<MeanConstraint>& constraint) {
  const SparseMatrix M = mass_matrix(space, geo, quadrature_points);
  const Eigen::VectorXd b = load_vector(space, geo, f, quadrature_points);
  BlockSystem sys({space.size()});
  sys.add_block(0, 0, M);
  Eigen::VectorXd targets;
  if (constraint) {
    sys.add_constraint(0, constraint->row);
    targets = Eigen::VectorXd::Constant(1, constraint->target);
  }
  const Eigen::VectorXd rhs[] = {b};
  return solve_constrained(sys, rhs, targets).fields[0];
}

Eigen::VectorXd l2_project(const TensorSplineSpace& space, const GeometryMap& geo,
                           const ScalarField& f, int quadrature_points,
                           const std::optional<MeanConstraint>& constraint) {
  return l2_project(
      space, geo,
      [&](const Point& x) {
        Point v(1);
        v[0] = f(x);
        return v;
      },
      quadrature_points, constraint);
}

Eigen::VectorXd zero_mean_row(const TensorSplineSpace& scalar_space, const GeometryMap& geo,
                              int quadrature_points) {
  if (scalar_space.num_components() != 1) throw ParameterError("zero-mean row needs a scalar space");
  return load_vector(
      scalar_space, geo, [](const Point&) { return Point::Ones(1); }, quadrature_points);
}

H1Value eval_h1_field(const TensorSplineSpace& V, const Eigen::VectorXd& c, const QuadPoint& q) {
  const int d = V.dim();
  H1Value out{Point::Zero(V.num_components()), SmallMatrix::Zero(V.num_components(), d)};
  const auto pb = physical_basis(V, q);
  for (std::size_t i = 0; i < pb.dofs.size(); ++i) {
    const double ci = c[pb.dofs[i]];
    out.value[pb.component[i]] += ci * pb.scalars[i];
    out.gradient.row(pb.component[i]) += ci * pb.vectors[i].transpose();
  }
  return out;
}

HDivValue eval_hdiv_field(const TensorSplineSpace& W, const Eigen::VectorXd& c,
                          const QuadPoint& q) {
  HDivValue out{Point::Zero(W.dim()), 0.0};
  const auto pb = physical_basis(W, q);
  for (std::size_t i = 0; i < pb.dofs.size(); ++i) {
    const double ci = c[pb.dofs[i]];
    out.value += ci * pb.vectors[i];
    out.divergence += ci * pb.scalars[i];
  }
  return out;
}

double eval_l2_field(const TensorSplineSpace& Q, const Eigen::VectorXd& c, const QuadPoint& q) {
  const auto pb = physical_basis(Q, q);
  double v = 0.0;
  for (std::size_t i = 0; i < pb.dofs.size(); ++i) v += c[pb.dofs[i]] * pb.scalars[i];
  return v;
}

}  // namespace biot
