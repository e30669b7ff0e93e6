#include "biot_iga/tensor_space.hpp"

#include <algorithm>
#include <set>

#include "biot_iga/errors.hpp"

namespace biot {

ScalarTensorSpace::ScalarTensorSpace(std::vector<KnotVector> directions)
    : dirs_(std::move(directions)) {
  if (dirs_.empty() || dirs_.size() > kMaxDim) {
    throw ParameterError("tensor space dimension must be 1..3");
  }
  size_ = 1;
  for (const auto& kv : dirs_) size_ *= kv.size();
}

int ScalarTensorSpace::flat(const Index3& idx) const {
  int f = 0;
  int stride = 1;
  for (int l = 0; l < dim(); ++l) {
    f += idx[l] * stride;
    stride *= dirs_[l].size();
  }
  return f;
}

Index3 ScalarTensorSpace::multi(int flat) const {
  Index3 idx{0, 0, 0};
  for (int l = 0; l < dim(); ++l) {
    idx[l] = flat % dirs_[l].size();
    flat /= dirs_[l].size();
  }
  return idx;
}

double ScalarTensorSpace::eval_basis(int i, std::span<const double> xi,
                                     std::span<double> grad) const {
  const Index3 idx = multi(i);
  std::array<double, kMaxDim> val{}, der{};
  for (int l = 0; l < dim(); ++l) {
    const auto& kv = dirs_[l];
    const auto d = kv.eval_derivatives(xi[l], kv.degree() >= 1 ? 1 : 0);
    const int local = idx[l] - d.first;
    if (local < 0 || local > kv.degree()) {
      val[l] = 0.0;
      der[l] = 0.0;
    } else {
      val[l] = d.rows[0][local];
      der[l] = d.rows.size() > 1 ? d.rows[1][local] : 0.0;
    }
  }
  double v = 1.0;
  for (int l = 0; l < dim(); ++l) v *= val[l];
  for (int l = 0; l < static_cast<int>(grad.size()) && l < dim(); ++l) {
    double g = der[l];
    for (int m = 0; m < dim(); ++m) {
      if (m != l) g *= val[m];
    }
    grad[l] = g;
  }
  return v;
}

TensorSplineSpace::TensorSplineSpace(std::vector<ScalarTensorSpace> components,
                                     Pullback pullback)
    : components_(std::move(components)), pullback_(pullback) {
  if (components_.empty()) throw ParameterError("space needs a component");
  offsets_.assign(1, 0);
  for (const auto& c : components_) {
    if (c.dim() != components_.front().dim()) {
      throw DimensionError("components of different dimension");
    }
    offsets_.push_back(offsets_.back() + c.size());
  }
}

std::vector<double> TensorSplineSpace::breakpoints(int l) const {
  return components_.front().direction(l).breakpoints();
}

std::optional<std::string> stability_condition_violation(const MixedDegrees& d) {
  if (!(d.k_v >= 0)) return "k_v >= 0";
  if (!(d.p_v > d.k_v)) return "p_v > k_v";
  if (!(d.k_p >= 0)) return "k_p >= 0";
  if (!(d.p_p > d.k_p)) return "p_p > k_p";
  if (!(d.p_v - d.k_v > d.p_p - d.k_p)) return "p_v - k_v > p_p - k_p";
  return std::nullopt;
}

void check_stability_condition(const MixedDegrees& d) {
  if (auto v = stability_condition_violation(d)) {
    throw StabilityConditionError(
        "degree/regularity choice (p_p=" + std::to_string(d.p_p) +
        ", k_p=" + std::to_string(d.k_p) + ", p_v=" + std::to_string(d.p_v) +
        ", k_v=" + std::to_string(d.k_v) + ") violates " + *v);
  }
}

std::vector<Face> all_faces(int dim) {
  std::vector<Face> faces;
  for (int l = 0; l < dim; ++l) {
    faces.push_back({l, 0});
    faces.push_back({l, 1});
  }
  return faces;
}

std::vector<int> boundary_dofs(const TensorSplineSpace& space,
                               std::span<const Face> faces) {
  std::set<int> dofs;
  for (int c = 0; c < space.num_components(); ++c) {
    const auto& comp = space.component(c);
    for (int i = 0; i < comp.size(); ++i) {
      const Index3 idx = comp.multi(i);
      for (const Face& f : faces) {
        if (space.pullback() == Pullback::HDiv && f.direction != c) continue;
        const int end = f.side == 0 ? 0 : comp.size_in(f.direction) - 1;
        if (idx[f.direction] == end) {
          dofs.insert(space.offset(c) + i);
          break;
        }
      }
    }
  }
  return {dofs.begin(), dofs.end()};
}

std::vector<int> boundary_dofs(const TensorSplineSpace& space, const Face& face) {
  return boundary_dofs(space, std::span<const Face>(&face, 1));
}

Eigen::VectorXd parametric_integrals(const ScalarTensorSpace& space) {
  std::vector<std::vector<double>> per_dir(space.dim());
  for (int l = 0; l < space.dim(); ++l) {
    const auto& kv = space.direction(l);
    const auto& t = kv.knots();
    const int p = kv.degree();
    per_dir[l].resize(kv.size());
    for (int i = 0; i < kv.size(); ++i) {
      per_dir[l][i] = (t[i + p + 1] - t[i]) / (p + 1);
    }
  }
  Eigen::VectorXd m(space.size());
  for (int i = 0; i < space.size(); ++i) {
    const Index3 idx = space.multi(i);
    double v = 1.0;
    for (int l = 0; l < space.dim(); ++l) v *= per_dir[l][idx[l]];
    m[i] = v;
  }
  return m;
}

MixedBiotSpaces build_mixed_spaces(int dim, std::span<const int> elements,
                                   const MixedDegrees& degrees, bool c0_is_zero,
                                   const SpaceOptions& options) {
  if (dim != 2 && dim != 3) throw ParameterError("dimension must be 2 or 3");
  if (static_cast<int>(elements.size()) != dim) {
    throw DimensionError("need one element count per direction");
  }
  if (options.enforce_stability_condition) check_stability_condition(degrees);
  for (int e : elements) {
    if (e < 1) throw ParameterError("element counts must be >= 1");
  }
  const auto& d = degrees;
  auto lines = [&](int l) -> std::span<const double> {
    if (l < static_cast<int>(options.c0_lines.size())) return options.c0_lines[l];
    return {};
  };

  MixedBiotSpaces s;
  s.degrees = degrees;
  s.elements.assign(elements.begin(), elements.end());

  // Displacement: degree p_v, regularity k_v, C0 at geometry kinks.
  std::vector<KnotVector> v_dirs;
  for (int l = 0; l < dim; ++l) {
    v_dirs.push_back(KnotVector::uniform(elements[l], d.p_v, d.k_v, lines(l),
                                         std::min(d.k_v, 0)));
  }
  ScalarTensorSpace v_scalar(v_dirs);
  s.V = TensorSplineSpace(std::vector<ScalarTensorSpace>(dim, v_scalar),
                          Pullback::H1);

  // Flux component l: degree p_p+1 / regularity k_p+1 along l, derivative
  // space of that vector in the other directions.
  std::vector<KnotVector> hi_dirs, lo_dirs;
  for (int l = 0; l < dim; ++l) {
    hi_dirs.push_back(KnotVector::uniform(elements[l], d.p_p + 1, d.k_p + 1,
                                          lines(l), std::min(d.k_p + 1, 0)));
    lo_dirs.push_back(hi_dirs.back().derivative_space());
  }
  std::vector<ScalarTensorSpace> w_comps;
  for (int c = 0; c < dim; ++c) {
    std::vector<KnotVector> dirs;
    for (int l = 0; l < dim; ++l) dirs.push_back(l == c ? hi_dirs[l] : lo_dirs[l]);
    w_comps.emplace_back(std::move(dirs));
  }
  s.W = TensorSplineSpace(std::move(w_comps), Pullback::HDiv);

  ScalarTensorSpace q_scalar(lo_dirs);
  s.Q = TensorSplineSpace({q_scalar}, Pullback::L2);
  s.M = TensorSplineSpace({q_scalar}, Pullback::L2);

  const auto faces = all_faces(dim);
  s.dirichlet_dofs_V = boundary_dofs(s.V, faces);
  s.normal_trace_dofs_W = boundary_dofs(s.W, faces);
  s.zero_mean_M = parametric_integrals(q_scalar);
  if (c0_is_zero) s.zero_mean_Q = parametric_integrals(q_scalar);
  s.gamma = std::min(d.p_v, d.p_p + 1);
  return s;
}

ScalarSample eval_scalar(const ScalarTensorSpace& space,
                         const Eigen::VectorXd& coefficients,
                         std::span<const double> xi) {
  if (coefficients.size() != space.size()) {
    throw DimensionError("coefficient length " +
                         std::to_string(coefficients.size()) +
                         " does not match space size " +
                         std::to_string(space.size()));
  }
  const int dim = space.dim();
  std::array<BasisDerivatives, kMaxDim> b;
  for (int l = 0; l < dim; ++l) {
    const auto& kv = space.direction(l);
    b[l] = kv.eval_derivatives(xi[l], kv.degree() >= 1 ? 1 : 0);
    if (b[l].rows.size() == 1) b[l].rows.emplace_back(kv.degree() + 1, 0.0);
  }
  ScalarSample out;
  Index3 n{1, 1, 1};
  for (int l = 0; l < dim; ++l) n[l] = space.direction(l).degree() + 1;
  Index3 a{0, 0, 0};
  for (a[2] = 0; a[2] < n[2]; ++a[2]) {
    for (a[1] = 0; a[1] < n[1]; ++a[1]) {
      for (a[0] = 0; a[0] < n[0]; ++a[0]) {
        Index3 idx{0, 0, 0};
        for (int l = 0; l < dim; ++l) idx[l] = b[l].first + a[l];
        const double c = coefficients[space.flat(idx)];
        double v = 1.0;
        for (int l = 0; l < dim; ++l) v *= b[l].rows[0][a[l]];
        out.value += c * v;
        for (int g = 0; g < dim; ++g) {
          double dv = 1.0;
          for (int l = 0; l < dim; ++l) {
            dv *= (l == g ? b[l].rows[1][a[l]] : b[l].rows[0][a[l]]);
          }
          out.gradient[g] += c * dv;
        }
      }
    }
  }
  return out;
}

}  // namespace biot
