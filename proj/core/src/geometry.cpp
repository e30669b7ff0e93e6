#include "biot_iga/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/LU>

#include "biot_iga/errors.hpp"

namespace biot {

GeometryMap::GeometryMap(ScalarTensorSpace basis, std::vector<Point> control_points,
                         std::vector<double> weights)
    : basis_(std::move(basis)),
      points_(std::move(control_points)),
      weights_(std::move(weights)) {
  if (static_cast<int>(points_.size()) != basis_.size()) {
    throw DimensionError("control point count does not match the map basis");
  }
  for (const auto& p : points_) {
    if (p.size() != basis_.dim()) {
      throw DimensionError("control point dimension differs from the map dimension");
    }
  }
  if (!weights_.empty()) {
    if (static_cast<int>(weights_.size()) != basis_.size()) {
      throw DimensionError("weight count does not match the map basis");
    }
    for (double w : weights_) {
      if (!(w > 0.0)) throw ParameterError("NURBS weights must be positive");
    }
  }
  element_scale_.assign(basis_.dim(), 1);
}

std::vector<int> GeometryMap::elements_for_mesh(int n) const {
  std::vector<int> out;
  for (int s : element_scale_) out.push_back(n * s);
  return out;
}

MapPoint GeometryMap::eval_unchecked(std::span<const double> xi) const {
  const int d = dim();
  if (static_cast<int>(xi.size()) != d) {
    throw DimensionError("parametric point has wrong dimension");
  }
  std::array<BasisDerivatives, kMaxDim> b;
  Index3 n{1, 1, 1};
  for (int l = 0; l < d; ++l) {
    const auto& kv = basis_.direction(l);
    b[l] = kv.eval_derivatives(xi[l], kv.degree() >= 1 ? 1 : 0);
    if (b[l].rows.size() == 1) b[l].rows.emplace_back(kv.degree() + 1, 0.0);
    n[l] = kv.degree() + 1;
  }
  // Homogeneous accumulation: X = sum w c N, W = sum w N and derivatives.
  Point X = Point::Zero(d);
  SmallMatrix dX = SmallMatrix::Zero(d, d);
  double W = 0.0;
  Point dW = Point::Zero(d);
  Index3 a{0, 0, 0};
  for (a[2] = 0; a[2] < n[2]; ++a[2]) {
    for (a[1] = 0; a[1] < n[1]; ++a[1]) {
      for (a[0] = 0; a[0] < n[0]; ++a[0]) {
        Index3 idx{0, 0, 0};
        for (int l = 0; l < d; ++l) idx[l] = b[l].first + a[l];
        const int i = basis_.flat(idx);
        const double w = weights_.empty() ? 1.0 : weights_[i];
        double v = w;
        for (int l = 0; l < d; ++l) v *= b[l].rows[0][a[l]];
        X += v * points_[i];
        W += v;
        for (int g = 0; g < d; ++g) {
          double dv = w;
          for (int l = 0; l < d; ++l) {
            dv *= (l == g ? b[l].rows[1][a[l]] : b[l].rows[0][a[l]]);
          }
          dX.col(g) += dv * points_[i];
          dW[g] += dv;
        }
      }
    }
  }
  MapPoint m;
  m.x = X / W;
  m.jacobian.resize(d, d);
  for (int g = 0; g < d; ++g) m.jacobian.col(g) = (dX.col(g) - m.x * dW[g]) / W;
  m.det = m.jacobian.determinant();
  return m;
}

MapPoint GeometryMap::eval(std::span<const double> xi) const {
  MapPoint m = eval_unchecked(xi);
  if (!(m.det > 0.0)) {
    std::string where;
    for (double v : xi) where += std::to_string(v) + " ";
    throw DegenerateGeometryError("det DF = " + std::to_string(m.det) +
                                  " <= 0 at xi = ( " + where + ")");
  }
  return m;
}

namespace {

GeometryMap linear_patch(std::vector<Point> corners, int dim) {
  std::vector<KnotVector> dirs(dim, KnotVector({0.0, 0.0, 1.0, 1.0}, 1));
  return GeometryMap(ScalarTensorSpace(std::move(dirs)), std::move(corners));
}

Point make_point(std::initializer_list<double> v) {
  Point p(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

}  // namespace

GeometryMap scaled_box(std::span<const double> scales) {
  const int dim = static_cast<int>(scales.size());
  std::vector<Point> corners;
  const int count = 1 << dim;
  for (int i = 0; i < count; ++i) {
    Point p(dim);
    for (int l = 0; l < dim; ++l) p[l] = ((i >> l) & 1) ? scales[l] : 0.0;
    corners.push_back(p);
  }
  return linear_patch(std::move(corners), dim);
}

GeometryMap unit_square() {
  const double s[] = {1.0, 1.0};
  return scaled_box(s);
}

GeometryMap unit_cube() {
  const double s[] = {1.0, 1.0, 1.0};
  return scaled_box(s);
}

GeometryMap affine_map(const SmallMatrix& A, const Point& b) {
  const int dim = static_cast<int>(b.size());
  std::vector<Point> corners;
  for (int i = 0; i < (1 << dim); ++i) {
    Point xi(dim);
    for (int l = 0; l < dim; ++l) xi[l] = ((i >> l) & 1) ? 1.0 : 0.0;
    corners.push_back(A * xi + b);
  }
  return linear_patch(std::move(corners), dim);
}

GeometryMap quarter_annulus() { return quarter_annulus(2.0, 4.0); }

GeometryMap quarter_annulus(double r0, double r1) {
  if (!(r0 > 0.0 && r1 > r0)) throw ParameterError("annulus radii must satisfy 0 < r0 < r1");
  const double w = std::numbers::sqrt2 / 2.0;
  std::vector<KnotVector> dirs{KnotVector({0, 0, 1, 1}, 1),
                               KnotVector({0, 0, 0, 1, 1, 1}, 2)};
  std::vector<Point> pts;
  std::vector<double> weights;
  for (int j = 0; j < 3; ++j) {
    for (double r : {r0, r1}) {
      if (j == 0) pts.push_back(make_point({r, 0.0}));
      if (j == 1) pts.push_back(make_point({r, r}));
      if (j == 2) pts.push_back(make_point({0.0, r}));
      weights.push_back(j == 1 ? w : 1.0);
    }
  }
  return GeometryMap(ScalarTensorSpace(std::move(dirs)), std::move(pts),
                     std::move(weights));
}

GeometryMap l_shape() {
  // xi_0 follows the bent path (kink at 1/2), xi_1 goes from the re-entrant
  // edges (xi_1 = 0) to the outer boundary (xi_1 = 1).
  std::vector<KnotVector> dirs{KnotVector({0, 0, 0.5, 1, 1}, 1),
                               KnotVector({0, 0, 1, 1}, 1)};
  std::vector<Point> pts{make_point({1, 0}),   make_point({0, 0}),
                         make_point({0, 1}),   make_point({1, -1}),
                         make_point({-1, -1}), make_point({-1, 1})};
  GeometryMap g(ScalarTensorSpace(std::move(dirs)), std::move(pts));
  g.set_c0_lines({{0.5}, {}});
  g.set_element_scale({2, 1});
  return g;
}

H1Sample pushforward_h1(const MapPoint& m, double value, const Point& param_grad) {
  H1Sample s;
  s.value = value;
  s.gradient = m.jacobian.transpose().partialPivLu().solve(param_grad);
  return s;
}

HDivSample pushforward_hdiv(const MapPoint& m, const Point& w_hat, double div_hat) {
  if (!(m.det > 0.0)) throw DegenerateGeometryError("degenerate Jacobian in Piola map");
  return {m.jacobian * w_hat / m.det, div_hat / m.det};
}

double pushforward_l2(const MapPoint& m, double q_hat) {
  if (!(m.det > 0.0)) throw DegenerateGeometryError("degenerate Jacobian in L2 map");
  return q_hat / m.det;
}

}  // namespace biot
