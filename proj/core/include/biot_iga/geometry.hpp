#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "biot_iga/tensor_space.hpp"

namespace biot {

/// Point or vector in R^d, d <= 3.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
/// Small dense d x d matrix.
using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Image of a parametric point: x = F(xi), DF and det DF.
struct MapPoint {
  Point x;
  SmallMatrix jacobian;
  double det = 0.0;
};

/// Single-patch (rational) B-spline parametrization F of the physical domain.
class GeometryMap {
 public:
  /// `control_points` follow the flat ordering of `basis`; empty `weights`
  /// means a polynomial map.
  GeometryMap(ScalarTensorSpace basis, std::vector<Point> control_points,
              std::vector<double> weights = {});

  int dim() const { return basis_.dim(); }
  const ScalarTensorSpace& basis() const noexcept { return basis_; }
  const std::vector<Point>& control_points() const noexcept { return points_; }
  bool rational() const noexcept { return !weights_.empty(); }

  /// Throws DegenerateGeometryError when det DF <= 0.
  MapPoint eval(std::span<const double> xi) const;
  MapPoint eval_unchecked(std::span<const double> xi) const;
  MapPoint eval_unchecked(const Point& xi) const {
    return eval_unchecked(std::span<const double>(xi.data(), xi.size()));
  }
  MapPoint eval(const Point& xi) const {
    return eval(std::span<const double>(xi.data(), xi.size()));
  }

  /// Interior parametric lines (per direction) across which F is only C0.
  const std::vector<std::vector<double>>& c0_lines() const noexcept { return c0_lines_; }
  void set_c0_lines(std::vector<std::vector<double>> lines) { c0_lines_ = std::move(lines); }

  /// Elements per direction for mesh parameter n (n / unit physical length).
  std::vector<int> elements_for_mesh(int n) const;
  void set_element_scale(std::vector<int> scale) { element_scale_ = std::move(scale); }

 private:
  ScalarTensorSpace basis_;
  std::vector<Point> points_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> c0_lines_;
  std::vector<int> element_scale_;
};

/// (rho, phi) in (2, 4) x (0, pi/2); xi_0 radial, xi_1 angular (exact arcs).
GeometryMap quarter_annulus();
/// Quarter annulus with radii r0 < r1.
GeometryMap quarter_annulus(double r0, double r1);
/// (-1,1)^2 minus (0,1)^2 as one bilinear patch with a C0 line at xi_0 = 1/2.
GeometryMap l_shape();
GeometryMap unit_square();
GeometryMap unit_cube();
/// Axis-aligned box [0, s_0] x ... (identity when all scales are 1).
GeometryMap scaled_box(std::span<const double> scales);
/// Affine map x = A xi + b on the unit square/cube.
GeometryMap affine_map(const SmallMatrix& A, const Point& b);

struct H1Sample {
  double value = 0.0;
  Point gradient;
};
struct HDivSample {
  Point value;
  double divergence = 0.0;
};

/// iota^0 inverse: value unchanged, gradient DF^{-T} g.
H1Sample pushforward_h1(const MapPoint& m, double value, const Point& param_grad);
/// Contravariant Piola: w = DF w^ / det, div w = div^ w^ / det.
HDivSample pushforward_hdiv(const MapPoint& m, const Point& w_hat, double div_hat);
/// q = q^ / det.
double pushforward_l2(const MapPoint& m, double q_hat);

}  // namespace biot
