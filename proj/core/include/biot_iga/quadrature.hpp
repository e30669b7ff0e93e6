#pragma once

#include <functional>
#include <span>
#include <vector>

#include "biot_iga/geometry.hpp"

namespace biot {

/// Gauss rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// n-point Gauss-Legendre rule, 1 <= n <= 16, exact to degree 2n - 1.
QuadratureRule gauss_legendre(int n);

/// Default points per direction for the given degrees: max(p_v, p_p + 1) + 1.
int default_rule_order(const MixedDegrees& d);

/// Breakpoint grid of the parametric cube.
class ParametricMesh {
 public:
  ParametricMesh() = default;
  explicit ParametricMesh(std::vector<std::vector<double>> breakpoints);
  /// Uniform grid with the given element count per direction.
  static ParametricMesh uniform(std::span<const int> elements);

  int dim() const { return static_cast<int>(breaks_.size()); }
  int num_elements() const { return count_; }
  int elements_in(int l) const { return static_cast<int>(breaks_[l].size()) - 1; }
  const std::vector<double>& breakpoints(int l) const { return breaks_.at(l); }
  Index3 element_index(int e) const;
  /// Parametric bounds of element e in direction l.
  std::pair<double, double> bounds(int e, int l) const;

 private:
  std::vector<std::vector<double>> breaks_;
  int count_ = 0;
};

/// Quadrature point on the mapped element; `weight` includes |det DF| and the
/// parametric element scaling.
struct QuadPoint {
  Point xi;
  MapPoint map;
  double weight = 0.0;
};

/// Tensor Gauss points of element e (one rule per direction).
std::vector<QuadPoint> element_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                      int element, std::span<const QuadratureRule> rules);
std::vector<QuadPoint> element_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                      int element, const QuadratureRule& rule);

/// Mapped Gauss quadrature of f over the whole mesh with n points per direction.
double integrate_scalar(const std::function<double(const Point&)>& f,
                        const GeometryMap& geo, const ParametricMesh& mesh, int n);

/// Gauss rule on the face xi_direction = side, used for boundary integrals.
/// Weights include the physical surface measure.
struct FacePoint {
  Point xi;
  MapPoint map;
  Point normal;  // outward unit normal
  double weight = 0.0;
};

std::vector<FacePoint> face_points(const GeometryMap& geo, const ParametricMesh& mesh,
                                   const Face& face, const QuadratureRule& rule);

}  // namespace biot
