#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biot_iga/bspline.hpp"

namespace biot {

inline constexpr int kMaxDim = 3;
using Index3 = std::array<int, kMaxDim>;

/// How parametric coefficients are mapped onto the physical domain.
enum class Pullback {
  H1,    ///< v = v^ o F^{-1}
  HDiv,  ///< contravariant Piola, w = DF w^ / det DF
  L2,    ///< q = q^ / det DF
};

/// Scalar tensor-product spline space S(Xi_1) x ... x S(Xi_d).
/// Flat indices run lexicographically with direction 0 fastest.
class ScalarTensorSpace {
 public:
  ScalarTensorSpace() = default;
  explicit ScalarTensorSpace(std::vector<KnotVector> directions);

  int dim() const noexcept { return static_cast<int>(dirs_.size()); }
  const KnotVector& direction(int l) const { return dirs_.at(l); }
  const std::vector<KnotVector>& directions() const noexcept { return dirs_; }
  int size_in(int l) const { return dirs_.at(l).size(); }
  int size() const noexcept { return size_; }

  int flat(const Index3& idx) const;
  Index3 multi(int flat) const;

  /// Value of basis function `i` and its parametric gradient at xi.
  double eval_basis(int i, std::span<const double> xi,
                    std::span<double> grad = {}) const;

  friend bool operator==(const ScalarTensorSpace&,
                         const ScalarTensorSpace&) = default;

 private:
  std::vector<KnotVector> dirs_;
  int size_ = 0;
};

/// Possibly vector-valued spline space; component c occupies dofs
/// offset(c) .. offset(c) + component(c).size().
class TensorSplineSpace {
 public:
  TensorSplineSpace() = default;
  TensorSplineSpace(std::vector<ScalarTensorSpace> components, Pullback pullback);

  int dim() const { return components_.front().dim(); }
  int num_components() const noexcept { return static_cast<int>(components_.size()); }
  const ScalarTensorSpace& component(int c) const { return components_.at(c); }
  int offset(int c) const { return offsets_.at(c); }
  int size() const noexcept { return offsets_.back(); }
  Pullback pullback() const noexcept { return pullback_; }

  /// Distinct breakpoints in direction l (shared by all components).
  std::vector<double> breakpoints(int l) const;

 private:
  std::vector<ScalarTensorSpace> components_;
  std::vector<int> offsets_{0};
  Pullback pullback_ = Pullback::H1;
};

/// Degrees and regularities of the four-field discretization.
struct MixedDegrees {
  int p_p = 1;
  int k_p = 0;
  int p_v = 2;
  int k_v = 0;
};

/// Throws StabilityConditionError naming the first violated inequality of
/// p_v > k_v >= 0, p_p > k_p >= 0, p_v - k_v > p_p - k_p.
void check_stability_condition(const MixedDegrees& d);
/// Empty when the condition holds, else the violated inequality.
std::optional<std::string> stability_condition_violation(const MixedDegrees& d);

/// Options for build_mixed_spaces beyond the degree data.
struct SpaceOptions {
  /// Per direction, interior breakpoints where the geometry is only C0.
  std::vector<std::vector<double>> c0_lines;
  /// Disable the stability check (used for negative-control experiments).
  bool enforce_stability_condition = true;
};

/// The four discrete spaces (V, M, W, Q) and their boundary/constraint data.
struct MixedBiotSpaces {
  MixedDegrees degrees;
  std::vector<int> elements;
  TensorSplineSpace V;  ///< displacement, H1 pullback, vector
  TensorSplineSpace M;  ///< solid pressure, L2 pullback
  TensorSplineSpace W;  ///< flux, Piola pullback, mixed degrees
  TensorSplineSpace Q;  ///< fluid pressure, L2 pullback
  std::vector<int> dirichlet_dofs_V;
  std::vector<int> normal_trace_dofs_W;
  Eigen::VectorXd zero_mean_M;
  std::optional<Eigen::VectorXd> zero_mean_Q;
  int gamma = 0;

  int dim() const { return V.dim(); }
};

MixedBiotSpaces build_mixed_spaces(int dim, std::span<const int> elements,
                                   const MixedDegrees& degrees, bool c0_is_zero,
                                   const SpaceOptions& options = {});

/// Value and parametric gradient of a scalar spline field.
struct ScalarSample {
  double value = 0.0;
  std::array<double, kMaxDim> gradient{};
};

ScalarSample eval_scalar(const ScalarTensorSpace& space,
                         const Eigen::VectorXd& coefficients,
                         std::span<const double> xi);

/// A parametric face xi_direction = side (side 0 or 1).
struct Face {
  int direction = 0;
  int side = 0;
  friend bool operator==(const Face&, const Face&) = default;
};

std::vector<Face> all_faces(int dim);

/// Boundary dofs on the given faces. H1/L2 spaces report every component;
/// HDiv spaces report only the normal component of each face.
std::vector<int> boundary_dofs(const TensorSplineSpace& space,
                               std::span<const Face> faces);
std::vector<int> boundary_dofs(const TensorSplineSpace& space, const Face& face);

/// Integral of each univariate-product basis function over the parametric
/// cube, i.e. the zero-mean row of an L2-pulled-back scalar space.
Eigen::VectorXd parametric_integrals(const ScalarTensorSpace& space);

}  // namespace biot
