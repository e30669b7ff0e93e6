#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "biot_iga/geometry.hpp"
#include "biot_iga/quadrature.hpp"
#include "biot_iga/sparse.hpp"
#include "biot_iga/tensor_space.hpp"

namespace biot {

/// Material coefficients of the Biot model.
struct MaterialParams {
  double mu = 1.0;
  double lambda = 1.0;
  bool lambda_infinite = false;
  double kappa = 1.0;
  double alpha = 1.0;
  double c0 = 1.0;

  /// Lame parameters from Young's modulus and Poisson's ratio.
  static MaterialParams from_young_poisson(double E, double nu, double kappa, double alpha,
                                           double c0);
  /// 1/lambda, zero in the incompressible limit.
  double inv_lambda() const { return lambda_infinite ? 0.0 : 1.0 / lambda; }
  /// Throws ParameterError naming the offending coefficient.
  void validate() const;
};

/// Operator blocks of the four-field system.
struct BiotBlocks {
  SparseMatrix A1;  ///< 2 mu (eps u, eps v), V x V
  SparseMatrix A2;  ///< (1/lambda)(psi, zeta), M x M
  SparseMatrix A3;  ///< (kappa^{-1} w, r), W x W
  SparseMatrix A4;  ///< c0 (p, q), Q x Q
  SparseMatrix B1;  ///< (div v, zeta), M x V
  SparseMatrix B2;  ///< alpha (div v, q), Q x V
  SparseMatrix B3;  ///< (div r, q), Q x W
};

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Point(const Point&)>;

struct AssemblyOptions {
  /// Gauss points per direction; 0 selects default_rule_order.
  int quadrature_points = 0;
  /// Worker threads for the element loop; results do not depend on it.
  int threads = 1;
};

/// Breakpoint mesh shared by the spaces; throws DimensionError when the
/// geometry has breakpoints that are not mesh lines.
ParametricMesh field_mesh(const MixedBiotSpaces& spaces, const GeometryMap& geo);
ParametricMesh field_mesh(const TensorSplineSpace& space, const GeometryMap& geo);

BiotBlocks assemble_blocks(const MixedBiotSpaces& spaces, const GeometryMap& geo,
                           const MaterialParams& params, const AssemblyOptions& options = {});

/// (f, v_i) for the vector H1 space V.
Eigen::VectorXd assemble_body_load(const TensorSplineSpace& V, const GeometryMap& geo,
                                   const VectorField& f, int quadrature_points);
/// (f, q_i) for an L2-pulled-back scalar space.
Eigen::VectorXd assemble_fluid_source(const TensorSplineSpace& Q, const GeometryMap& geo,
                                      const ScalarField& f, int quadrature_points);
/// Boundary integral of traction . v_i over the mapped faces.
/// (f, phi_i) with quadrature points and basis values computed once, for
/// loads that are re-evaluated every time step.
class LoadOperator {
 public:
  LoadOperator(const TensorSplineSpace& space, const GeometryMap& geo, int quadrature_points);

  Eigen::VectorXd apply(const VectorField& f) const;
  Eigen::VectorXd apply(const ScalarField& f) const;
  std::span<const Point> points() const { return points_; }

 private:
  std::vector<Point> points_;
  int width_ = 1;
  SparseMatrix weights_;
};

Eigen::VectorXd assemble_traction(const TensorSplineSpace& V, const GeometryMap& geo,
                                  std::span<const Face> faces, const VectorField& traction,
                                  int quadrature_points);

/// Prescribed values for a set of dofs.
struct EssentialValues {
  std::vector<int> dofs;
  Eigen::VectorXd values;
};

/// Displacement trace on the given faces: corner values are interpolated,
/// then edges and faces are fitted in the physical L2 sense with the already
/// fixed lower-dimensional dofs held.
EssentialValues essential_displacement_values(const TensorSplineSpace& V,
                                              const GeometryMap& geo,
                                              std::span<const Face> faces, const VectorField& u,
                                              int quadrature_points);

/// Normal-trace dofs of W on the given faces, from a parametric L2 fit of the
/// Piola-pulled-back normal component. Preserves the flux through each face.
EssentialValues essential_flux_values(const TensorSplineSpace& W, const GeometryMap& geo,
                                      std::span<const Face> faces, const VectorField& w,
                                      int quadrature_points);

/// Optional linear constraint m . c = target for l2_project.
struct MeanConstraint {
  Eigen::VectorXd row;
  double target = 0.0;
};

/// L2 projection; scalar spaces read component 0 of f.
Eigen::VectorXd l2_project(const TensorSplineSpace& space, const GeometryMap& geo,
                           const VectorField& f, int quadrature_points,
                           const std::optional<MeanConstraint>& constraint = std::nullopt);
Eigen::VectorXd l2_project(const TensorSplineSpace& space, const GeometryMap& geo,
                           const ScalarField& f, int quadrature_points,
                           const std::optional<MeanConstraint>& constraint = std::nullopt);

/// m_i = integral of the pushed-forward basis function i over the domain.
Eigen::VectorXd zero_mean_row(const TensorSplineSpace& scalar_space, const GeometryMap& geo,
                              int quadrature_points);

/// Mass matrix of any of the three space kinds (physical L2 inner product).
SparseMatrix mass_matrix(const TensorSplineSpace& space, const GeometryMap& geo,
                         int quadrature_points);
/// Full H1 inner product (mass + gradient) of a vector H1 space.
SparseMatrix h1_gram(const TensorSplineSpace& V, const GeometryMap& geo, int quadrature_points);
/// H(div) inner product (mass + div-div) of a Piola space.
SparseMatrix hdiv_gram(const TensorSplineSpace& W, const GeometryMap& geo,
                       int quadrature_points);

/// Nonzero functions of a scalar tensor space at a point, with parametric
/// gradients.
struct LocalScalarBasis {
  std::vector<int> dofs;
  std::vector<double> values;
  std::vector<Point> gradients;
};
LocalScalarBasis local_basis(const ScalarTensorSpace& space, std::span<const double> xi);

/// Nonzero functions of a space at a quadrature point after the pushforward
/// of that space. Dofs are global indices of the full (multi-component) space.
///   H1:   scalars = value of the scalar factor, vectors = physical gradient,
///         component = vector component carrying it.
///   HDiv: scalars = divergence, vectors = Piola value.
///   L2:   scalars = value, vectors empty.
struct PhysicalBasis {
  std::vector<int> dofs;
  std::vector<int> component;
  std::vector<double> scalars;
  std::vector<Point> vectors;
};
PhysicalBasis physical_basis(const TensorSplineSpace& space, const QuadPoint& q);

/// Physical evaluation of discrete fields at a quadrature point.
struct H1Value {
  Point value;
  SmallMatrix gradient;  // gradient(i, j) = d u_i / d x_j
};
H1Value eval_h1_field(const TensorSplineSpace& V, const Eigen::VectorXd& c, const QuadPoint& q);
struct HDivValue {
  Point value;
  double divergence = 0.0;
};
HDivValue eval_hdiv_field(const TensorSplineSpace& W, const Eigen::VectorXd& c,
                          const QuadPoint& q);
double eval_l2_field(const TensorSplineSpace& Q, const Eigen::VectorXd& c, const QuadPoint& q);

}  // namespace biot
