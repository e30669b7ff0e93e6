#pragma once

#include <span>
#include <vector>

namespace biot {

/// Nonzero basis functions at a point: indices first .. first + degree.
struct BasisWindow {
  int first = 0;
  std::vector<double> values;
};

/// Values (row 0) and derivatives (row k) of the nonzero basis functions.
struct BasisDerivatives {
  int first = 0;
  std::vector<std::vector<double>> rows;
};

/// Open knot vector on [0, 1] together with its degree.
///
/// Interior knots may repeat up to degree + 1 times. The uniform factory only
/// produces continuous bases; discontinuous breakpoints appear through
/// derivative_space() of a vector that is merely C0 somewhere.
class KnotVector {
 public:
  KnotVector(std::vector<double> knots, int degree);

  /// Uniform breakpoints i/num_elements, interior regularity `regularity`.
  static KnotVector uniform(int num_elements, int degree, int regularity);

  /// Uniform breakpoints with the regularity lowered to `reduced_regularity`
  /// at the listed breakpoints (which must lie on the uniform grid).
  static KnotVector uniform(int num_elements, int degree, int regularity,
                            std::span<const double> reduced_at,
                            int reduced_regularity);

  int degree() const noexcept { return degree_; }
  /// Number of basis functions.
  int size() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  std::vector<double> breakpoints() const;
  std::vector<int> multiplicities() const;
  int num_elements() const { return static_cast<int>(breakpoints().size()) - 1; }

  /// Knot index i with knots[i] <= x < knots[i+1]; x = 1 maps to the last
  /// nonempty interval. Throws DomainError outside [0, 1].
  int find_span(double x) const;

  BasisWindow eval(double x) const;
  BasisDerivatives eval_derivatives(double x, int max_order) const;

  /// Knot vector {xi_2, ..., xi_{n+p}} of degree p - 1.
  KnotVector derivative_space() const;

  std::vector<double> greville() const;

  /// Value of basis function i at x (zero outside its support).
  double basis_function(int i, double x) const;

  friend bool operator==(const KnotVector&, const KnotVector&) = default;

 private:
  std::vector<double> knots_;
  int degree_;
};

/// Convenience wrapper matching the uniform factory.
KnotVector make_open_knot_vector(int num_elements, int degree, int regularity);

/// Dimension of the uniform space: (p+1) + (m-1)(p-k).
constexpr int uniform_dimension(int num_elements, int degree, int regularity) {
  return (degree + 1) + (num_elements - 1) * (degree - regularity);
}

}  // namespace biot
