#include "biot_iga/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biot_iga/errors.hpp"

namespace biot {

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0) throw ParameterError("knot vector degree must be >= 0");
  const int p = degree_;
  const auto m = static_cast<int>(knots_.size());
  if (m < 2 * (p + 1)) {
    throw ParameterError("knot vector needs at least 2(p+1) knots");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end())) {
    throw ParameterError("knots must be non-decreasing");
  }
  if (knots_.front() != 0.0 || knots_.back() != 1.0) {
    throw ParameterError("knots must span [0, 1]");
  }
  for (int i = 0; i <= p; ++i) {
    if (knots_[i] != 0.0 || knots_[m - 1 - i] != 1.0) {
      throw ParameterError("knot vector must be open (end multiplicity p+1)");
    }
  }
  if (knots_[p + 1] == 0.0 || knots_[m - p - 2] == 1.0) {
    throw ParameterError("end knot multiplicity exceeds p+1");
  }
  const auto mult = multiplicities();
  for (std::size_t i = 1; i + 1 < mult.size(); ++i) {
    if (mult[i] > p + 1) {
      throw ParameterError("interior knot multiplicity exceeds p+1");
    }
  }
}

KnotVector KnotVector::uniform(int num_elements, int degree, int regularity) {
  return uniform(num_elements, degree, regularity, {}, regularity);
}

KnotVector KnotVector::uniform(int num_elements, int degree, int regularity,
                               std::span<const double> reduced_at,
                               int reduced_regularity) {
  if (num_elements < 1) throw ParameterError("num_elements must be >= 1");
  if (degree < 0) throw ParameterError("degree must be >= 0");
  if (regularity < 0 || regularity > degree - 1) {
    throw ParameterError("regularity k must satisfy 0 <= k <= p-1 (got k=" +
                         std::to_string(regularity) + ", p=" +
                         std::to_string(degree) + ")");
  }
  if (reduced_regularity < -1 || reduced_regularity > regularity) {
    throw ParameterError("reduced regularity out of range");
  }
  std::vector<double> knots(degree + 1, 0.0);
  for (int i = 1; i < num_elements; ++i) {
    const double x = static_cast<double>(i) / num_elements;
    const bool reduced =
        std::find(reduced_at.begin(), reduced_at.end(), x) != reduced_at.end();
    const int k = reduced ? reduced_regularity : regularity;
    knots.insert(knots.end(), degree - k, x);
  }
  for (double x : reduced_at) {
    const double scaled = x * num_elements;
    if (x <= 0.0 || x >= 1.0 || scaled != std::round(scaled)) {
      throw ParameterError("reduced-regularity breakpoint " + std::to_string(x) +
                           " is not an interior grid line");
    }
  }
  knots.insert(knots.end(), degree + 1, 1.0);
  return KnotVector(std::move(knots), degree);
}

KnotVector make_open_knot_vector(int num_elements, int degree, int regularity) {
  return KnotVector::uniform(num_elements, degree, regularity);
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> out;
  for (double x : knots_) {
    if (out.empty() || out.back() != x) out.push_back(x);
  }
  return out;
}

std::vector<int> KnotVector::multiplicities() const {
  std::vector<int> out;
  double last = -1.0;
  for (double x : knots_) {
    if (out.empty() || x != last) {
      out.push_back(1);
      last = x;
    } else {
      ++out.back();
    }
  }
  return out;
}

int KnotVector::find_span(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("evaluation point " + std::to_string(x) +
                      " outside [0, 1]");
  }
  const int n = size();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  int i = static_cast<int>(it - knots_.begin()) - 1;
  return std::min(i, n - 1);
}

BasisWindow KnotVector::eval(double x) const {
  const int p = degree_;
  const int span = find_span(x);
  BasisWindow out;
  out.first = span - p;
  out.values.assign(p + 1, 0.0);
  std::vector<double> left(p + 1), right(p + 1);
  auto& N = out.values;
  N[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : N[r] / denom;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  return out;
}

BasisDerivatives KnotVector::eval_derivatives(double x, int max_order) const {
  const int p = degree_;
  if (max_order < 0 || max_order > p) {
    throw ParameterError("derivative order " + std::to_string(max_order) +
                         " exceeds degree " + std::to_string(p));
  }
  const int span = find_span(x);
  // Triangular table: ndu[j][r] basis values (j >= r), knot differences (j < r).
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1), right(p + 1);
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[j][r] == 0.0 ? 0.0 : ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  BasisDerivatives out;
  out.first = span - p;
  out.rows.assign(max_order + 1, std::vector<double>(p + 1, 0.0));
  for (int j = 0; j <= p; ++j) out.rows[0][j] = ndu[j][p];

  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= max_order; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        const double denom = ndu[pk + 1][rk];
        a[s2][0] = denom == 0.0 ? 0.0 : a[s1][0] / denom;
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        const double denom = ndu[pk + 1][rk + j];
        a[s2][j] = denom == 0.0 ? 0.0 : (a[s1][j] - a[s1][j - 1]) / denom;
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        const double denom = ndu[pk + 1][r];
        a[s2][k] = denom == 0.0 ? 0.0 : -a[s1][k - 1] / denom;
        d += a[s2][k] * ndu[r][pk];
      }
      out.rows[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= max_order; ++k) {
    for (double& v : out.rows[k]) v *= factor;
    factor *= (p - k);
  }
  return out;
}

KnotVector KnotVector::derivative_space() const {
  if (degree_ == 0) {
    throw ParameterError("derivative space needs degree >= 1");
  }
  std::vector<double> inner(knots_.begin() + 1, knots_.end() - 1);
  return KnotVector(std::move(inner), degree_ - 1);
}

std::vector<double> KnotVector::greville() const {
  const int n = size();
  const int p = degree_;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    if (p == 0) {
      out[i] = 0.5 * (knots_[i] + knots_[i + 1]);
      continue;
    }
    double s = 0.0;
    for (int j = 1; j <= p; ++j) s += knots_[i + j];
    out[i] = s / p;
  }
  return out;
}

double KnotVector::basis_function(int i, double x) const {
  const auto w = eval(x);
  const int local = i - w.first;
  if (local < 0 || local > degree_) return 0.0;
  return w.values[local];
}

}  // namespace biot
