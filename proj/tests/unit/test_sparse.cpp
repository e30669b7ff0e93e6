#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "biot_iga/errors.hpp"
#include "biot_iga/sparse.hpp"

using namespace biot;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd& d) {
  std::vector<Triplet> t;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
  return SparseMatrix::from_triplets(static_cast<int>(d.rows()), static_cast<int>(d.cols()), t);
}

Eigen::MatrixXd random_spd(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = U(rng);
  return R * R.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("triplet assembly") {
  const auto m = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}});
  CHECK(m.nnz() == 1);
  CHECK(m.coeff(0, 0) == 3.0);
  const auto z = SparseMatrix::from_triplets(3, 4, {});
  CHECK(z.nnz() == 0);
  CHECK(z.offsets() == std::vector<int>{0, 0, 0, 0});
  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), DimensionError);

  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> R(0, 29);
  std::vector<Triplet> t;
  for (int k = 0; k < 300; ++k) t.push_back({R(rng), R(rng) % 20, U(rng)});
  const auto a = SparseMatrix::from_triplets(30, 20, t);
  for (int r = 0; r < a.rows(); ++r)
    for (int k = a.offsets()[r] + 1; k < a.offsets()[r + 1]; ++k)
      CHECK(a.indices()[k - 1] < a.indices()[k]);
  const auto b = SparseMatrix::from_triplets(30, 20, a.to_triplets());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(30, 20);
  for (const auto& e : t) dense(e.row, e.col) += e.value;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x = Eigen::VectorXd::Random(20);
    CHECK(((a * x) - dense * x).norm() < 1e-14 * std::max(1.0, (dense * x).norm()));
    CHECK(((b * x) - (a * x)).norm() < 1e-14);
    Eigen::VectorXd y = Eigen::VectorXd::Random(30);
    CHECK((a.transpose_multiply(y) - dense.transpose() * y).norm() < 1e-13);
    CHECK((a.transpose() * y - dense.transpose() * y).norm() < 1e-13);
  }
  const int rows[] = {3, 7, 1};
  const int cols[] = {0, 19, 5};
  const auto s = a.submatrix(rows, cols);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(s.coeff(i, j) == doctest::Approx(dense(rows[i], cols[j])));
}

TEST_CASE("LU solves") {
  const auto I = SparseMatrix::identity(5);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  CHECK((SparseLU(I).solve(b) - b).norm() < 1e-15);

  Eigen::MatrixXd d(2, 2);
  d << 2, 1, 1, 3;
  Eigen::VectorXd rhs(2);
  rhs << 3, 4;
  const auto x = SparseLU(from_dense(d)).solve(rhs);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));

  // Non-symmetric system to pin the transpose convention.
  Eigen::MatrixXd n(3, 3);
  n << 4, 1, 0, 2, 5, 1, 0, 3, 6;
  Eigen::VectorXd nb(3);
  nb << 1, 2, 3;
  const auto nx = SparseLU(from_dense(n)).solve(nb);
  CHECK((n * nx - nb).norm() < 1e-14);

  std::mt19937 rng(13);
  const Eigen::MatrixXd spd = random_spd(50, rng);
  const SparseLU lu(from_dense(spd));
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd bb = Eigen::VectorXd::Random(50);
    CHECK((spd * lu.solve(bb) - bb).norm() / bb.norm() < 1e-10);
  }
  // Linearity and determinism.
  Eigen::VectorXd b1 = Eigen::VectorXd::Random(50), b2 = Eigen::VectorXd::Random(50);
  const Eigen::VectorXd lhs = lu.solve(2.5 * b1 + b2);
  const Eigen::VectorXd rhs2 = 2.5 * lu.solve(b1) + lu.solve(b2);
  CHECK((lhs - rhs2).norm() < 1e-12 * rhs2.norm());
  const SparseLU lu2(from_dense(spd));
  CHECK((lu.solve(b1) - lu2.solve(b1)).norm() == 0.0);
}

TEST_CASE("singular matrices report a pivot") {
  Eigen::MatrixXd d(3, 3);
  d << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  try {
    SparseLU lu(from_dense(d));
    FAIL("expected singular matrix error");
  } catch (const SingularMatrixError& e) {
    CHECK(e.pivot() >= 0);
    CHECK(e.pivot() < 3);
  }
  // Structurally empty row.
  CHECK_THROWS_AS(SparseLU(SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}})), SingularMatrixError);
}

TEST_CASE("constrained solves") {
  std::mt19937 rng(17);
  const int n = 20;
  const Eigen::MatrixXd K = random_spd(n, rng);
  const Eigen::VectorXd f = Eigen::VectorXd::Random(n);

  BlockSystem plain({n});
  plain.add_block(0, 0, from_dense(K));
  const Eigen::VectorXd rhs[] = {f};
  const auto s0 = solve_constrained(plain, rhs);
  CHECK((s0.fields[0] - K.ldlt().solve(f)).norm() < 1e-12);
  CHECK(s0.multipliers.size() == 0);

  BlockSystem con({n});
  con.add_block(0, 0, from_dense(K));
  const Eigen::VectorXd m = Eigen::VectorXd::Ones(n);
  con.add_constraint(0, m);
  const auto s1 = solve_constrained(con, rhs);
  const Eigen::VectorXd& x = s1.fields[0];
  CHECK(std::abs(m.dot(x)) < 1e-12);
  // KKT: K x + m lambda = f.
  CHECK((K * x + m * s1.multipliers[0] - f).norm() < 1e-10);
  CHECK(s1.residual < 1e-12);

  // Inhomogeneous target.
  Eigen::VectorXd target(1);
  target << 2.0;
  const auto s2 = solve_constrained(con, rhs, target);
  CHECK(m.dot(s2.fields[0]) == doctest::Approx(2.0).epsilon(1e-12));

  BlockSystem dup({n});
  dup.add_block(0, 0, from_dense(K));
  dup.add_constraint(0, m);
  dup.add_constraint(0, m);
  CHECK_THROWS_AS(solve_constrained(dup, rhs), SingularMatrixError);
}

TEST_CASE("two-block saddle point") {
  // [[K, B^T], [B, -C]]
  std::mt19937 rng(19);
  const Eigen::MatrixXd K = random_spd(6, rng);
  Eigen::MatrixXd B = Eigen::MatrixXd::Random(3, 6);
  const Eigen::MatrixXd C = 0.1 * Eigen::MatrixXd::Identity(3, 3);
  BlockSystem sys({6, 3});
  sys.add_block(0, 0, from_dense(K));
  sys.add_block(0, 1, from_dense(B.transpose()));
  sys.add_block(1, 0, from_dense(B));
  sys.add_block(1, 1, from_dense(C), -1.0);
  Eigen::MatrixXd full(9, 9);
  full << K, B.transpose(), B, -C;
  const Eigen::VectorXd r0 = Eigen::VectorXd::Random(6), r1 = Eigen::VectorXd::Random(3);
  const Eigen::VectorXd rhs[] = {r0, r1};
  const auto s = solve_constrained(sys, rhs);
  Eigen::VectorXd b(9);
  b << r0, r1;
  const Eigen::VectorXd ref = full.fullPivLu().solve(b);
  CHECK((s.fields[0] - ref.head(6)).norm() < 1e-12);
  CHECK((s.fields[1] - ref.tail(3)).norm() < 1e-12);
}

TEST_CASE("smallest generalized eigenvalue") {
  const auto I = Eigen::MatrixXd::Identity(3, 3);
  CHECK(smallest_generalized_eigenvalue(I, I).value == doctest::Approx(1.0));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 2.0;
  A(1, 1) = 5.0;
  CHECK(smallest_generalized_eigenvalue(A, Eigen::MatrixXd::Identity(2, 2)).value ==
        doctest::Approx(2.0));
  CHECK_THROWS_AS(smallest_generalized_eigenvalue(I, -I), NumericalError);

  std::mt19937 rng(23);
  const int n = 8;
  const Eigen::MatrixXd P = random_spd(n, rng);
  const Eigen::MatrixXd Q = random_spd(n, rng);
  const auto e = smallest_generalized_eigenvalue(P, Q);
  CHECK((P * e.vector - e.value * Q * e.vector).norm() < 1e-8 * (P * e.vector).norm());
  std::normal_distribution<double> N(0.0, 1.0);
  double min_rq = 1e300;
  for (int s = 0; s < 100000; ++s) {
    Eigen::VectorXd v(n);
    for (auto& c : v) c = N(rng);
    min_rq = std::min(min_rq, v.dot(P * v) / v.dot(Q * v));
  }
  CHECK(e.value <= min_rq * (1.0 + 1e-12));
  CHECK(e.value > 0.9 * min_rq);
}
