#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "biot_iga/errors.hpp"
#include "biot_iga/tensor_space.hpp"

using namespace biot;

namespace {

MixedBiotSpaces spaces2d(int n, MixedDegrees d, bool c0_zero = false) {
  const int el[] = {n, n};
  return build_mixed_spaces(2, el, d, c0_zero);
}

}  // namespace

TEST_CASE("mixed spaces accept a legal configuration") {
  const auto s = spaces2d(6, {1, 0, 2, 0});
  CHECK(s.gamma == 2);
  CHECK(s.V.num_components() == 2);
  CHECK(s.W.num_components() == 2);
  CHECK(!s.zero_mean_Q.has_value());
  CHECK(spaces2d(6, {1, 0, 2, 0}, true).zero_mean_Q.has_value());
}

TEST_CASE("stability condition rejection is exhaustive") {
  for (int pp = 0; pp <= 4; ++pp)
    for (int kp = -1; kp <= 4; ++kp)
      for (int pv = 0; pv <= 4; ++pv)
        for (int kv = -1; kv <= 4; ++kv) {
          const MixedDegrees d{pp, kp, pv, kv};
          const bool ok = pv > kv && kv >= 0 && pp > kp && kp >= 0 && pv - kv > pp - kp;
          CHECK(stability_condition_violation(d).has_value() == !ok);
          if (!ok) CHECK_THROWS_AS(spaces2d(2, d), StabilityConditionError);
        }
  try {
    spaces2d(4, {2, 1, 2, 1});
    FAIL("expected rejection");
  } catch (const StabilityConditionError& e) {
    CHECK(std::string(e.what()).find("p_v - k_v > p_p - k_p") != std::string::npos);
  }
}

TEST_CASE("dimension formula per direction and component") {
  const auto s = spaces2d(4, {1, 0, 2, 0});
  CHECK(s.V.size() == 2 * 81);
  for (int n : {1, 3, 5}) {
    for (MixedDegrees d : {MixedDegrees{1, 0, 2, 0}, MixedDegrees{2, 1, 3, 1},
                           MixedDegrees{3, 2, 4, 2}, MixedDegrees{2, 0, 4, 1}}) {
      const auto sp = spaces2d(n, d);
      const int nv = (d.p_v + 1) + (n - 1) * (d.p_v - d.k_v);
      const int nhi = (d.p_p + 2) + (n - 1) * (d.p_p - d.k_p);
      const int nlo = (d.p_p + 1) + (n - 1) * (d.p_p - d.k_p);
      CHECK(sp.V.size() == 2 * nv * nv);
      CHECK(sp.W.size() == 2 * nhi * nlo);
      CHECK(sp.Q.size() == nlo * nlo);
      CHECK(sp.M.size() == nlo * nlo);
      CHECK(sp.W.component(0).size_in(0) == nhi);
      CHECK(sp.W.component(0).direction(1).degree() == d.p_p);
      CHECK(sp.W.component(1).direction(1).degree() == d.p_p + 1);
    }
  }
  const int el3[] = {2, 3, 2};
  const auto s3 = build_mixed_spaces(3, el3, {1, 0, 2, 0}, false);
  CHECK(s3.V.size() == 3 * 5 * 7 * 5);
  CHECK(s3.Q.size() == 3 * 4 * 3);
}

TEST_CASE("dof counts without boundary dofs match the reference tables") {
  // free V + M + free W + Q + one multiplier row for the solid pressure mean.
  auto count = [](int n, MixedDegrees d) {
    const auto s = spaces2d(n, d);
    return s.V.size() - static_cast<int>(s.dirichlet_dofs_V.size()) + s.M.size() +
           s.W.size() - static_cast<int>(s.normal_trace_dofs_W.size()) + s.Q.size() + 1;
  };
  CHECK(count(6, {1, 0, 2, 0}) == 425);
  CHECK(count(6, {2, 0, 3, 0}) == 1229);
  CHECK(count(12, {2, 0, 3, 0}) == 4901);
  CHECK(count(12, {1, 0, 2, 0}) == 1709);
  CHECK(count(18, {1, 0, 2, 0}) == 3857);
  CHECK(count(24, {1, 0, 2, 0}) == 6869);
}

TEST_CASE("boundary dof sets") {
  const int el[] = {1, 1};
  const KnotVector lin({0, 0, 1, 1}, 1);
  ScalarTensorSpace sc({lin, lin});
  TensorSplineSpace V({sc, sc}, Pullback::H1);
  CHECK(boundary_dofs(V, all_faces(2)).size() == 8u);

  const auto s = spaces2d(3, {1, 0, 2, 0});
  const auto face = boundary_dofs(s.W, Face{0, 0});
  const auto& c0 = s.W.component(0);
  for (int i : face) {
    CHECK(i < s.W.offset(1));
    CHECK(c0.multi(i)[0] == 0);
  }
  CHECK(static_cast<int>(face.size()) == c0.size_in(1));
  const int expected = 2 * s.W.component(0).size_in(1) + 2 * s.W.component(1).size_in(0);
  CHECK(static_cast<int>(s.normal_trace_dofs_W.size()) == expected);
  (void)el;
}

TEST_CASE("eval_scalar") {
  const auto s = spaces2d(3, {1, 0, 3, 1});
  const auto& sc = s.V.component(0);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(sc.size());
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto g0 = sc.direction(0).greville();
  Eigen::VectorXd lin(sc.size());
  for (int i = 0; i < sc.size(); ++i) lin[i] = g0[sc.multi(i)[0]];
  for (int k = 0; k < 30; ++k) {
    const double xi[] = {U(rng), U(rng)};
    const auto v = eval_scalar(sc, ones, xi);
    CHECK(v.value == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(v.gradient[0]) < 1e-12);
    CHECK(std::abs(v.gradient[1]) < 1e-12);
    const auto l = eval_scalar(sc, lin, xi);
    CHECK(std::abs(l.value - xi[0]) < 1e-12);
    const int i = k % sc.size();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(sc.size());
    e[i] = 1.0;
    CHECK(eval_scalar(sc, e, xi).value == doctest::Approx(sc.eval_basis(i, xi)));
  }
  CHECK_THROWS_AS(eval_scalar(sc, Eigen::VectorXd::Ones(3), std::vector<double>{0.5, 0.5}),
                  DimensionError);
}

TEST_CASE("parametric divergence of W lies in Q") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (MixedDegrees d : {MixedDegrees{1, 0, 2, 0}, MixedDegrees{2, 1, 3, 1},
                         MixedDegrees{3, 2, 4, 2}}) {
    const auto s = spaces2d(3, d);
    const auto& Q = s.Q.component(0);
    // Sample points strictly inside elements.
    std::vector<std::array<double, 2>> pts;
    const int per = d.p_p + 3;
    for (int a = 0; a < 3 * per; ++a)
      for (int b = 0; b < 3 * per; ++b) pts.push_back({(a + 0.37) / (3 * per), (b + 0.61) / (3 * per)});
    Eigen::MatrixXd A(pts.size(), Q.size());
    for (std::size_t r = 0; r < pts.size(); ++r)
      for (int j = 0; j < Q.size(); ++j) A(r, j) = Q.eval_basis(j, pts[r]);
    const auto qr = A.colPivHouseholderQr();
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Eigen::VectorXd> c(2);
      for (int comp = 0; comp < 2; ++comp) {
        c[comp].resize(s.W.component(comp).size());
        for (auto& v : c[comp]) v = U(rng);
      }
      Eigen::VectorXd div(pts.size());
      for (std::size_t r = 0; r < pts.size(); ++r) {
        div[r] = eval_scalar(s.W.component(0), c[0], pts[r]).gradient[0] +
                 eval_scalar(s.W.component(1), c[1], pts[r]).gradient[1];
      }
      const Eigen::VectorXd x = qr.solve(div);
      CHECK((A * x - div).norm() < 1e-11 * std::max(1.0, div.norm()));
    }
  }
}

TEST_CASE("parametric integrals integrate to the cube volume") {
  const auto s = spaces2d(5, {2, 1, 3, 1});
  CHECK(s.zero_mean_M.sum() == doctest::Approx(1.0).epsilon(1e-14));
}
