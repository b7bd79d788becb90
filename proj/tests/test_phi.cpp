#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ceq/phi.hpp"

using namespace ceq;

TEST_CASE("affine map realizes identity and constants") {
  FeatureMap m = affine_map(3, 2.0);
  CHECK(m.out_dim == 4);
  LinearTransform id{identity_transform_matrix(m), m};
  LinearTransform cst{Mat::Zero(3, 4), m};
  cst.K.col(0) << 0.3, -0.2, 0.7;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 50; ++t) {
    Vec x(3);
    for (int j = 0; j < 3; ++j) x[j] = gauss(rng);
    CHECK((id.apply(x) - x).norm() == 0.0);
    CHECK((cst.apply(x) - cst.K.col(0)).norm() == 0.0);
    CHECK(m.eval(x).norm() <= std::sqrt(1.0 + x.squaredNorm()) + 1e-12);
  }
}

TEST_CASE("monomial map evaluates and carries the affine sub-block") {
  FeatureMap m = monomial_map(1, 2, 1.0);
  CHECK(m.out_dim == 3);  // 1, x, x^2
  Vec x(1);
  x << 0.5;
  Vec f = m.eval(x);
  CHECK(f[0] == 1.0);
  CHECK(f[m.linear_index[0]] == 0.5);
  // the remaining coordinate is x^2
  int sq = 3 - m.linear_index[0];
  CHECK(f[sq] == 0.25);
  Mat K = Mat::Zero(1, 3);
  K(0, sq) = 1.0;
  LinearTransform t{K, m};
  Vec half(1);
  half << 0.5;
  CHECK(t.apply(half)[0] == 0.25);

  FeatureMap m2 = monomial_map(2, 2, 2.0);
  CHECK(m2.out_dim == 6);
  Mat id = identity_transform_matrix(m2);
  Vec y(2);
  y << -0.3, 0.8;
  CHECK((id * m2.eval(y) - y).norm() == 0.0);
}

TEST_CASE("apply is linear in K") {
  FeatureMap m = monomial_map(2, 3, 1.5);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 100; ++t) {
    Mat K1(2, m.out_dim), K2(2, m.out_dim);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < m.out_dim; ++c) {
        K1(r, c) = gauss(rng);
        K2(r, c) = gauss(rng);
      }
    double a = gauss(rng), b = gauss(rng);
    Vec x(2);
    x << gauss(rng), gauss(rng);
    Vec lhs = LinearTransform{a * K1 + b * K2, m}.apply(x);
    Vec rhs = a * LinearTransform{K1, m}.apply(x) + b * LinearTransform{K2, m}.apply(x);
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("row-major flattening round trip and coordinate order") {
  Mat K(2, 3);
  K << 1, 2, 3, 4, 5, 6;
  Vec v = flatten_rowmajor(K);
  for (int j = 0; j < 6; ++j) CHECK(v[j] == j + 1);
  CHECK((unflatten_rowmajor(v, 2, 3) - K).norm() == 0.0);
  CHECK_THROWS_AS(unflatten_rowmajor(v, 2, 2), UsageError);
}

TEST_CASE("endomorphism cut excludes the violator and keeps endomorphic K") {
  int d = 2;
  ConvexBody ball = make_ball(Vec::Zero(d), 1.0);
  FeatureMap m = affine_map(d, 1.0);
  // constant map to an exterior point
  LinearTransform bad{Mat::Zero(d, d + 1), m};
  bad.K.col(0) << 2.0, 0.0;
  Vec w = Vec::Zero(d);
  Halfspace hs = endomorphism_cut(ball, bad, w);
  CHECK(!hs.contains(flatten_rowmajor(bad.K)));

  Mat id = identity_transform_matrix(m);
  Mat to_interior = Mat::Zero(d, d + 1);
  to_interior.col(0) << 0.2, -0.4;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    double lam = unif(rng);
    Mat K = lam * id + (1.0 - lam) * to_interior;
    CHECK(hs.contains(flatten_rowmajor(K), 1e-12));
  }

  LinearTransform good{id, m};
  CHECK_THROWS_AS(endomorphism_cut(ball, good, w), UsageError);
}

TEST_CASE("default transform bound contains the identity transform") {
  for (int d : {2, 3}) {
    ConvexBody ball = make_ball(Vec::Zero(d), 2.0);
    FeatureMap m = affine_map(d, 2.0);
    double D = default_transform_bound(m, ball);
    CHECK(D >= flatten_rowmajor(identity_transform_matrix(m)).norm());
    FeatureMap mono = monomial_map(d, 2, 2.0);
    CHECK(default_transform_bound(mono, ball) >=
          flatten_rowmajor(identity_transform_matrix(mono)).norm());
  }
}

TEST_CASE("semi_separate: identity transform is safe in both modes") {
  ConvexBody ball = make_ball(Vec::Zero(2), 1.5);
  FeatureMap m = affine_map(2, 1.5);
  LinearTransform id{identity_transform_matrix(m), m};
  for (auto mode : {SemiSeparateMode::Quadratic, SemiSeparateMode::Fptas}) {
    SemiSeparation s = semi_separate(ball, id, 1e-2, mode);
    REQUIRE(s.safe.has_value());
    // identity has every point fixed: E[phi(x) - x] = 0 exactly
    Vec drift = s.safe->expect([&](const Vec& x) { return Vec(id.apply(x) - x); });
    CHECK(drift.norm() == 0.0);
  }
}

TEST_CASE("semi_separate: exterior constant is rejected in both modes") {
  ConvexBody ball = make_ball(Vec::Zero(2), 1.0);
  FeatureMap m = affine_map(2, 1.0);
  LinearTransform bad{Mat::Zero(2, 3), m};
  bad.K.col(0) << 3.0, 0.0;
  for (auto mode : {SemiSeparateMode::Quadratic, SemiSeparateMode::Fptas}) {
    SemiSeparation s = semi_separate(ball, bad, 1e-2, mode);
    REQUIRE(s.not_endomorphism.has_value());
    CHECK(!ball.contains(bad.apply(*s.not_endomorphism)));
  }
}

TEST_CASE("semi_separate quadratic: contraction transform audited against quadratics") {
  int d = 3;
  double R = 1.5;
  ConvexBody ball = make_ball(Vec::Zero(d), R);
  FeatureMap m = affine_map(d, R);
  Vec target(d);
  target << 0.4, -0.2, 0.1;
  LinearTransform t{Mat::Zero(d, d + 1), m};
  t.K.col(0) = 0.3 * target;
  t.K.rightCols(d) = 0.7 * Mat::Identity(d, d);
  double eps = 1e-2;
  SemiSeparation s = semi_separate(ball, t, eps, SemiSeparateMode::Quadratic);
  REQUIRE(s.safe.has_value());
  // u(x) = b'x - x'Ax/2 with ||b|| <= 1, 0 <= A <= 2I: the gain of the
  // transform is at most eps/2 for every such u.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec b(d);
    for (int j = 0; j < d; ++j) b[j] = gauss(rng);
    b *= unif(rng) / b.norm();
    Mat G(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) G(r, c) = gauss(rng);
    Mat A = (G.transpose() * G).eval();
    A *= 2.0 * unif(rng) / std::max(1.0, A.operatorNorm());
    double benefit = s.safe->expect_scalar([&](const Vec& x) {
      Vec y = t.apply(x);
      auto u = [&](const Vec& z) { return b.dot(z) - 0.5 * z.dot(A * z); };
      return u(y) - u(x);
    });
    CHECK(benefit <= 0.5 * eps + 1e-9);
  }
}
