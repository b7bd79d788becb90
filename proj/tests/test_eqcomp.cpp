#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ceq/eqcomp.hpp"

using namespace ceq;

namespace {

// Two players on B(0, 1.25) in R^3, u_i = b_i(x_{-i})' x_i - x_i' A_i x_i
// + 1/2 with constant SPD A_i and b_i affine in the opponent. Coefficients
// are scaled so utilities stay in [0, 1] over the product body.
QuadraticGame cross_game() {
  QuadraticGame g;
  g.players = 2;
  const double R = 1.25;
  for (int i = 0; i < 2; ++i) g.bodies.push_back(make_ball(Vec::Zero(3), R));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2; ++i) {
    Mat M(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) M(r, c) = u(rng);
    Mat Ai = (M.transpose() * M + Mat::Identity(3, 3)).eval();
    Ai *= 0.2 / Ai.operatorNorm();
    Vec b0(3);
    Mat C(3, 3);
    for (int r = 0; r < 3; ++r) {
      b0[r] = u(rng);
      for (int c = 0; c < 3; ++c) C(r, c) = u(rng);
    }
    b0 *= 0.05 / b0.norm();
    C *= 0.08 / C.operatorNorm();
    g.A.push_back([Ai](const std::vector<Vec>&) { return Ai; });
    g.b.push_back([b0, C, i](const std::vector<Vec>& x) {
      return Vec(b0 + C * x[1 - i]);
    });
    g.c.push_back([](const std::vector<Vec>&) { return 0.5; });
  }
  return g;
}

// Identity-dominant game: u_i = 1 - ||x_i||^2 / R^2, so every deviation
// from any profile loses and the origin is a dominant strategy.
QuadraticGame dominant_game(int d, double R) {
  QuadraticGame g;
  g.players = 2;
  for (int i = 0; i < 2; ++i) g.bodies.push_back(make_ball(Vec::Zero(d), R));
  for (int i = 0; i < 2; ++i) {
    Mat Ai = Mat::Identity(d, d) / (R * R);
    g.A.push_back([Ai](const std::vector<Vec>&) { return Ai; });
    g.b.push_back([d](const std::vector<Vec>&) { return Vec(Vec::Zero(d)); });
    g.c.push_back([](const std::vector<Vec>&) { return 1.0; });
  }
  return g;
}

// Matching pennies embedded on [-1, 1]: p = (1 + x) / 2, payoff matrix
// +-1 scaled by 1/4 and shifted to keep utilities in [0, 1]. Bilinear in
// (x, y), so it is quadratic with A = 0.
QuadraticGame pennies_game() {
  QuadraticGame g;
  g.players = 2;
  for (int i = 0; i < 2; ++i) g.bodies.push_back(make_ball(Vec::Zero(1), 1.0));
  // u1 = 1/4 * (x * y) + 1/2, u2 = -1/4 * (x * y) + 1/2 (zero-sum core)
  for (int i = 0; i < 2; ++i) {
    double s = i == 0 ? 0.25 : -0.25;
    g.A.push_back([](const std::vector<Vec>&) { return Mat(Mat::Zero(1, 1)); });
    g.b.push_back([s, i](const std::vector<Vec>& x) {
      Vec b(1);
      b[0] = s * x[1 - i][0];
      return b;
    });
    g.c.push_back([](const std::vector<Vec>&) { return 0.5; });
  }
  return g;
}

}  // namespace

TEST_CASE("eah: identity-dominant game certifies in one hope cut") {
  QuadraticGame g = dominant_game(2, 1.5);
  std::vector<FeatureMap> maps{affine_map(2, 1.5), affine_map(2, 1.5)};
  double eps = 5e-2;
  EahResult r = eah_quadratic(g, maps, eps);
  CHECK(r.hope_cuts == 1);
  CHECK(r.certificate_value <= eps);
  CHECK(r.mu.size() >= 1);
  double wsum = 0.0;
  for (double w : r.weights) wsum += w;
  CHECK(std::abs(wsum - 1.0) <= 1e-12);
  VerifyOptions vo;
  vo.audit_budget = 200;
  auto rep = verify_equilibrium(g.concave_view(), r.mu, maps, eps, vo);
  CHECK(rep.pass);
}

TEST_CASE("eah: cross game end-to-end at eps = 1e-2") {
  QuadraticGame g = cross_game();
  std::vector<FeatureMap> maps{affine_map(3, 1.25), affine_map(3, 1.25)};
  double eps = 1e-2;
  EahResult r = eah_quadratic(g, maps, eps);
  CHECK(r.certificate_value <= eps);
  CHECK(r.hope_cuts >= 1);
  VerifyOptions vo;
  vo.audit_budget = 300;
  auto rep = verify_equilibrium(g.concave_view(), r.mu, maps, eps, vo);
  CHECK(rep.pass);
  CHECK(rep.max_benefit <= eps * 1.1);
}

TEST_CASE("eah: matching pennies matches the exact correlated equilibrium") {
  QuadraticGame g = pennies_game();
  std::vector<FeatureMap> maps{affine_map(1, 1.0), affine_map(1, 1.0)};
  double eps = 1e-2;

  // The unique CE of matching pennies is uniform over the four joint
  // actions; machine-check the CE conditions exactly in the embedding: for
  // every player, recommended action, and swap, the deviation gain is <= 0.
  ConcaveGame cg = g.concave_view();
  std::vector<Vec> corners;
  for (int a = -1; a <= 1; a += 2)
    for (int b = -1; b <= 1; b += 2) {
      Vec z(2);
      z << a, b;
      corners.push_back(z);
    }
  for (int i = 0; i < 2; ++i)
    for (double from : {-1.0, 1.0})
      for (double to : {-1.0, 1.0}) {
        double gain = 0.0;
        for (const Vec& z : corners) {
          if (z[i] != from) continue;
          std::vector<Vec> prof = cg.split(z);
          std::vector<Vec> dev = prof;
          dev[i][0] = to;
          gain += 0.25 * (cg.utility[i](dev) - cg.utility[i](prof));
        }
        CHECK(gain <= 1e-15);
      }

  // eah output must be eps-close in incentive terms: every affine
  // deviation benefit matches the exact CE's (zero) within eps.
  EahResult r = eah_quadratic(g, maps, eps);
  CHECK(r.certificate_value <= eps);
  VerifyOptions vo;
  vo.audit_budget = 200;
  auto rep = verify_equilibrium(cg, r.mu, maps, eps, vo);
  CHECK(rep.pass);
  for (double b : rep.opt_benefit) CHECK(b <= eps * 1.1);
}

TEST_CASE("eah: hope-cut gradients match finite differences") {
  QuadraticGame g = cross_game();
  ConcaveGame cg = g.concave_view();
  std::vector<FeatureMap> maps{affine_map(3, 1.25), affine_map(3, 1.25)};
  // a small two-atom distribution, a generic K, and the benefit gradient
  Vec z1(6), z2(6);
  z1 << 0.2, -0.3, 0.1, 0.4, 0.0, -0.2;
  z2 << -0.1, 0.2, 0.3, -0.4, 0.2, 0.1;
  SupportDistribution mu({z1, z2}, {0.6, 0.4});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 2; ++i) {
    Mat K(3, 4);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) K(r, c) = u(rng);
    Mat G = expected_feature_gradient(cg, i, mu, K, maps[i]);
    auto benefit = [&](const Mat& Kp) {
      LinearTransform t{Kp, maps[i]};
      PointMap pm = t.as_point_map();
      return deviation_benefit(cg, i, mu, pm).benefit;
    };
    double h = 1e-6;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        Mat Kp = K, Km = K;
        Kp(r, c) += h;
        Km(r, c) -= h;
        double fd = (benefit(Kp) - benefit(Km)) / (2 * h);
        CHECK(std::abs(G(r, c) - fd) <= 1e-5);
      }
  }
}

TEST_CASE("fptas: identity-dominant game reaches low regret") {
  QuadraticGame g = dominant_game(2, 1.5);
  std::vector<FeatureMap> maps{affine_map(2, 1.5), affine_map(2, 1.5)};
  FptasOptions fo;
  fo.T = 30;
  FptasResult r = fptas_equilibrium(g.concave_view(), maps, 0.2, fo);
  CHECK(r.T == 30);
  CHECK(r.mu.size() >= 1);
  double wsum = 0.0;
  for (double w : r.mu.weights()) wsum += w;
  CHECK(std::abs(wsum - 1.0) <= 1e-9);
  REQUIRE(r.final_regret.size() == 2);
  for (double reg : r.final_regret) CHECK(reg <= 0.25);
}
