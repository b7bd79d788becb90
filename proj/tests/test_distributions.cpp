#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ceq/distribution.hpp"

using namespace ceq;

static Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

TEST_CASE("point mass") {
  auto mu = SupportDistribution::point_mass(v2(1.5, -2.0));
  CHECK(mu.size() == 1);
  CHECK(mu.dim() == 2);
  CHECK(mu.weights()[0] == 1.0);
  CHECK(mu.mean() == v2(1.5, -2.0));
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(SupportDistribution({}, {}), UsageError);
  CHECK_THROWS_AS(SupportDistribution({v2(0, 0)}, {0.5}), UsageError);
  CHECK_THROWS_AS(SupportDistribution({v2(0, 0), v2(1, 0)}, {1.0, -0.0}),
                  UsageError);
  CHECK_THROWS_AS(SupportDistribution({v2(0, 0), Vec::Zero(3)}, {0.5, 0.5}),
                  UsageError);
}

TEST_CASE("uniform merges duplicate atoms") {
  auto mu = SupportDistribution::uniform({v2(1, 0), v2(0, 1), v2(1, 0), v2(1, 0)});
  CHECK(mu.size() == 2);
  // (1,0) appears three of four times
  CHECK(mu.top_atom() == v2(1, 0));
  double w10 = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    if (mu.atoms()[i] == v2(1, 0)) w10 = mu.weights()[i];
  CHECK(w10 == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("expect is the exact weighted sum and is linear") {
  SupportDistribution mu({v2(1, 2), v2(3, -1), v2(0, 0)}, {0.5, 0.25, 0.25});
  // mean: 0.5*(1,2) + 0.25*(3,-1) = (1.25, 0.75)
  CHECK(mu.mean().isApprox(v2(1.25, 0.75), 1e-15));
  double e = mu.expect_scalar([](const Vec& x) { return x[0] * x[1]; });
  // 0.5*2 + 0.25*(-3) = 0.25
  CHECK(e == doctest::Approx(0.25).epsilon(1e-15));
  auto f = [](const Vec& x) -> Vec { return 2.0 * x; };
  CHECK(mu.expect(f).isApprox(2.0 * mu.mean(), 1e-14));
}

TEST_CASE("top atom breaks weight ties lexicographically") {
  SupportDistribution mu({v2(2, 5), v2(2, 3), v2(-1, 9)}, {0.4, 0.4, 0.2});
  CHECK(mu.top_atom() == v2(2, 3));
}

TEST_CASE("mix combines supports with exact dedup") {
  auto a = SupportDistribution::point_mass(v2(0, 0));
  SupportDistribution b({v2(0, 0), v2(1, 1)}, {0.5, 0.5});
  auto m = mix({0.5, 0.5}, {a, b});
  CHECK(m.size() == 2);
  for (int i = 0; i < m.size(); ++i) {
    double expect = m.atoms()[i] == v2(0, 0) ? 0.75 : 0.25;
    CHECK(m.weights()[i] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("product enumerates the grid with multiplied weights") {
  SupportDistribution a({Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)},
                        {0.25, 0.75});
  SupportDistribution b({Vec::Constant(1, 10.0), Vec::Constant(1, 20.0)},
                        {0.5, 0.5});
  auto p = product({a, b});
  CHECK(p.size() == 4);
  CHECK(p.dim() == 2);
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    total += p.weights()[i];
    if (p.atoms()[i] == v2(1.0, 20.0))
      CHECK(p.weights()[i] == doctest::Approx(0.375).epsilon(1e-15));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("product respects its caps") {
  std::vector<Vec> atoms;
  for (int i = 0; i < 40; ++i) atoms.push_back(Vec::Constant(1, double(i)));
  auto big = SupportDistribution::uniform(atoms);
  CHECK_THROWS_AS(product({big, big, big, big}, 4, 1000000), ResourceError);
  CHECK_THROWS_AS(product({big, big, big, big, big}), ResourceError);
}

TEST_CASE("json round trip is bit exact") {
  std::mt19937_64 rng(7);
  std::vector<Vec> atoms;
  std::vector<double> w;
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int i = 0; i < 9; ++i) {
    atoms.push_back(v2(unif(rng), unif(rng)));
    w.push_back(unif(rng) + 4.0);
  }
  double s = 0.0;
  for (double x : w) s += x;
  for (double& x : w) x /= s;
  // renormalize the last weight so the sum check passes exactly enough
  SupportDistribution mu(atoms, w);
  auto back = SupportDistribution::from_json(mu.to_json());
  REQUIRE(back.size() == mu.size());
  for (int i = 0; i < mu.size(); ++i) {
    CHECK(back.atoms()[i] == mu.atoms()[i]);
    CHECK(back.weights()[i] == mu.weights()[i]);
  }
  CHECK(back.to_json() == mu.to_json());
}
