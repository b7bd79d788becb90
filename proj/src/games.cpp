#include "ceq/games.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <random>

namespace ceq {

int ConcaveGame::total_dim() const {
  int d = 0;
  for (const auto& b : bodies) d += b.dim;
  return d;
}

std::vector<Vec> ConcaveGame::split(const Vec& stacked) const {
  if (stacked.size() != total_dim())
    throw UsageError("ConcaveGame::split: stacked dimension mismatch");
  std::vector<Vec> profile(players);
  int at = 0;
  for (int i = 0; i < players; ++i) {
    profile[i] = stacked.segment(at, bodies[i].dim);
    at += bodies[i].dim;
  }
  return profile;
}

Vec ConcaveGame::stack(const std::vector<Vec>& profile) const {
  Vec out(total_dim());
  int at = 0;
  for (int i = 0; i < players; ++i) {
    out.segment(at, bodies[i].dim) = profile[i];
    at += bodies[i].dim;
  }
  return out;
}

void ConcaveGame::validate() const {
  if (players < 1 || players > kMaxPlayers)
    throw UsageError("ConcaveGame: player count out of range");
  if (static_cast<int>(bodies.size()) != players ||
      static_cast<int>(utility.size()) != players ||
      static_cast<int>(own_gradient.size()) != players)
    throw UsageError("ConcaveGame: per-player field sizes disagree");
}

ConcaveGame QuadraticGame::concave_view() const {
  ConcaveGame g;
  g.players = players;
  g.bodies = bodies;
  for (int i = 0; i < players; ++i) {
    auto Ai = A[i];
    auto bi = b[i];
    auto ci = static_cast<int>(c.size()) > i && c[i] ? c[i]
              : std::function<double(const std::vector<Vec>&)>();
    g.utility.push_back([i, Ai, bi, ci](const std::vector<Vec>& p) {
      const Vec& x = p[i];
      double v = bi(p).dot(x) - x.dot(Ai(p) * x);
      if (ci) v += ci(p);
      return v;
    });
    g.own_gradient.push_back([i, Ai, bi](const std::vector<Vec>& p) {
      return Vec(bi(p) - 2.0 * (Ai(p) * p[i]));
    });
  }
  g.validate();
  return g;
}

DeviationReport deviation_benefit(const ConcaveGame& game, int i,
                                  const SupportDistribution& mu,
                                  const PointMap& dev) {
  game.validate();
  if (i < 0 || i >= game.players) throw UsageError("deviation_benefit: bad player");
  if (mu.dim() != game.total_dim())
    throw UsageError("deviation_benefit: distribution dimension mismatch");
  DeviationReport out;
  for (int j = 0; j < mu.size(); ++j) {
    std::vector<Vec> p = game.split(mu.atoms()[j]);
    double base = game.utility[i](p);
    Vec y = dev.eval(p[i]);
    if (y.size() != game.bodies[i].dim)
      throw UsageError("deviation_benefit: deviation dimension mismatch");
    if (!out.exterior_witness && !game.bodies[i].contains(y))
      out.exterior_witness = p[i];
    std::vector<Vec> q = p;
    q[i] = y;
    out.benefit += mu.weights()[j] * (game.utility[i](q) - base);
  }
  return out;
}

Mat expected_feature_gradient(const ConcaveGame& game, int i,
                              const SupportDistribution& mu, const Mat& K,
                              const FeatureMap& m) {
  game.validate();
  if (i < 0 || i >= game.players)
    throw UsageError("expected_feature_gradient: bad player");
  if (K.rows() != game.bodies[i].dim || K.cols() != m.out_dim ||
      m.in_dim != game.bodies[i].dim)
    throw UsageError("expected_feature_gradient: shape mismatch");
  Mat U = Mat::Zero(K.rows(), K.cols());
  for (int j = 0; j < mu.size(); ++j) {
    std::vector<Vec> p = game.split(mu.atoms()[j]);
    Vec f = m.eval(p[i]);
    std::vector<Vec> q = p;
    q[i] = K * f;
    Vec g = game.own_gradient[i](q);
    if (!g.allFinite())
      throw NumericError("expected_feature_gradient: gradient not finite at a transformed atom");
    U += mu.weights()[j] * g * f.transpose();
  }
  return U;
}

namespace {

double benefit_of(const ConcaveGame& game, int i, const SupportDistribution& mu,
                  const Mat& K, const FeatureMap& m) {
  double v = 0.0;
  for (int j = 0; j < mu.size(); ++j) {
    std::vector<Vec> p = game.split(mu.atoms()[j]);
    std::vector<Vec> q = p;
    q[i] = K * m.eval(p[i]);
    v += mu.weights()[j] * (game.utility[i](q) - game.utility[i](p));
  }
  return v;
}

bool endomorphic_on_support(const ConcaveGame& game, int i,
                            const SupportDistribution& mu, const Mat& K,
                            const FeatureMap& m) {
  for (int j = 0; j < mu.size(); ++j) {
    std::vector<Vec> p = game.split(mu.atoms()[j]);
    if (!game.bodies[i].contains(K * m.eval(p[i]))) return false;
  }
  return true;
}

// Transforms in the D-ball mapping every support atom into the body: the
// convex search region for the best deviation in K-space.
ConvexBody transform_body(const ConcaveGame& game, int i,
                          const SupportDistribution& mu, const FeatureMap& m,
                          double D) {
  const ConvexBody& X = game.bodies[i];
  ConvexBody body;
  body.dim = X.dim * m.out_dim;
  body.outer_radius = D;
  body.inner_radius = std::min(D, X.inner_radius / m.norm_bound);
  body.start = Vec::Zero(body.dim);
  // capture atoms' own blocks and features once
  auto feats = std::make_shared<std::vector<Vec>>();
  for (int j = 0; j < mu.size(); ++j)
    feats->push_back(m.eval(game.split(mu.atoms()[j])[i]));
  ConvexBody X_copy = X;
  int rows = X.dim, cols = m.out_dim;
  body.separation = [feats, X_copy, rows, cols, D](const Vec& v) -> SeparationResult {
    double n = v.norm();
    if (n > D + kBoundarySlack) return Halfspace{v / n, D};
    Mat K = unflatten_rowmajor(v, rows, cols);
    for (const Vec& f : *feats) {
      auto sep = X_copy.separate(K * f);
      if (sep) return Halfspace{flatten_rowmajor(Mat(sep->a * f.transpose())), sep->b};
    }
    return std::nullopt;
  };
  return body;
}

}  // namespace

EquilibriumReport verify_equilibrium(const ConcaveGame& game,
                                     const SupportDistribution& mu,
                                     const std::vector<FeatureMap>& maps,
                                     double eps, const VerifyOptions& opts) {
  game.validate();
  if (static_cast<int>(maps.size()) != game.players)
    throw UsageError("verify_equilibrium: one feature map per player required");
  for (int j = 0; j < mu.size(); ++j) {
    std::vector<Vec> p = game.split(mu.atoms()[j]);
    for (int i = 0; i < game.players; ++i)
      if (!game.bodies[i].contains(p[i]))
        throw UsageError("verify_equilibrium: support atom outside the product body");
  }
  EquilibriumReport rep;
  rep.threshold = eps * (1.0 + opts.tolerance_factor);
  for (int i = 0; i < game.players; ++i) {
    const FeatureMap& m = maps[i];
    double D = static_cast<int>(opts.transform_bound.size()) > i &&
                       opts.transform_bound[i] > 0.0
                   ? opts.transform_bound[i]
                   : default_transform_bound(m, game.bodies[i]);
    ConvexBody kbody = transform_body(game, i, mu, m, D);
    ConcaveOracle f;
    f.value = [&game, i, &mu, &m](const Vec& v) {
      return benefit_of(game, i, mu,
                        unflatten_rowmajor(v, game.bodies[i].dim, m.out_dim), m);
    };
    f.gradient = [&game, i, &mu, &m](const Vec& v) {
      return flatten_rowmajor(expected_feature_gradient(
          game, i, mu, unflatten_rowmajor(v, game.bodies[i].dim, m.out_dim), m));
    };
    double nb = m.norm_bound;
    f.lipschitz = opts.lipschitz > 0.0 ? opts.lipschitz
                                       : (1.0 + 4.0 * D * nb) * nb;
    f.smoothness = opts.smoothness > 0.0 ? opts.smoothness : 4.0 * nb * nb;
    MaximizeResult best = maximize_concave(kbody, f, opts.opt_eps_factor * eps);
    rep.opt_benefit.push_back(best.value);

    const int dK = kbody.dim;
    double audit_max = -std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(max : audit_max) schedule(dynamic)
    for (int s = 0; s < opts.audit_budget; ++s) {
      std::mt19937_64 rng(split_seed(opts.seed, 1000u * (i + 1) + s));
      std::normal_distribution<double> gauss;
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Vec dir(dK);
      for (int t = 0; t < dK; ++t) dir[t] = gauss(rng);
      dir.normalize();
      double r = D * std::pow(unif(rng), 1.0 / dK);
      Mat K = unflatten_rowmajor(Vec(r * dir), game.bodies[i].dim, m.out_dim);
      int halvings = 0;
      while (!endomorphic_on_support(game, i, mu, K, m) && halvings < 80) {
        K *= 0.5;
        ++halvings;
      }
      if (halvings == 80) continue;
      audit_max = std::max(audit_max, benefit_of(game, i, mu, K, m));
    }
    rep.audit_benefit.push_back(audit_max);
  }
  rep.max_benefit = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.players; ++i)
    rep.max_benefit = std::max({rep.max_benefit, rep.opt_benefit[i],
                                rep.audit_benefit[i]});
  rep.pass = rep.max_benefit <= rep.threshold;
  return rep;
}

}  // namespace ceq
