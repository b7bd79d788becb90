#include "ceq/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ceq {

namespace {

struct LexLess {
  bool operator()(const Vec& a, const Vec& b) const {
    for (int i = 0; i < std::min(a.size(), b.size()); ++i) {
      if (a[i] < b[i]) return true;
      if (a[i] > b[i]) return false;
    }
    return a.size() < b.size();
  }
};

void check_pair_dim(const SupportDistribution& mu, int d, const char* who) {
  if (mu.dim() != 2 * d)
    throw UsageError(std::string(who) + ": distribution must be over pairs");
}

}  // namespace

NfceConstruction nfce_game_from_map(const PointMap& f, const ConvexBody& body) {
  if (f.dim != body.dim)
    throw UsageError("nfce_game_from_map: map/body dimension mismatch");
  NfceConstruction out;
  out.f = f;
  out.body = body;
  const double R = body.outer_radius;
  out.scale = 4.0 * R * R;
  const int d = body.dim;
  const double s = out.scale;
  QuadraticGame g;
  g.players = 2;
  g.bodies = {body, body};
  Mat A = Mat::Identity(d, d) / s;
  g.A.push_back([A](const std::vector<Vec>&) { return A; });
  g.b.push_back([s](const std::vector<Vec>& x) { return Vec(2.0 * x[1] / s); });
  g.c.push_back(
      [s](const std::vector<Vec>& x) { return 1.0 - x[1].squaredNorm() / s; });
  auto fo = f;
  g.A.push_back([A](const std::vector<Vec>&) { return A; });
  g.b.push_back(
      [s, fo](const std::vector<Vec>& x) { return Vec(2.0 * fo.eval(x[0]) / s); });
  g.c.push_back([s, fo](const std::vector<Vec>& x) {
    return 1.0 - fo.eval(x[0]).squaredNorm() / s;
  });
  out.game = std::move(g);
  return out;
}

NfceResiduals nfce_residuals(const SupportDistribution& mu, const PointMap& f) {
  check_pair_dim(mu, f.dim, "nfce_residuals");
  const int d = f.dim;
  // group on exact x (resp. y) equality; conditional means are exact over
  // the finite support
  struct Cell {
    double mass = 0.0;
    Vec sum;
  };
  std::map<Vec, Cell, LexLess> by_x, by_y;
  for (int j = 0; j < mu.size(); ++j) {
    Vec x = mu.atoms()[j].head(d);
    Vec y = mu.atoms()[j].tail(d);
    double w = mu.weights()[j];
    auto ix = by_x.find(x);
    if (ix == by_x.end()) ix = by_x.emplace(x, Cell{0.0, Vec::Zero(d)}).first;
    ix->second.mass += w;
    ix->second.sum += w * y;
    auto iy = by_y.find(y);
    if (iy == by_y.end()) iy = by_y.emplace(y, Cell{0.0, Vec::Zero(d)}).first;
    iy->second.mass += w;
    iy->second.sum += w * f.eval(x);
  }
  NfceResiduals r;
  for (const auto& kv : by_x)
    r.resid_x += kv.second.mass *
                 (kv.first - kv.second.sum / kv.second.mass).squaredNorm();
  for (const auto& kv : by_y)
    r.resid_y += kv.second.mass *
                 (kv.first - kv.second.sum / kv.second.mass).squaredNorm();
  return r;
}

LemmaDecreaseReport verify_lemma_decrease(
    const SupportDistribution& mu, const PointMap& f,
    const std::function<double(const Vec&)>& Q, double eps) {
  check_pair_dim(mu, f.dim, "verify_lemma_decrease");
  LemmaDecreaseReport rep;
  rep.residuals = nfce_residuals(mu, f);
  rep.claimed_eps = eps;
  for (int j = 0; j < mu.size(); ++j) {
    Vec x = mu.atoms()[j].head(f.dim);
    rep.decrease += mu.weights()[j] * (Q(x) - Q(f.eval(x)));
  }
  rep.bound = 2.0 * std::sqrt(rep.residuals.eps_hat());
  rep.residuals_ok = rep.residuals.eps_hat() <= eps + 1e-12;
  rep.holds = rep.decrease <= rep.bound + 1e-9;
  return rep;
}

NormOracle l2_norm() {
  NormOracle n;
  n.value = [](const Vec& v) { return v.norm(); };
  n.subgradient = [](const Vec& v) {
    double nn = v.norm();
    return nn > 0.0 ? Vec(v / nn) : Vec(Vec::Zero(v.size()));
  };
  return n;
}

NormOracle linf_norm() {
  NormOracle n;
  n.value = [](const Vec& v) { return v.lpNorm<Eigen::Infinity>(); };
  n.subgradient = [](const Vec& v) {
    Vec g = Vec::Zero(v.size());
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] != 0.0) g[arg] = v[arg] > 0.0 ? 1.0 : -1.0;
    return g;
  };
  return n;
}

PhiEqConstruction phieq_game_from_contraction(const PointMap& f,
                                              const NormOracle& norm,
                                              const ConvexBody& body) {
  if (f.dim != body.dim)
    throw UsageError("phieq_game_from_contraction: dimension mismatch");
  PhiEqConstruction out;
  out.f = f;
  out.body = body;
  out.norm = norm;
  out.scale = 2.0 * body.outer_radius;
  const double s = out.scale;
  NormOracle nm = norm;
  auto fo = f;
  ConcaveGame g;
  g.players = 2;
  g.bodies = {body, body};
  g.utility.push_back([s, nm](const std::vector<Vec>& x) {
    return 1.0 - nm.value(x[0] - x[1]) / s;
  });
  g.own_gradient.push_back([s, nm](const std::vector<Vec>& x) {
    return Vec(-nm.subgradient(x[0] - x[1]) / s);
  });
  g.utility.push_back([s, nm, fo](const std::vector<Vec>& x) {
    return 1.0 - nm.value(x[1] - fo.eval(x[0])) / s;
  });
  g.own_gradient.push_back([s, nm, fo](const std::vector<Vec>& x) {
    return Vec(-nm.subgradient(x[1] - fo.eval(x[0])) / s);
  });
  out.game = std::move(g);
  return out;
}

PhiEqReport phieq_verify(const PhiEqConstruction& c,
                         const SupportDistribution& mu, double gamma) {
  check_pair_dim(mu, c.f.dim, "phieq_verify");
  if (!(gamma > 0.0)) throw UsageError("phieq_verify: gamma must be positive");
  const int d = c.f.dim;
  PhiEqReport rep;
  for (int j = 0; j < mu.size(); ++j) {
    Vec x = mu.atoms()[j].head(d);
    Vec y = mu.atoms()[j].tail(d);
    double w = mu.weights()[j];
    Vec fx = c.f.eval(x), fy = c.f.eval(y);
    rep.benefit1 += w * (c.norm.value(x - y) - c.norm.value(fx - y));
    rep.benefit2 += w * (c.norm.value(y - fx) - c.norm.value(fy - fx));
    rep.pair_gap += w * c.norm.value(x - y);
    rep.fixed_gap += w * c.norm.value(y - fy);
  }
  // the cross terms cancel: benefit1 + benefit2 = E[norm(x-y) - norm(f(x)-f(y))]
  rep.summed = rep.benefit1 + rep.benefit2;
  rep.eps = std::max({rep.summed, rep.benefit2, 0.0});
  rep.chain_bound = 3.0 * rep.eps / gamma;
  rep.holds = rep.fixed_gap <= rep.chain_bound + 1e-9;
  return rep;
}

}  // namespace ceq
