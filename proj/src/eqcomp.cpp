#include "ceq/eqcomp.hpp"

#include <algorithm>
#include <cmath>

#include "ceq/regret.hpp"

namespace ceq {

namespace {

std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

struct HopePool {
  std::vector<Vec> g;       // stacked benefit gradients
  std::vector<double> c;    // affine offsets: a_j(K) = <g_j, K> + c_j
  std::vector<SupportDistribution> mus;
  std::vector<int> off, len;      // per-player blocks of the stacked space
  std::vector<double> D;          // per-player ball radii
  std::vector<double> warm;

  // h(lambda) = sup over the product of balls of sum lambda_j a_j, with an
  // optional subgradient.
  double value(const std::vector<double>& lam, std::vector<double>* sub) const {
    const int dim = static_cast<int>(g[0].size());
    Vec ghat = Vec::Zero(dim);
    double val = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      ghat += lam[j] * g[j];
      val += lam[j] * c[j];
    }
    if (sub) *sub = c;
    for (std::size_t i = 0; i < D.size(); ++i) {
      Vec block = ghat.segment(off[i], len[i]);
      double n = block.norm();
      val += D[i] * n;
      if (sub && n > 1e-15) {
        Vec u = block / n;
        for (std::size_t j = 0; j < g.size(); ++j)
          (*sub)[j] += D[i] * u.dot(g[j].segment(off[i], len[i]));
      }
    }
    return val;
  }

  std::optional<std::vector<double>> minimize(double eps, long budget) {
    const std::size_t s = g.size();
    std::vector<double> lam(s, 1.0 / static_cast<double>(s));
    if (warm.size() == s) lam = warm;
    std::vector<double> best = lam;
    double best_h = value(lam, nullptr);
    for (long t = 0; t < budget && best_h > eps; ++t) {
      std::vector<double> sub;
      double h = value(lam, &sub);
      if (h < best_h) {
        best_h = h;
        best = lam;
      }
      double sn = 0.0;
      for (double x : sub) sn += x * x;
      if (sn < 1e-30) break;
      double step = h / sn;
      for (std::size_t j = 0; j < s; ++j) lam[j] -= step * sub[j];
      lam = project_simplex(std::move(lam));
    }
    warm = best;
    if (best_h <= eps) return best;
    return std::nullopt;
  }
};

}  // namespace

EahResult eah_quadratic(const QuadraticGame& game,
                        const std::vector<FeatureMap>& maps, double eps,
                        const EahOptions& opts) {
  if (eps <= 0.0) throw UsageError("eah_quadratic: eps must be positive");
  ConcaveGame cv = game.concave_view();
  const int n = cv.players;
  if (static_cast<int>(maps.size()) != n)
    throw UsageError("eah_quadratic: one feature map per player required");
  HopePool pool;
  int dim = 0;
  double Dmax = 0.0, L = 0.0;
  for (int i = 0; i < n; ++i) {
    double Di = static_cast<int>(opts.transform_bound.size()) > i &&
                        opts.transform_bound[i] > 0.0
                    ? opts.transform_bound[i]
                    : default_transform_bound(maps[i], cv.bodies[i]);
    pool.D.push_back(Di);
    pool.off.push_back(dim);
    pool.len.push_back(cv.bodies[i].dim * maps[i].out_dim);
    dim += pool.len.back();
    Dmax = std::max(Dmax, Di);
    L = std::max(L, (1.0 + 4.0 * Di * maps[i].norm_bound) * maps[i].norm_bound);
  }
  L = opts.lipschitz > 0.0 ? opts.lipschitz : n * L;
  double Dtot = 0.0;
  for (double Di : pool.D) Dtot += Di * Di;
  Dtot = std::sqrt(Dtot);

  EahResult res;
  res.dual_dim = dim;
  const double accept = eps;  // final certificate must clear this
  long next_check = 1;

  auto cutter = [&](const Vec& z) -> std::variant<std::vector<double>, CutRecord> {
    // transform-ball feasibility per player
    for (int i = 0; i < n; ++i) {
      Vec block = z.segment(pool.off[i], pool.len[i]);
      double bn = block.norm();
      if (bn > pool.D[i] + kBoundarySlack) {
        CutRecord cut;
        cut.kind = CutKind::Feasibility;
        cut.player = i;
        Vec a = Vec::Zero(dim);
        a.segment(pool.off[i], pool.len[i]) = block / bn;
        cut.hs = Halfspace{a, pool.D[i]};
        return cut;
      }
    }
    // per-player semi-separation at the center
    std::vector<Mat> K(n);
    std::vector<SupportDistribution> safes;
    for (int i = 0; i < n; ++i) {
      K[i] = unflatten_rowmajor(z.segment(pool.off[i], pool.len[i]),
                                cv.bodies[i].dim, maps[i].out_dim);
      LinearTransform t{K[i], maps[i]};
      SemiSeparation s = semi_separate(cv.bodies[i], t, eps / n,
                                       SemiSeparateMode::Quadratic);
      if (s.not_endomorphism) {
        Halfspace local = endomorphism_cut(cv.bodies[i], t, *s.not_endomorphism);
        CutRecord cut;
        cut.kind = CutKind::Endomorphism;
        cut.player = i;
        Vec a = Vec::Zero(dim);
        a.segment(pool.off[i], pool.len[i]) = local.a;
        cut.hs = Halfspace{a, local.b};
        cut.witness_point = *s.not_endomorphism;
        return cut;
      }
      safes.push_back(std::move(*s.safe));
    }
    // hope cut through the product distribution
    SupportDistribution mu = product(safes);
    double c_total = 0.0;
    Vec g = Vec::Zero(dim);
    for (int i = 0; i < n; ++i) {
      Mat Ki = K[i];
      FeatureMap mi = maps[i];
      PointMap dev{cv.bodies[i].dim,
                   [Ki, mi](const Vec& x) { return Vec(Ki * mi.eval(x)); }};
      c_total += deviation_benefit(cv, i, mu, dev).benefit;
      g.segment(pool.off[i], pool.len[i]) =
          flatten_rowmajor(expected_feature_gradient(cv, i, mu, K[i], maps[i]));
    }
    if (c_total > 0.5 * eps + 1e-7)
      throw ContractViolation(
          "eah_quadratic: summed center benefit exceeds eps/2; utility "
          "normalization promise broken");
    CutRecord cut;
    cut.kind = CutKind::Hope;
    // dual-feasible K satisfy <g, K - z> >= eps/2
    cut.hs = Halfspace{-g, -g.dot(z) - 0.5 * eps};
    cut.witness_mu = mu;
    cut.witness_direction = g;
    cut.offset = c_total - g.dot(z);
    pool.g.push_back(g);
    pool.c.push_back(cut.offset);
    pool.mus.push_back(std::move(mu));
    if (static_cast<long>(pool.g.size()) >= next_check) {
      next_check = 2 * next_check;
      if (auto lam = pool.minimize(accept, 2000)) return *lam;
    }
    return cut;
  };

  double rho = std::min(eps / (4.0 * Dmax * L), 0.5 * Dtot);
  double threshold = dim * std::log(rho);
  auto run = ellipsoid_feasibility<std::vector<double>>(
      EllipsoidState::ball(Vec::Zero(dim), Dtot),
      std::function<std::variant<std::vector<double>, CutRecord>(const Vec&)>(cutter),
      threshold, Dtot + 1.0, opts.max_iterations);
  res.iterations = run.iterations;
  res.cuts = std::move(run.cuts);
  for (const auto& c : res.cuts) {
    if (c.kind == CutKind::Endomorphism) ++res.endomorphism_cuts;
    if (c.kind == CutKind::Feasibility) ++res.feasibility_cuts;
  }
  // counted from the pool: the evaluation that accepts ends the run before
  // its cut record is appended to the trace
  res.hope_cuts = static_cast<long>(pool.g.size());
  std::optional<std::vector<double>> lam =
      run.accepted() ? run.payload : pool.minimize(accept, opts.certificate_budget);
  if (!lam)
    throw ContractViolation(
        "eah_quadratic: certificate residual h(lambda) > eps after budget");
  res.weights = *lam;
  res.certificate_value = pool.value(*lam, nullptr);
  res.summed_eps = res.certificate_value;

  std::vector<double> w;
  std::vector<SupportDistribution> comps;
  double total = 0.0;
  for (std::size_t j = 0; j < lam->size(); ++j)
    if ((*lam)[j] > 1e-14) {
      w.push_back((*lam)[j]);
      comps.push_back(pool.mus[j]);
      total += (*lam)[j];
    }
  for (double& x : w) x /= total;
  res.mu = mix(w, comps);
  return res;
}

FptasResult fptas_equilibrium(const ConcaveGame& game,
                              const std::vector<FeatureMap>& maps, double eps,
                              const FptasOptions& opts) {
  if (!(eps > 0.0) || eps > 1.0)
    throw UsageError("fptas_equilibrium: eps must lie in (0, 1]");
  game.validate();
  const int n = game.players;
  if (static_cast<int>(maps.size()) != n)
    throw UsageError("fptas_equilibrium: one feature map per player required");
  std::vector<double> D(n);
  double Dmax = 0.0;
  int kmax = 0;
  for (int i = 0; i < n; ++i) {
    D[i] = static_cast<int>(opts.transform_bound.size()) > i &&
                   opts.transform_bound[i] > 0.0
               ? opts.transform_bound[i]
               : default_transform_bound(maps[i], game.bodies[i]);
    Dmax = std::max(Dmax, D[i]);
    kmax = std::max(kmax, maps[i].out_dim);
  }
  double poly = opts.poly_factor > 0.0 ? opts.poly_factor : Dmax * Dmax * kmax;
  long T = opts.T > 0 ? opts.T : static_cast<long>(std::ceil(poly / (eps * eps)));
  double cefp_eps = opts.cefp_eps > 0.0 ? opts.cefp_eps : 0.5 * eps;

  std::vector<LearnerState> st;
  for (int i = 0; i < n; ++i) {
    double G = (1.0 + 4.0 * game.bodies[i].outer_radius) * maps[i].norm_bound;
    double eta = D[i] / std::sqrt(static_cast<double>(T) * G * G);
    st.push_back(make_learner(game.bodies[i], maps[i], D[i], eta, 0.5 * eps,
                              cefp_eps));
  }
  std::vector<SupportDistribution> rounds;
  for (long t = 0; t < T; ++t) {
    std::vector<SupportDistribution> per_player;
    for (int i = 0; i < n; ++i) per_player.push_back(st[i].mu);
    SupportDistribution prod = product(per_player);
    std::vector<Mat> U(n);
    for (int i = 0; i < n; ++i)
      U[i] = expected_feature_gradient(game, i, prod, st[i].K, maps[i]);
    for (int i = 0; i < n; ++i) st[i] = shell_gd_step(std::move(st[i]), U[i]);
    rounds.push_back(std::move(prod));
  }
  FptasResult out;
  out.T = T;
  std::vector<double> unif(rounds.size(), 1.0 / static_cast<double>(rounds.size()));
  out.mu = mix(unif, rounds);
  VerifyOptions vo;
  vo.audit_budget = 0;
  vo.transform_bound = D;
  EquilibriumReport rep = verify_equilibrium(game, out.mu, maps, eps, vo);
  out.final_regret = rep.opt_benefit;
  return out;
}

}  // namespace ceq
