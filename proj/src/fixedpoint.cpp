#include "ceq/fixedpoint.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

namespace ceq {

int qefp_dual_dim(int d) { return d + d * (d + 1) / 2; }

static const double kSqrt2 = std::sqrt(2.0);

Vec pack_dual(const Vec& b, const Mat& A) {
  const int d = static_cast<int>(b.size());
  if (A.rows() != d || A.cols() != d)
    throw UsageError("pack_dual: dimension mismatch");
  Vec z(qefp_dual_dim(d));
  z.head(d) = b;
  int k = d;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i)
      z[k++] = i == j ? A(i, j) : kSqrt2 * A(i, j);
  return z;
}

QefpDual unpack_dual(const Vec& z, int d) {
  if (z.size() != qefp_dual_dim(d))
    throw UsageError("unpack_dual: dimension mismatch");
  QefpDual out;
  out.b = z.head(d);
  out.A = Mat(d, d);
  int k = d;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      double v = z[k++];
      if (i == j) {
        out.A(i, j) = v;
      } else {
        out.A(i, j) = v / kSqrt2;
        out.A(j, i) = v / kSqrt2;
      }
    }
  return out;
}

static Mat sym(const Mat& M) { return 0.5 * (M + M.transpose()); }

// Exact certificate residual of mu = sum lambda_j delta_{x_j}:
//   g = |sum lambda w| + 2 * (negative part of sym(sum lambda x w')),
// which equals the supremum of E<b - Ax, w> over the dual box.
static double residual_g(const std::vector<Vec>& xs, const std::vector<Vec>& ws,
                         const std::vector<double>& lam, bool with_psd,
                         double* efp_out = nullptr, double* psd_out = nullptr) {
  const int d = static_cast<int>(xs.empty() ? ws[0].size() : xs[0].size());
  Vec ew = Vec::Zero(d);
  Mat m = Mat::Zero(d, d);
  for (std::size_t j = 0; j < ws.size(); ++j) {
    ew += lam[j] * ws[j];
    if (with_psd) m += lam[j] * (xs[j] * ws[j].transpose());
  }
  double efp = ew.norm();
  double psd = 0.0;
  if (with_psd) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
    for (int i = 0; i < d; ++i)
      psd += 2.0 * std::max(0.0, -es.eigenvalues()[i]);
  }
  if (efp_out) *efp_out = efp;
  if (psd_out) *psd_out = psd;
  return efp + psd;
}

static std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0) { rho = static_cast<int>(i + 1); theta = t; }
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

// Projected subgradient (Polyak step toward the known target 0) on the
// simplex; returns the best weights seen if their residual clears eps.
static std::optional<std::vector<double>> minimize_residual(
    const std::vector<Vec>& xs, const std::vector<Vec>& ws, bool with_psd,
    double eps, long budget, std::vector<double>* warm) {
  const std::size_t s = ws.size();
  const int d = static_cast<int>(ws[0].size());
  std::vector<double> lam(s, 1.0 / static_cast<double>(s));
  if (warm && warm->size() == s) lam = *warm;
  std::vector<double> best = lam;
  double best_g = residual_g(xs, ws, lam, with_psd);
  for (long t = 0; t < budget && best_g > eps; ++t) {
    Vec ew = Vec::Zero(d);
    Mat m = Mat::Zero(d, d);
    for (std::size_t j = 0; j < s; ++j) {
      ew += lam[j] * ws[j];
      if (with_psd) m += lam[j] * (xs[j] * ws[j].transpose());
    }
    double efp = ew.norm();
    double psd = 0.0;
    std::vector<double> sub(s, 0.0);
    if (efp > 1e-15) {
      Vec u = ew / efp;
      for (std::size_t j = 0; j < s; ++j) sub[j] += u.dot(ws[j]);
    }
    if (with_psd) {
      Eigen::SelfAdjointEigenSolver<Mat> es(sym(m));
      for (int i = 0; i < d; ++i) {
        double lv = es.eigenvalues()[i];
        if (lv >= 0) continue;
        psd += -2.0 * lv;
        Vec v = es.eigenvectors().col(i);
        for (std::size_t j = 0; j < s; ++j)
          sub[j] -= 2.0 * v.dot(xs[j]) * v.dot(ws[j]);
      }
    }
    double g = efp + psd;
    if (g < best_g) { best_g = g; best = lam; }
    double nrm2 = 0.0;
    for (double x : sub) nrm2 += x * x;
    if (nrm2 < 1e-30) break;  // stationary: g is as small as it gets here
    double step = g / nrm2;
    for (std::size_t j = 0; j < s; ++j) lam[j] -= step * sub[j];
    lam = project_simplex(std::move(lam));
  }
  if (warm) *warm = best;
  if (best_g <= eps) return best;
  return std::nullopt;
}

static SupportDistribution weights_to_distribution(
    const std::vector<Vec>& xs, std::vector<double> lam) {
  std::vector<Vec> atoms;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (lam[j] > 1e-14) {
      atoms.push_back(xs[j]);
      w.push_back(lam[j]);
      total += lam[j];
    }
  for (double& x : w) x /= total;
  return SupportDistribution(std::move(atoms), std::move(w));
}

namespace {

// Collects hope-cut witnesses, merging exact duplicates.
struct WitnessPool {
  std::vector<Vec> xs, ws;
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<double> warm;

  void add(const Vec& x, const Vec& w) {
    std::vector<double> key(x.data(), x.data() + x.size());
    if (seen.count(key)) return;
    seen.emplace(std::move(key), xs.size());
    xs.push_back(x);
    ws.push_back(w);
  }
};

}  // namespace

static FixedPointResult certificate_result(const std::vector<Vec>& xs,
                                           std::vector<double> lam,
                                           bool with_psd,
                                           const std::vector<Vec>& ws) {
  FixedPointResult out;
  double efp = 0.0, psd = 0.0;
  residual_g(xs, ws, lam, with_psd, &efp, &psd);
  out.efp_norm = efp;
  out.psd_term = psd;
  out.certificate = weights_to_distribution(xs, std::move(lam));
  return out;
}

static FixedPointResult point_certificate(const Vec& x, const Vec& w,
                                          bool with_psd) {
  return certificate_result({x}, {1.0}, with_psd, {w});
}

FixedPointResult cefp_fptas(const PointMap& phi, const ConvexBody& body,
                            double eps, const Vec& x0) {
  if (!(eps > 0.0) || eps > 1.0)
    throw UsageError("cefp_fptas: eps must lie in (0, 1]");
  if (!body.contains(x0)) throw UsageError("cefp_fptas: x0 outside the body");
  const long M = static_cast<long>(std::ceil(1.0 / eps));
  std::vector<Vec> orbit;
  orbit.reserve(M);
  Vec x = x0;
  for (long j = 0; j < M; ++j) {
    orbit.push_back(x);
    Vec next = phi.eval(x);
    if (!body.contains(next)) {
      FixedPointResult out;
      out.not_endomorphism = x;
      out.iterations = j + 1;
      return out;
    }
    x = std::move(next);
  }
  FixedPointResult out;
  out.certificate = SupportDistribution::uniform(orbit);
  out.final_iterate = x;
  out.iterations = M;
  double efp, psd;
  std::vector<double> unif(orbit.size(), 1.0 / static_cast<double>(orbit.size()));
  std::vector<Vec> ws;
  for (const Vec& p : orbit) ws.push_back(phi.eval(p) - p);
  residual_g(orbit, ws, unif, true, &efp, &psd);
  out.efp_norm = efp;
  out.psd_term = psd;
  return out;
}

FixedPointResult efp_solve(const PointMap& phi, const ConvexBody& body,
                           double eps) {
  if (!(eps > 0.0)) throw UsageError("efp_solve: eps must be positive");
  const int d = body.dim;
  const double R = body.outer_radius;
  FixedPointResult out;
  WitnessPool pool;

  auto probe = [&](const Vec& x) -> std::optional<FixedPointResult> {
    Vec fx = phi.eval(x);
    if (!body.contains(fx)) {
      FixedPointResult r;
      r.not_endomorphism = x;
      return r;
    }
    Vec w = fx - x;
    if (w.norm() <= eps) return point_certificate(x, w, false);
    pool.add(x, w);
    return std::nullopt;
  };
  if (auto r = probe(body.start)) { r->iterations = out.iterations; return *r; }

  EllipsoidState ell = EllipsoidState::ball(Vec::Zero(d), 1.0);
  const double rho = 0.25 * eps / std::max(1.0, 2.0 * R);
  const double floor = d * std::log(std::min(rho, 0.25));
  long next_extract = 2;
  while (ell.log_volume() > floor) {
    ++out.iterations;
    Vec v = ell.center();
    if (v.norm() > 1.0) {
      ++out.feasibility_cuts;
      ell.central_cut(v / v.norm());
      ell.clamp_to_slab(1.0);
      continue;
    }
    Vec xhat = linear_argmax(body, v, 0.5 * eps);
    Vec fx = phi.eval(xhat);
    if (!body.contains(fx)) {
      out.not_endomorphism = xhat;
      return out;
    }
    Vec w = fx - xhat;
    if (w.norm() <= eps) {
      auto r = point_certificate(xhat, w, false);
      r.iterations = out.iterations;
      r.feasibility_cuts = out.feasibility_cuts;
      r.hope_cuts = out.hope_cuts;
      return r;
    }
    pool.add(xhat, w);
    ++out.hope_cuts;
    ell.central_cut(-w);
    ell.clamp_to_slab(1.0);
    if (static_cast<long>(pool.xs.size()) >= next_extract) {
      next_extract = 2 * next_extract;
      if (auto lam = minimize_residual(pool.xs, pool.ws, false, eps, 2000,
                                       &pool.warm)) {
        auto r = certificate_result(pool.xs, std::move(*lam), false, pool.ws);
        r.iterations = out.iterations;
        r.feasibility_cuts = out.feasibility_cuts;
        r.hope_cuts = out.hope_cuts;
        return r;
      }
    }
  }
  auto lam = minimize_residual(pool.xs, pool.ws, false, eps, 50000, &pool.warm);
  if (!lam)
    throw NumericError("efp_solve: dual volume exhausted but no certificate");
  auto r = certificate_result(pool.xs, std::move(*lam), false, pool.ws);
  r.iterations = out.iterations;
  r.feasibility_cuts = out.feasibility_cuts;
  r.hope_cuts = out.hope_cuts;
  return r;
}

FixedPointResult qefp_solve(const PointMap& phi, const ConvexBody& body,
                            double eps) {
  if (!(eps > 0.0)) throw UsageError("qefp_solve: eps must be positive");
  const int d = body.dim;
  const double R = body.outer_radius;
  const int D = qefp_dual_dim(d);
  FixedPointResult out;
  WitnessPool pool;
  // g(delta_x) <= |w| * (1 + 2R): a near-fixed point certifies on its own
  const double point_scale = 1.0 + 2.0 * R;

  auto probe = [&](const Vec& x) -> std::optional<FixedPointResult> {
    Vec fx = phi.eval(x);
    if (!body.contains(fx)) {
      FixedPointResult r;
      r.not_endomorphism = x;
      return r;
    }
    Vec w = fx - x;
    if (w.norm() * point_scale <= eps) return point_certificate(x, w, true);
    pool.add(x, w);
    return std::nullopt;
  };
  if (auto r = probe(body.start)) return *r;

  EllipsoidState ell(pack_dual(Vec::Zero(d), Mat::Identity(d, d)),
                     (d + 1.0) * Mat::Identity(D, D));
  const double clamp_r = std::sqrt(1.0 + 4.0 * d) + 1.0;
  // a feasible dual would keep a ball of this radius alive
  const double rho = 0.25 * eps / (1.0 + 2.0 * R + 2.0 * R * R);
  const double floor = D * std::log(std::min(rho, 0.25));
  long next_extract = 2;

  while (ell.log_volume() > floor) {
    ++out.iterations;
    QefpDual zc = unpack_dual(ell.center(), d);
    if (zc.b.norm() > 1.0) {
      ++out.feasibility_cuts;
      ell.central_cut(pack_dual(zc.b / zc.b.norm(), Mat::Zero(d, d)));
      ell.clamp_to_slab(clamp_r);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(zc.A);
    if (es.eigenvalues()[0] < 0.0) {
      ++out.feasibility_cuts;
      Vec v = es.eigenvectors().col(0);
      ell.central_cut(pack_dual(Vec::Zero(d), -(v * v.transpose())));
      ell.clamp_to_slab(clamp_r);
      continue;
    }
    if (es.eigenvalues()[d - 1] > 2.0) {
      ++out.feasibility_cuts;
      Vec v = es.eigenvectors().col(d - 1);
      ell.central_cut(pack_dual(Vec::Zero(d), v * v.transpose()));
      ell.clamp_to_slab(clamp_r);
      continue;
    }
    // main cut through the approximate maximizer of u = b'x - x'Ax/2
    ConcaveOracle u;
    u.value = [&zc](const Vec& x) {
      return zc.b.dot(x) - 0.5 * x.dot(zc.A * x);
    };
    u.gradient = [&zc](const Vec& x) -> Vec { return zc.b - zc.A * x; };
    u.lipschitz = 1.0 + 2.0 * R;
    u.smoothness = 2.0;
    auto mx = maximize_concave(body, u, 0.5 * eps);
    Vec fx = phi.eval(mx.x);
    if (!body.contains(fx)) {
      out.not_endomorphism = mx.x;
      return out;
    }
    Vec w = fx - mx.x;
    if (w.norm() * point_scale <= eps) {
      auto r = point_certificate(mx.x, w, true);
      r.iterations = out.iterations;
      r.feasibility_cuts = out.feasibility_cuts;
      r.hope_cuts = out.hope_cuts;
      return r;
    }
    double linc = zc.b.dot(w) - mx.x.dot(zc.A * w);
    if (linc > 0.5 * eps + 1e-9 * (1.0 + R))
      throw ContractViolation("qefp_solve: inner maximizer slack exceeded");
    pool.add(mx.x, w);
    ++out.hope_cuts;
    // lin(z) = <b,w> - <A, sym(x w')> is linear in z; keep lin(z) >= lin(zc)
    Vec q = pack_dual(w, -sym(mx.x * w.transpose()));
    ell.central_cut(-q);
    ell.clamp_to_slab(clamp_r);
    if (static_cast<long>(pool.xs.size()) >= next_extract) {
      next_extract = 2 * next_extract;
      if (auto lam = minimize_residual(pool.xs, pool.ws, true, eps, 2000,
                                       &pool.warm)) {
        auto r = certificate_result(pool.xs, std::move(*lam), true, pool.ws);
        r.iterations = out.iterations;
        r.feasibility_cuts = out.feasibility_cuts;
        r.hope_cuts = out.hope_cuts;
        return r;
      }
    }
  }
  auto lam = minimize_residual(pool.xs, pool.ws, true, eps, 50000, &pool.warm);
  if (!lam)
    throw NumericError("qefp_solve: dual volume exhausted but no certificate");
  auto r = certificate_result(pool.xs, std::move(*lam), true, pool.ws);
  r.iterations = out.iterations;
  r.feasibility_cuts = out.feasibility_cuts;
  r.hope_cuts = out.hope_cuts;
  return r;
}

QefpResidual qefp_residual(const SupportDistribution& mu, const PointMap& phi,
                           const ConvexBody& body) {
  const int d = mu.dim();
  Vec ew = Vec::Zero(d);
  Mat m = Mat::Zero(d, d);
  double wx = 0.0;  // E <w, x>
  for (int j = 0; j < mu.size(); ++j) {
    const Vec& x = mu.atoms()[j];
    Vec w = phi.eval(x) - x;
    ew += mu.weights()[j] * w;
    m += mu.weights()[j] * (x * w.transpose());
    wx += mu.weights()[j] * w.dot(x);
  }
  QefpResidual out;
  out.efp_norm = ew.norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
  for (int i = 0; i < d; ++i)
    out.psd_term += 2.0 * std::max(0.0, -es.eigenvalues()[i]);
  double tol = 1e-12 + 1e-9 * ew.norm() * body.outer_radius;
  Vec v = linear_argmax(body, ew, tol);
  out.evi_residual = ew.dot(v) - wx;
  return out;
}

SupportDistribution qefp_certificate(const std::vector<CutRecord>& cuts,
                                     const PointMap& phi, double eps) {
  WitnessPool pool;
  for (const auto& c : cuts) {
    if (c.kind != CutKind::Hope) continue;
    if (!c.witness_point)
      throw UsageError("qefp_certificate: hope cut without a witness");
    Vec x = *c.witness_point;
    pool.add(x, phi.eval(x) - x);
  }
  if (pool.xs.empty())
    throw UsageError("qefp_certificate: no hope cuts supplied");
  auto lam = minimize_residual(pool.xs, pool.ws, true, eps, 50000, &pool.warm);
  if (!lam)
    throw NumericError("qefp_certificate: residual stuck above eps");
  return weights_to_distribution(pool.xs, std::move(*lam));
}

SupportDistribution mahalanobis_unkcontr(const PointMap& f,
                                         const ConvexBody& body, double gamma,
                                         double delta) {
  if (!(gamma > 0.0) || gamma >= 1.0)
    throw UsageError("mahalanobis_unkcontr: gamma must lie in (0, 1)");
  if (!(delta > 0.0))
    throw UsageError("mahalanobis_unkcontr: delta must be positive");
  // For the hidden A the dual pair (A x*, A)/s with s = max(1, |A x*|) lies
  // in the dual box, and the contraction inequality gives
  //   gamma/2 * E |x - x*|_A^2 <= s * eps, with s <= 2R.
  const double eps = delta * gamma / (4.0 * body.outer_radius);
  auto res = qefp_solve(f, body, eps);
  if (!res.is_certificate())
    throw ContractViolation(
        "mahalanobis_unkcontr: map left the body despite the promise");
  return *res.certificate;
}

Vec point_extract(const SupportDistribution& mu,
                  const std::function<SupportDistribution(double)>& refine,
                  double delta) {
  if (!(delta > 0.0)) throw UsageError("point_extract: delta must be positive");
  long s = mu.size();
  if (s == 1) return mu.top_atom();
  for (int round = 0; round < 10; ++round) {
    SupportDistribution refined = refine(delta / static_cast<double>(s));
    if (refined.size() <= s) return refined.top_atom();
    s = refined.size();
  }
  throw NumericError("point_extract: support size did not stabilize");
}

}  // namespace ceq
