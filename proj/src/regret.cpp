#include "ceq/regret.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

namespace ceq {

bool ShellSet::contains(const Vec& k, double slack) const {
  if (k.size() != dim()) throw UsageError("ShellSet::contains: dimension mismatch");
  if (k.norm() > radius + slack) return false;
  for (const auto& hs : cuts)
    if (!hs.contains(k, slack)) return false;
  return true;
}

namespace {

struct FoundTransform {
  Mat K;
  SupportDistribution mu;
  FixedPointResult detail;
};

// Direct test of a single candidate: in the shell and CEFP-certified.
std::optional<FoundTransform> probe_transform(const ShellSet& shell,
                                              const ConvexBody& body,
                                              const FeatureMap& m,
                                              const Mat& K, double cefp_eps,
                                              std::vector<Halfspace>* cuts_out) {
  if (!shell.contains(flatten_rowmajor(K))) return std::nullopt;
  LinearTransform t{K, m};
  FixedPointResult r = cefp_fptas(t.as_point_map(), body, cefp_eps, body.start);
  if (r.is_certificate())
    return FoundTransform{K, *r.certificate, std::move(r)};
  if (cuts_out)
    cuts_out->push_back(endomorphism_cut(body, t, *r.not_endomorphism));
  return std::nullopt;
}

}  // namespace

ShellEllipsoidResult shell_ellipsoid(const ShellSet& shell,
                                     const ConvexBody& body,
                                     const FeatureMap& m, const Mat& target,
                                     double q, double cefp_eps,
                                     double vol_radius) {
  if (q < 0.0 || cefp_eps <= 0.0 || vol_radius <= 0.0)
    throw UsageError("shell_ellipsoid: bad arguments");
  ShellEllipsoidResult out;
  const int dim = shell.dim();
  Vec tflat = flatten_rowmajor(target);
  double threshold = dim * std::log(vol_radius);
  if (q == 0.0 || dim * std::log(q) <= threshold) {
    // Degenerate search region: only the target itself is checked.
    auto hit = probe_transform(shell, body, m, target, cefp_eps, &out.new_cuts);
    ++out.iterations;
    if (hit) {
      out.K = hit->K;
      out.mu = hit->mu;
      out.cefp_detail = std::move(hit->detail);
    }
    return out;
  }
  auto cutter = [&](const Vec& z) -> std::variant<FoundTransform, CutRecord> {
    double n = z.norm();
    if (n > shell.radius + kBoundarySlack) {
      CutRecord c;
      c.hs = Halfspace{z / n, shell.radius};
      return c;
    }
    for (const auto& hs : shell.cuts)
      if (!hs.contains(z, kBoundarySlack)) {
        CutRecord c;
        c.hs = hs;
        return c;
      }
    Vec off = z - tflat;
    double dn = off.norm();
    if (dn > q + kBoundarySlack) {
      CutRecord c;
      c.hs = Halfspace{off / dn, off.dot(tflat) / dn + q};
      return c;
    }
    Mat K = unflatten_rowmajor(z, shell.rows, shell.cols);
    LinearTransform t{K, m};
    FixedPointResult r = cefp_fptas(t.as_point_map(), body, cefp_eps, body.start);
    if (r.is_certificate())
      return FoundTransform{K, *r.certificate, std::move(r)};
    CutRecord c;
    c.kind = CutKind::Endomorphism;
    c.hs = endomorphism_cut(body, t, *r.not_endomorphism);
    c.witness_point = *r.not_endomorphism;
    return c;
  };
  // stop_on_thin: once the residual sliver of shell ∩ B_q(target) has
  // near-zero width, the radius is rejected (the sweep resolution far
  // exceeds the sliver's thickness, so this cannot flip a projection).
  auto run = ellipsoid_feasibility<FoundTransform>(
      EllipsoidState::ball(tflat, q),
      std::function<std::variant<FoundTransform, CutRecord>(const Vec&)>(cutter),
      threshold, tflat.norm() + q + 1.0, -1, true);
  out.iterations = run.iterations;
  for (auto& c : run.cuts)
    if (c.kind == CutKind::Endomorphism) out.new_cuts.push_back(c.hs);
  if (run.accepted()) {
    out.K = run.payload->K;
    out.mu = std::move(run.payload->mu);
    out.cefp_detail = std::move(run.payload->detail);
  }
  return out;
}

ShellProjection shell_project(ShellSet shell, const ConvexBody& body,
                              const FeatureMap& m, const Mat& target,
                              double eps, double cefp_eps) {
  const double D = shell.radius;
  Vec tflat = flatten_rowmajor(target);
  if (tflat.norm() > 2.0 * D + kBoundarySlack)
    throw UsageError("shell_project: target outside B_2D");
  const double delta = eps / (4.0 * D);
  const double vol_radius = eps / (16.0 * D * std::max(1, m.out_dim));
  ShellProjection out;
  long added = 0;
  auto attempt = [&](double q) -> std::optional<ShellEllipsoidResult> {
    ShellEllipsoidResult r = shell_ellipsoid(shell, body, m, target, q,
                                             cefp_eps, vol_radius);
    for (auto& hs : r.new_cuts) {
      shell.cuts.push_back(hs);
      ++added;
    }
    if (r.found()) return r;
    return std::nullopt;
  };
  // sweep
  double q_lo = 0.0, q_hi = -1.0;
  std::optional<ShellEllipsoidResult> best;
  for (double q = 0.0; q <= 2.0 * D + delta; q = q == 0.0 ? delta : q + delta) {
    if (auto r = attempt(q)) {
      best = std::move(r);
      q_hi = q;
      break;
    }
    q_lo = q;
  }
  if (!best)
    throw ContractViolation("shell_project: radius sweep exhausted without a hit");
  // bisection refinement between the last rejected and first accepted radii
  const double width = eps * eps / (8.0 * D);
  while (q_hi - q_lo > width) {
    double mid = 0.5 * (q_lo + q_hi);
    if (auto r = attempt(mid)) {
      best = std::move(r);
      q_hi = mid;
    } else {
      q_lo = mid;
    }
  }
  // confirm against the final (possibly further cut) shell; cuts added after
  // the recorded hit could in principle exclude it
  for (int guard = 0;; ++guard) {
    if (auto r = attempt(q_hi)) {
      best = std::move(r);
      break;
    }
    q_hi += delta;
    if (q_hi > 2.0 * D + delta || guard > static_cast<int>(8.0 * D / delta) + 8)
      throw ContractViolation("shell_project: confirmation loop exhausted");
  }
  out.shell = std::move(shell);
  out.K = *best->K;
  out.mu = std::move(*best->mu);
  out.radius = q_hi;
  out.cuts_added = added;
  return out;
}

namespace {

void refresh_orbit(LearnerState& s) {
  LinearTransform t{s.K, s.m};
  FixedPointResult r = cefp_fptas(t.as_point_map(), s.body, s.cefp_eps,
                                  s.body.start);
  if (!r.is_certificate())
    throw ContractViolation("learner: projected transform lost its fixed-point orbit");
  s.mu = *r.certificate;
  s.orbit_start = s.body.start;
  s.orbit_end = *r.final_iterate;
  s.orbit_length = r.iterations;
}

}  // namespace

LearnerState make_learner(const ConvexBody& body, const FeatureMap& m,
                          double D, double eta, double proj_eps,
                          double cefp_eps) {
  if (D <= 0.0 || eta <= 0.0 || proj_eps <= 0.0 || cefp_eps <= 0.0)
    throw UsageError("make_learner: bad arguments");
  LearnerState s;
  s.body = body;
  s.m = m;
  s.shell = ShellSet{body.dim, m.out_dim, D, {}};
  s.K = static_cast<int>(m.linear_index.size()) == m.in_dim
            ? identity_transform_matrix(m)
            : Mat::Zero(body.dim, m.out_dim);
  s.eta = eta;
  s.proj_eps = proj_eps;
  s.cefp_eps = cefp_eps;
  refresh_orbit(s);
  return s;
}

LearnerState shell_gd_step(LearnerState state, const Mat& U) {
  if (!U.allFinite()) throw UsageError("shell_gd_step: non-finite gradient");
  Mat target = state.K + state.eta * U;
  ShellProjection p = shell_project(std::move(state.shell), state.body,
                                    state.m, target, state.proj_eps,
                                    state.cefp_eps);
  state.shell = std::move(p.shell);
  state.K = p.K;
  refresh_orbit(state);
  ++state.round;
  return state;
}

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

// Comparator search region: D-ball intersected with the final shell cuts
// and with endomorphism on a capped, deterministically subsampled atom set.
ConvexBody comparator_body(const ShellSet& shell, const ConvexBody& body,
                           const FeatureMap& m, std::vector<Vec> atoms) {
  ConvexBody kb;
  kb.dim = shell.dim();
  kb.outer_radius = shell.radius;
  kb.inner_radius = std::min(shell.radius, body.inner_radius / m.norm_bound);
  kb.start = Vec::Zero(kb.dim);
  auto feats = std::make_shared<std::vector<Vec>>();
  for (const Vec& x : atoms) feats->push_back(m.eval(x));
  ShellSet sh = shell;
  ConvexBody base = body;
  int rows = shell.rows, cols = shell.cols;
  kb.separation = [sh, base, feats, rows, cols](const Vec& z) -> SeparationResult {
    double n = z.norm();
    if (n > sh.radius + kBoundarySlack) return Halfspace{z / n, sh.radius};
    for (const auto& hs : sh.cuts)
      if (!hs.contains(z, kBoundarySlack)) return hs;
    Mat K = unflatten_rowmajor(z, rows, cols);
    for (const Vec& f : *feats) {
      auto sep = base.separate(K * f);
      if (sep) return Halfspace{flatten_rowmajor(Mat(sep->a * f.transpose())), sep->b};
    }
    return std::nullopt;
  };
  return kb;
}

}  // namespace

RegretTrace run_regret(const ConvexBody& body, const FeatureMap& m,
                       const std::function<UtilityOracle(long)>& stream,
                       long T, double eps, const RegretOptions& opts) {
  if (T < 1 || eps <= 0.0) throw UsageError("run_regret: bad arguments");
  const int kp = m.out_dim;
  const double D = opts.D > 0.0 ? opts.D : default_transform_bound(m, body);
  const double gbound =
      opts.grad_bound > 0.0 ? opts.grad_bound : 1.0 + 4.0 * body.outer_radius;
  const double Gbar = gbound * m.norm_bound;
  const double eta = opts.eta > 0.0 ? opts.eta : D / std::sqrt(T * Gbar * Gbar);
  const double cefp_eps =
      opts.cefp_eps > 0.0
          ? opts.cefp_eps
          : std::min(eps, 1.0 / (kp * std::sqrt(static_cast<double>(T))));
  const double proj_eps = opts.proj_eps > 0.0 ? opts.proj_eps : eps;

  LearnerState st = make_learner(body, m, D, eta, proj_eps, cefp_eps);
  RegretTrace tr;
  tr.eta = eta;
  tr.D = D;
  std::vector<SupportDistribution> mus;
  std::vector<UtilityOracle> utils;
  std::vector<Mat> Ks;
  std::vector<double> residuals, utilities;
  std::vector<long> cut_counts;
  double usq_sum = 0.0;
  for (long t = 0; t < T; ++t) {
    UtilityOracle u = stream(t);
    utils.push_back(u);
    mus.push_back(st.mu);
    Ks.push_back(st.K);
    utilities.push_back(st.mu.expect_scalar(u.value));
    residuals.push_back((u.value(st.orbit_end) - u.value(st.orbit_start)) /
                        static_cast<double>(st.orbit_length));
    Mat U = Mat::Zero(body.dim, kp);
    for (int j = 0; j < st.mu.size(); ++j) {
      const Vec& x = st.mu.atoms()[j];
      Vec f = m.eval(x);
      U += st.mu.weights()[j] * u.gradient(st.K * f) * f.transpose();
    }
    tr.U_history.push_back(U);
    usq_sum += U.squaredNorm();
    cut_counts.push_back(static_cast<long>(st.shell.cuts.size()));
    st = shell_gd_step(std::move(st), U);
  }

  // hindsight comparators
  std::map<Vec, int, LexLess> seen;
  std::vector<Vec> distinct;
  for (const auto& mu : mus)
    for (const Vec& a : mu.atoms())
      if (seen.emplace(a, 1).second) distinct.push_back(a);
  std::vector<Vec> endo_atoms;
  int stride = std::max<std::size_t>(1, distinct.size() / std::max(1, opts.endo_atom_cap));
  for (std::size_t j = 0; j < distinct.size(); j += stride)
    endo_atoms.push_back(distinct[j]);
  ConvexBody kbody = comparator_body(st.shell, body, m, endo_atoms);

  auto benefit_of = [&](const Mat& K, long t) {
    double v = 0.0;
    for (int j = 0; j < mus[t].size(); ++j) {
      const Vec& x = mus[t].atoms()[j];
      v += mus[t].weights()[j] * (utils[t].value(K * m.eval(x)) - utils[t].value(x));
    }
    return v;
  };

  if (opts.linear_utilities) {
    // sum_t E u_t(K m(x)) is linear in K; one exact linear argmax suffices
    Mat W = Mat::Zero(body.dim, kp);
    Vec cbar = Vec::Zero(body.dim);
    for (long t = 0; t < T; ++t) {
      Vec c = utils[t].gradient(body.start);
      cbar += c / static_cast<double>(T);
      for (int j = 0; j < mus[t].size(); ++j)
        W += mus[t].weights()[j] / static_cast<double>(T) * c *
             m.eval(mus[t].atoms()[j]).transpose();
    }
    tr.best_K = unflatten_rowmajor(
        linear_argmax(kbody, flatten_rowmajor(W), 1e-7 * (1.0 + W.norm())),
        body.dim, kp);
    Vec xstar = linear_argmax(body, cbar, 1e-9 * (1.0 + cbar.norm()));
    tr.best_const_K = Mat::Zero(body.dim, kp);
    if (m.constant_index < 0)
      throw UsageError("run_regret: feature map has no constant coordinate");
    tr.best_const_K.col(m.constant_index) = xstar;
  } else {
    ConcaveOracle f;
    f.value = [&](const Vec& z) {
      Mat K = unflatten_rowmajor(z, body.dim, kp);
      double v = 0.0;
      for (long t = 0; t < T; ++t) v += benefit_of(K, t);
      return v / static_cast<double>(T);
    };
    f.gradient = [&](const Vec& z) {
      Mat K = unflatten_rowmajor(z, body.dim, kp);
      Mat U = Mat::Zero(body.dim, kp);
      for (long t = 0; t < T; ++t)
        for (int j = 0; j < mus[t].size(); ++j) {
          Vec ft = m.eval(mus[t].atoms()[j]);
          U += mus[t].weights()[j] / static_cast<double>(T) *
               utils[t].gradient(K * ft) * ft.transpose();
        }
      return flatten_rowmajor(U);
    };
    f.lipschitz = Gbar;
    f.smoothness = 4.0 * m.norm_bound * m.norm_bound;
    tr.best_K = unflatten_rowmajor(maximize_concave(kbody, f, 0.1 * eps).x,
                                   body.dim, kp);
    ConcaveOracle g;
    g.value = [&](const Vec& x) {
      double v = 0.0;
      for (long t = 0; t < T; ++t) v += utils[t].value(x);
      return v / static_cast<double>(T);
    };
    g.gradient = [&](const Vec& x) {
      Vec s = Vec::Zero(body.dim);
      for (long t = 0; t < T; ++t) s += utils[t].gradient(x);
      return Vec(s / static_cast<double>(T));
    };
    g.lipschitz = gbound;
    g.smoothness = 4.0;
    Vec xstar = maximize_concave(body, g, 0.1 * eps).x;
    if (m.constant_index < 0)
      throw UsageError("run_regret: feature map has no constant coordinate");
    tr.best_const_K = Mat::Zero(body.dim, kp);
    tr.best_const_K.col(m.constant_index) = xstar;
  }

  double cum_best = 0.0, cum_const = 0.0, cum_res = 0.0;
  for (long t = 0; t < T; ++t) {
    cum_best += benefit_of(tr.best_K, t);
    cum_const += benefit_of(tr.best_const_K, t);
    cum_res += residuals[t];
    tr.linearized_regret +=
        tr.U_history[t].cwiseProduct(tr.best_K - Ks[t]).sum() /
        static_cast<double>(T);
    RegretRow row;
    row.round = t + 1;
    row.utility = utilities[t];
    row.regret_vs_bestK = cum_best / static_cast<double>(t + 1);
    row.regret_vs_identity = cum_const / static_cast<double>(t + 1);
    row.cefp_residual = residuals[t];
    row.shell_cuts = cut_counts[t];
    tr.rows.push_back(row);
  }
  tr.regret_best = cum_best / static_cast<double>(T);
  tr.regret_external = cum_const / static_cast<double>(T);
  tr.residual_sum = cum_res;
  tr.gd_bound = (D * D / (2.0 * eta) + eta * usq_sum) / static_cast<double>(T);
  return tr;
}

}  // namespace ceq
