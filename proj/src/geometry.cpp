#include "ceq/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace ceq {

SeparationResult ConvexBody::separate(const Vec& p) const {
  if (p.size() != dim)
    throw UsageError("separate: point dimension mismatch");
  if (!p.allFinite()) throw NumericError("separate: non-finite point");
  return separation(p);
}

ConvexBody make_ball(const Vec& center, double radius) {
  if (radius <= 0.0) throw UsageError("make_ball: radius must be positive");
  ConvexBody body;
  body.dim = static_cast<int>(center.size());
  body.inner_radius = radius - center.norm();
  body.outer_radius = radius + center.norm();
  body.start = center;
  body.separation = [center, radius](const Vec& p) -> SeparationResult {
    Vec diff = p - center;
    double n = diff.norm();
    if (n <= radius + kBoundarySlack) return std::nullopt;
    Halfspace hs;
    hs.a = diff / n;
    hs.b = hs.a.dot(center) + radius;
    return hs;
  };
  body.argmax_linear = [center, radius](const Vec& g) -> Vec {
    double n = g.norm();
    if (n == 0.0) return center;
    return center + (radius / n) * g;
  };
  return body;
}

ConvexBody make_box(const Vec& lo, const Vec& hi) {
  const int d = static_cast<int>(lo.size());
  if (hi.size() != d) throw UsageError("make_box: bound dimension mismatch");
  for (int i = 0; i < d; ++i)
    if (!(lo[i] < hi[i])) throw UsageError("make_box: need lo < hi per coordinate");
  ConvexBody body;
  body.dim = d;
  double inner = std::numeric_limits<double>::infinity();
  double outer_sq = 0.0;
  for (int i = 0; i < d; ++i) {
    inner = std::min(inner, std::min(hi[i], -lo[i]));
    outer_sq += std::pow(std::max(std::abs(lo[i]), std::abs(hi[i])), 2);
  }
  body.inner_radius = inner;
  body.outer_radius = std::sqrt(outer_sq);
  body.start = 0.5 * (lo + hi);
  body.separation = [lo, hi, d](const Vec& p) -> SeparationResult {
    int worst = -1;
    double worst_viol = kBoundarySlack;
    bool upper = false;
    for (int i = 0; i < d; ++i) {
      double over = p[i] - hi[i];
      double under = lo[i] - p[i];
      if (over > worst_viol) { worst_viol = over; worst = i; upper = true; }
      if (under > worst_viol) { worst_viol = under; worst = i; upper = false; }
    }
    if (worst < 0) return std::nullopt;
    Halfspace hs;
    hs.a = Vec::Zero(d);
    hs.a[worst] = upper ? 1.0 : -1.0;
    hs.b = upper ? hi[worst] : -lo[worst];
    return hs;
  };
  body.argmax_linear = [lo, hi, d](const Vec& g) -> Vec {
    Vec y(d);
    for (int i = 0; i < d; ++i)
      y[i] = g[i] > 0 ? hi[i] : (g[i] < 0 ? lo[i] : 0.5 * (lo[i] + hi[i]));
    return y;
  };
  return body;
}

ConvexBody make_simplex(int dim) {
  if (dim < 1) throw UsageError("make_simplex: dimension must be positive");
  const double g = 1.0 / (dim + 1);  // centroid coordinate before translation
  ConvexBody body;
  body.dim = dim;
  body.inner_radius = 1.0 / ((dim + 1) * std::sqrt(static_cast<double>(dim)));
  // distance from the centroid to a vertex e_i
  body.outer_radius = std::sqrt(static_cast<double>(dim) * dim + dim - 1.0) / (dim + 1);
  body.start = Vec::Zero(dim);
  body.separation = [dim, g](const Vec& y) -> SeparationResult {
    // underlying coordinates x = y + g*1 must satisfy x >= 0, sum x <= 1
    int worst = -1;
    double worst_viol = kBoundarySlack;
    for (int i = 0; i < dim; ++i) {
      double viol = -(y[i] + g);
      if (viol > worst_viol) { worst_viol = viol; worst = i; }
    }
    double sum_viol = (y.sum() + dim * g - 1.0) / std::sqrt(static_cast<double>(dim));
    if (sum_viol > worst_viol) {
      Halfspace hs;
      hs.a = Vec::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
      hs.b = (1.0 - dim * g) / std::sqrt(static_cast<double>(dim));
      return hs;
    }
    if (worst < 0) return std::nullopt;
    Halfspace hs;
    hs.a = Vec::Zero(dim);
    hs.a[worst] = -1.0;
    hs.b = g;
    return hs;
  };
  body.argmax_linear = [dim, g](const Vec& dir) -> Vec {
    // best vertex of the translated simplex: origin vertex or some e_i
    int best = -1;
    double best_val = 0.0;  // origin vertex contributes 0 before translation
    for (int i = 0; i < dim; ++i)
      if (dir[i] > best_val) { best_val = dir[i]; best = i; }
    Vec y = Vec::Constant(dim, -g);
    if (best >= 0) y[best] += 1.0;
    return y;
  };
  return body;
}

ConvexBody affine_image(const ConvexBody& base, const Mat& M, const Vec& offset) {
  if (M.rows() != base.dim || M.cols() != base.dim || offset.size() != base.dim)
    throw UsageError("affine_image: shape mismatch");
  Eigen::JacobiSVD<Mat> svd(M);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (!(smin > 1e-12 * smax) || smax == 0.0)
    throw NumericError("affine_image: map is numerically singular");
  Mat Minv = M.inverse();
  ConvexBody body;
  body.dim = base.dim;
  body.inner_radius = smin * base.inner_radius - offset.norm();
  body.outer_radius = smax * base.outer_radius + offset.norm();
  body.start = M * base.start + offset;
  auto inner_sep = base.separation;
  body.separation = [inner_sep, Minv, offset](const Vec& p) -> SeparationResult {
    Vec q = Minv * (p - offset);
    auto cut = inner_sep(q);
    if (!cut) return std::nullopt;
    Halfspace hs;
    hs.a = Minv.transpose() * cut->a;
    hs.b = cut->b + hs.a.dot(offset);
    double n = hs.a.norm();
    hs.a /= n;
    hs.b /= n;
    return hs;
  };
  if (base.argmax_linear) {
    auto inner_arg = base.argmax_linear;
    body.argmax_linear = [inner_arg, M, offset](const Vec& g) -> Vec {
      return M * inner_arg(M.transpose() * g) + offset;
    };
  }
  return body;
}

EllipsoidState::EllipsoidState(Vec center, Mat shape)
    : center_(std::move(center)), shape_(std::move(shape)) {
  if (shape_.rows() != center_.size() || shape_.cols() != center_.size())
    throw UsageError("EllipsoidState: shape/center dimension mismatch");
  shape_ = (0.5 * (shape_ + shape_.transpose())).eval();
  Eigen::LLT<Mat> llt(shape_);
  if (llt.info() != Eigen::Success)
    throw NumericError("EllipsoidState: shape is not positive definite");
  log_det_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

EllipsoidState EllipsoidState::ball(const Vec& center, double radius) {
  const int d = static_cast<int>(center.size());
  return EllipsoidState(center, radius * radius * Mat::Identity(d, d));
}

double central_cut_log_factor(int d) {
  if (d == 1) return std::log(0.5);
  return 0.5 * (d * std::log(d * d / (d * d - 1.0)) +
                std::log((d - 1.0) / (d + 1.0)));
}

void EllipsoidState::central_cut(const Vec& a) {
  const int d = dim();
  if (a.size() != d) throw UsageError("central_cut: normal dimension mismatch");
  Vec Pa = shape_ * a;
  double s = a.dot(Pa);
  if (!(s > 0.0) || !std::isfinite(s))
    throw NumericError("central_cut: degenerate cut direction");
  double sq = std::sqrt(s);
  if (d == 1) {
    // keep the half-interval on the a'x <= a'c side
    double half = std::sqrt(shape_(0, 0));
    center_[0] -= (a[0] > 0 ? 0.5 : -0.5) * half;
    shape_(0, 0) = 0.25 * shape_(0, 0);
    log_det_ += std::log(0.25);
  } else {
    center_ -= (1.0 / (d + 1)) * Pa / sq;
    shape_ = (d * d / (d * d - 1.0)) *
             (shape_ - (2.0 / (d + 1)) * (Pa * Pa.transpose()) / s);
    shape_ = (0.5 * (shape_ + shape_.transpose())).eval();
    log_det_ += d * std::log(d * d / (d * d - 1.0)) +
                std::log((d - 1.0) / (d + 1.0));
  }
  if (!center_.allFinite() || !shape_.allFinite())
    throw NumericError("central_cut: non-finite ellipsoid update");
  check_conditioning();
}

void EllipsoidState::clamp_to_slab(double halfwidth) {
  const int d = dim();
  if (!(halfwidth > 0.0)) throw UsageError("clamp_to_slab: halfwidth must be positive");
  for (int guard = 0; guard <= 4 * d; ++guard) {
    Eigen::SelfAdjointEigenSolver<Mat> es(shape_);
    if (es.info() != Eigen::Success)
      throw NumericError("clamp_to_slab: eigendecomposition failed");
    const int top = d - 1;  // eigenvalues ascending
    double lam_top = es.eigenvalues()[top];
    Vec v = es.eigenvectors().col(top);
    // in the ellipsoid's own frame the slab allows |y_v| <= W
    double W = halfwidth + std::abs(v.dot(center_));
    if (lam_top <= 4.0 * d * W * W) return;
    if (guard == 4 * d)
      throw NumericError("clamp_to_slab: did not stabilize");
    if (d == 1) {
      shape_(0, 0) = W * W;
      log_det_ = std::log(W * W);
      continue;
    }
    // minimum-volume axis-aligned ellipsoid containing E intersected with
    // the slab: clamp the top axis to d*W^2, inflate the rest slightly
    double u = W * W / lam_top;
    double beta = d * (1.0 - u) / (d - 1.0);
    Vec lam = beta * es.eigenvalues();
    lam[top] = d * W * W;
    shape_ = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    shape_ = (0.5 * (shape_ + shape_.transpose())).eval();
    log_det_ = lam.array().log().sum();
  }
}

double EllipsoidState::conditioning_ratio() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(shape_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
}

void EllipsoidState::check_conditioning() const {
  if (!(conditioning_ratio() > 1e-12))
    throw NumericError("ellipsoid: shape matrix lost positive definiteness");
}

Vec linear_argmax(const ConvexBody& body, const Vec& g, double eps) {
  if (body.argmax_linear) return body.argmax_linear(g);
  if (eps <= 0.0) throw UsageError("linear_argmax: eps must be positive");
  if (!(body.inner_radius > 0.0))
    throw UsageError("linear_argmax: body needs a positive inner radius");
  const int d = body.dim;
  const double R = body.outer_radius;
  const double gnorm = g.norm();
  if (gnorm * 2.0 * R <= eps) return body.start;
  const double tau = std::min(1.0, eps / (2.0 * gnorm * R));
  const double log_vol_stop = d * std::log(tau * body.inner_radius);

  EllipsoidState ell = EllipsoidState::ball(Vec::Zero(d), R);
  Vec best = body.start;
  double best_val = g.dot(best);
  double ub = std::numeric_limits<double>::infinity();
  long max_iters =
      static_cast<long>((ell.log_volume() - log_vol_stop) / -central_cut_log_factor(d)) + 16;
  for (long it = 0; ell.log_volume() > log_vol_stop; ++it) {
    if (it >= max_iters)
      throw NumericError("linear_argmax: iteration budget exceeded");
    const Vec c = ell.center();
    auto cut = body.separate(c);
    if (!cut) {
      double val = g.dot(c);
      if (val > best_val) { best = c; best_val = val; }
      // the optimum stays inside the ellipsoid, bounding sup from above
      ub = std::min(ub, val + std::sqrt(g.dot(ell.shape() * g)));
      if (ub - best_val <= eps) return best;
      cut = Halfspace{-g / gnorm, (-g / gnorm).dot(c)};
    }
    ell.central_cut(cut->a);
    ell.clamp_to_slab(R);
    // thin feasible slivers exhaust conditioning before the volume floor;
    // stop with the incumbent rather than push into the numeric failure
    if (ell.conditioning_ratio() < 1e-10) break;
  }
  return best;
}

MaximizeResult maximize_concave(const ConvexBody& body, const ConcaveOracle& f,
                                double eps) {
  if (eps <= 0.0) throw UsageError("maximize_concave: eps must be positive");
  if (!(body.inner_radius > 0.0))
    throw UsageError("maximize_concave: body needs a positive inner radius");
  const int d = body.dim;
  const double R = body.outer_radius;
  const double L = std::max(f.lipschitz, 1e-12);
  // Fallback value tolerance for the volume-floor exit. With a smoothness
  // bound beta a value gap e implies a first-order gap of at most
  // max(sqrt(8*beta*R^2*e), 2*e); tighten so that implies eps.
  double val_tol = eps;
  if (f.smoothness > 0.0)
    val_tol = std::min(0.5 * eps, eps * eps / (8.0 * f.smoothness * R * R));
  const double tau = std::min(1.0, val_tol / (2.0 * L * R));
  const double log_vol_stop = d * std::log(tau * body.inner_radius);

  EllipsoidState ell = EllipsoidState::ball(Vec::Zero(d), R);
  MaximizeResult best;
  best.x = body.start;
  best.value = f.value(best.x);
  best.gradient = f.gradient(best.x);

  // Measured first-order gap at a candidate, or -1 when only the expensive
  // oracle fallback could decide and it is not scheduled yet.
  auto measured_gap = [&](const Vec& x, const Vec& g, bool allow_inner) {
    double cheap = R * g.norm() - g.dot(x);  // gap over the outer ball
    if (cheap <= eps) return std::max(cheap, 0.0);
    if (body.argmax_linear) return g.dot(body.argmax_linear(g) - x);
    if (!allow_inner) return -1.0;
    Vec y = linear_argmax(body, g, 0.25 * eps);
    return g.dot(y - x) + 0.25 * eps;
  };

  long max_iters =
      static_cast<long>((ell.log_volume() - log_vol_stop) / -central_cut_log_factor(d)) + 16;
  long next_inner_check = 2 * (d + 1);
  long iters = 0;
  while (ell.log_volume() > log_vol_stop) {
    if (iters >= max_iters)
      throw NumericError("maximize_concave: iteration budget exceeded");
    const Vec c = ell.center();
    auto cut = body.separate(c);
    if (cut) {
      ++iters;
      ell.central_cut(cut->a);
      ell.clamp_to_slab(R);
      if (ell.conditioning_ratio() < 1e-10) break;
      continue;
    }
    double fc = f.value(c);
    Vec g = f.gradient(c);
    if (fc > best.value) {
      best.x = c;
      best.value = fc;
      best.gradient = g;
    }
    bool inner_ok = iters >= next_inner_check;
    if (inner_ok) next_inner_check = iters + iters / 2 + 2 * (d + 1);
    double gap = measured_gap(c, g, inner_ok);
    if (gap >= 0.0 && gap <= eps) {
      best.x = c;
      best.value = fc;
      best.gradient = g;
      best.gap_bound = gap;
      best.iterations = static_cast<int>(iters);
      return best;
    }
    ++iters;
    ell.central_cut(-g);  // keep {x : g'x >= g'c}
    ell.clamp_to_slab(R);
    // see linear_argmax: a thin body breaks conditioning before the volume
    // floor; fall through to the epilogue, which measures the actual gap
    if (ell.conditioning_ratio() < 1e-10) break;
  }
  // volume floor: best is val_tol-optimal, which certifies the gap when a
  // smoothness bound was declared; record a measured gap if one is cheap
  double gap = measured_gap(best.x, best.gradient, true);
  if (gap >= 0.0 && gap <= eps) best.gap_bound = gap;
  best.iterations = static_cast<int>(iters);
  return best;
}

}  // namespace ceq
