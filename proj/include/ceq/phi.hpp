#pragma once

#include <optional>

#include "ceq/fixedpoint.hpp"
#include "ceq/geometry.hpp"

namespace ceq {

/// Feature map m : X -> R^{k'}. Deterministic; norm_bound dominates
/// ||m(x)|| over the body.
struct FeatureMap {
  int in_dim = 0;
  int out_dim = 0;
  std::function<Vec(const Vec&)> eval;
  double norm_bound = 0.0;
  // linear_index[r] = feature coordinate that equals x[r], so the identity
  // map is realized by K[r][linear_index[r]] = 1. Empty when the map has no
  // affine sub-block; most of the machinery assumes it does.
  std::vector<int> linear_index;
  // Feature coordinate identically 1, realizing constant transforms; -1 if
  // absent.
  int constant_index = -1;
};

/// m(x) = (1, x). Realizes every affine map x -> c + Mx.
FeatureMap affine_map(int d, double radius);

/// All monomials of total degree <= degree, constant first, then grouped by
/// ascending degree (degree-1 block in coordinate order, providing the
/// affine sub-block).
FeatureMap monomial_map(int d, int degree, double radius);

/// Deviation x -> K m(x) with ||K||_F <= the configured transform bound.
struct LinearTransform {
  Mat K;  // in_dim x out_dim
  FeatureMap m;

  Vec apply(const Vec& x) const { return K * m.eval(x); }
  PointMap as_point_map() const;
};

// K-space is flattened row-major: coordinate r * out_dim + c holds K(r, c).
Vec flatten_rowmajor(const Mat& K);
Mat unflatten_rowmajor(const Vec& v, int rows, int cols);

/// The K realizing the identity map; throws UsageError when the map has no
/// affine sub-block.
Mat identity_transform_matrix(const FeatureMap& m);

/// Default radius D of the transform ball B_D(0): sqrt(k') * max(R, 1) / rho
/// with rho the square root of the smallest Gram eigenvalue of m over a
/// deterministic probe set (floored), and never below twice the identity
/// transform's norm.
double default_transform_bound(const FeatureMap& m, const ConvexBody& body);

/// K-space halfspace {K : a'(K m(w)) <= b} induced by a body cut (a, b)
/// rejecting apply(t, w). Contains every K mapping w into the body, hence
/// all endomorphic transforms.
Halfspace endomorphism_cut(const ConvexBody& body, const LinearTransform& t,
                           const Vec& witness_x);

enum class SemiSeparateMode { Quadratic, Fptas };

struct SemiSeparation {
  // exactly one of the two is set
  std::optional<SupportDistribution> safe;
  std::optional<Vec> not_endomorphism;
  FixedPointResult detail;
};

/// Semi-separation oracle for x -> K m(x) over a player's strategy body:
/// either a distribution against which the transform gains at most eps/2
/// (for every concave quadratic own-utility of range <= 1 in quadratic
/// mode, every concave one in fptas mode), or a point the transform maps
/// outside the body. Only the player's own body enters; callers that run
/// quadratic mode are responsible for their game being quadratic.
SemiSeparation semi_separate(const ConvexBody& body, const LinearTransform& t,
                             double eps, SemiSeparateMode mode);

}  // namespace ceq
