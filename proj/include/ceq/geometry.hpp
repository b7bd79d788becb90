#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "ceq/common.hpp"
#include "ceq/distribution.hpp"

namespace ceq {

/// Halfspace {x : a'x <= b}. Cut normals are always nonzero.
struct Halfspace {
  Vec a;
  double b = 0.0;

  bool contains(const Vec& x, double slack = 0.0) const {
    return a.dot(x) <= b + slack;
  }
};

/// Result of a separation query: empty optional means Inside.
using SeparationResult = std::optional<Halfspace>;

/// Compact convex set given by a separation oracle together with inner and
/// outer radii: B(0, inner_radius) subset X subset B(0, outer_radius).
struct ConvexBody {
  int dim = 0;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  // Interior point used as a default start; origin unless stated otherwise.
  Vec start;
  std::function<SeparationResult(const Vec&)> separation;
  // Optional exact argmax of a linear functional over the body. Analytic
  // bodies provide it; oracle-only bodies may leave it empty, in which case
  // linear subproblems fall back on the ellipsoid method.
  std::function<Vec(const Vec&)> argmax_linear;

  SeparationResult separate(const Vec& p) const;
  bool contains(const Vec& p) const { return !separate(p).has_value(); }
};

// Analytic bodies. Boundary membership is decided with a fixed slack so
// tests are reproducible.
inline constexpr double kBoundarySlack = 1e-9;

ConvexBody make_ball(const Vec& center, double radius);
ConvexBody make_box(const Vec& lo, const Vec& hi);
// Standard simplex {x >= 0, sum x <= 1} translated so its centroid sits at
// the origin (the untranslated simplex contains no origin-centered ball).
ConvexBody make_simplex(int dim);
// Image of `base` under x -> M x + offset, M invertible.
ConvexBody affine_image(const ConvexBody& base, const Mat& M, const Vec& offset);

enum class CutKind { Feasibility, Objective, Endomorphism, Hope };

/// A cut generated during an ellipsoid run, with enough provenance attached
/// to rebuild an infeasibility certificate afterwards.
struct CutRecord {
  CutKind kind = CutKind::Feasibility;
  Halfspace hs;
  std::optional<Vec> witness_point;            // body point that produced the cut
  std::optional<Vec> witness_direction;        // e.g. phi(x) - x, or a gradient
  std::optional<SupportDistribution> witness_mu;
  double offset = 0.0;  // affine offset of the recorded linearization
  int player = -1;      // owning player for game-level cuts
};

/// Ellipsoid {x : (x-c)' shape^{-1} (x-c) <= 1}; shape symmetric positive
/// definite. Mutated only inside a single solve call.
class EllipsoidState {
 public:
  EllipsoidState(Vec center, Mat shape);
  static EllipsoidState ball(const Vec& center, double radius);

  const Vec& center() const { return center_; }
  const Mat& shape() const { return shape_; }
  int dim() const { return static_cast<int>(center_.size()); }

  /// log volume relative to the unit ball: 0.5 * logdet(shape).
  double log_volume() const { return 0.5 * log_det_; }

  /// min/max eigenvalue ratio of the shape matrix.
  double conditioning_ratio() const;

  /// Central cut keeping {x : a'x <= a'center}. The log-det update is
  /// checked against the closed-form per-cut volume factor.
  void central_cut(const Vec& a);

  /// Shrink long axes using the prior knowledge that the tracked region lies
  /// in the slab {|v'x| <= halfwidth} for every unit v. Repeated parallel
  /// cuts stretch the ellipsoid without bound in the orthogonal directions;
  /// this pulls those axes back while never excluding a slab point, and it
  /// only ever decreases the volume. No-op until an axis exceeds the
  /// trigger ratio.
  void clamp_to_slab(double halfwidth);

 private:
  void check_conditioning() const;
  Vec center_;
  Mat shape_;
  double log_det_;
};

/// log of the per-cut volume decay factor for a central cut in dimension d.
double central_cut_log_factor(int d);

template <class Payload>
struct FeasibilityOutcome {
  std::optional<Vec> accepted_point;
  std::optional<Payload> payload;
  std::vector<CutRecord> cuts;
  int iterations = 0;
  double final_log_volume = 0.0;
  // The run ended because the ellipsoid flattened to a near-degenerate
  // sliver (only possible with stop_on_thin).
  bool thin_stop = false;
  bool accepted() const { return accepted_point.has_value(); }
};

/// Central-cut ellipsoid search. The cutter, at each center, either accepts
/// (terminating) or returns a cut whose halfspace holds for the target set
/// and excludes the center. Runs until acceptance or log-volume threshold.
/// A positive clamp_radius asserts the target lies in B(0, clamp_radius)
/// and keeps the ellipsoid's axes from stretching without bound.
/// stop_on_thin ends the run (thin_stop = true, not accepted) when the
/// ellipsoid's axis ratio approaches the conditioning floor: the tracked
/// region is then confined to a slab of relative width ~1e-5, which callers
/// searching for a full-dimensional region may soundly treat as exhausted.
template <class Payload>
FeasibilityOutcome<Payload> ellipsoid_feasibility(
    EllipsoidState ell,
    const std::function<std::variant<Payload, CutRecord>(const Vec&)>& cutter,
    double log_vol_threshold, double clamp_radius = 0.0,
    long max_iterations = -1, bool stop_on_thin = false) {
  FeasibilityOutcome<Payload> out;
  const int d = ell.dim();
  if (max_iterations < 0) {
    // Worst-case count for the requested volume decrease, with headroom.
    double need = (ell.log_volume() - log_vol_threshold) / -central_cut_log_factor(d);
    max_iterations = static_cast<long>(need) + 16;
  }
  while (ell.log_volume() > log_vol_threshold) {
    if (out.iterations >= max_iterations)
      throw NumericError("ellipsoid_feasibility: iteration budget exceeded at log-vol " +
                         std::to_string(ell.log_volume()));
    auto res = cutter(ell.center());
    ++out.iterations;
    if (std::holds_alternative<Payload>(res)) {
      out.accepted_point = ell.center();
      out.payload = std::move(std::get<Payload>(res));
      out.final_log_volume = ell.log_volume();
      return out;
    }
    CutRecord cut = std::move(std::get<CutRecord>(res));
    double margin = cut.hs.a.dot(ell.center()) - cut.hs.b;
    if (!(margin >= 0.0))
      throw ContractViolation("ellipsoid_feasibility: cut does not exclude center (margin " +
                              std::to_string(margin) + ")");
    ell.central_cut(cut.hs.a);
    if (clamp_radius > 0.0) ell.clamp_to_slab(clamp_radius);
    out.cuts.push_back(std::move(cut));
    // one central cut cannot jump past the 1e-12 hard floor from here
    if (stop_on_thin && ell.conditioning_ratio() < 1e-10) {
      out.thin_stop = true;
      break;
    }
  }
  out.final_log_volume = ell.log_volume();
  return out;
}

struct ConcaveOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  // Lipschitz bound on f over the body and smoothness bound on its Hessian.
  // smoothness 0 declares f linear/nonsmooth; it tightens the internal value
  // tolerance so the returned point is also first-order stationary.
  double lipschitz = 1.0;
  double smoothness = 0.0;
};

struct MaximizeResult {
  Vec x;
  double value = 0.0;
  Vec gradient;
  // Certified bound on sup_{y in body} <gradient, y - x>; -1 when the run
  // ended on the volume floor instead of a measured-gap acceptance.
  double gap_bound = -1.0;
  int iterations = 0;
};

/// Approximate linear maximization: a point y in the body with
/// <g, y> >= sup_{body} <g, .> - eps. Exact when the body carries
/// argmax_linear, otherwise an inner ellipsoid run.
Vec linear_argmax(const ConvexBody& body, const Vec& g, double eps);

/// Central-cut ellipsoid maximization of a concave oracle over a body.
/// Returns x in the body whose first-order gap sup_y <grad f(x), y - x> is
/// at most eps; this is measured directly against the body's linear argmax
/// whenever possible, and acceptance happens as soon as the measured gap
/// clears. The fallback exit is the classical volume floor, at a value
/// tolerance tightened by the smoothness bound so the gap claim still holds.
MaximizeResult maximize_concave(const ConvexBody& body, const ConcaveOracle& f,
                                double eps);

}  // namespace ceq
