#pragma once

#include <optional>
#include <vector>

#include "ceq/games.hpp"
#include "ceq/phi.hpp"

namespace ceq {

/// Outer approximation of the endomorphic transforms: the ball B_D(0) in
/// flattened K-space intersected with accumulated halfspaces, every one of
/// which contains all endomorphic transforms.
struct ShellSet {
  int rows = 0, cols = 0;  // K shape
  double radius = 0.0;     // D
  std::vector<Halfspace> cuts;

  int dim() const { return rows * cols; }
  bool contains(const Vec& k, double slack = kBoundarySlack) const;
};

struct ShellEllipsoidResult {
  std::optional<Mat> K;
  std::optional<SupportDistribution> mu;
  std::optional<FixedPointResult> cefp_detail;
  // Endomorphism cuts generated along the way (the returned polytope when
  // the run fails; also populated on success, and still sound then).
  std::vector<Halfspace> new_cuts;
  long iterations = 0;
  bool found() const { return K.has_value(); }
};

/// Searches shell ∩ B_q(target) for a transform admitting a CEFP at
/// precision cefp_eps. Failure certifies that the residual volume is below
/// that of a ball of radius vol_radius. q = 0 degenerates to a direct test
/// of the target itself.
ShellEllipsoidResult shell_ellipsoid(const ShellSet& shell,
                                     const ConvexBody& body,
                                     const FeatureMap& m, const Mat& target,
                                     double q, double cefp_eps,
                                     double vol_radius);

struct ShellProjection {
  ShellSet shell;  // enlarged by all cuts accumulated during the sweep
  Mat K;
  SupportDistribution mu;
  double radius = 0.0;  // accepted sweep radius
  long cuts_added = 0;
};

/// Approximate projection of target onto the shell: radius sweep in steps
/// of eps/(4D), refined by bisection so the accepted radius exceeds the
/// last rejected one by at most eps^2/(8D). The refinement keeps the output
/// within O(eps) of the true projection onto the final shell rather than
/// O(sqrt(eps * D)).
ShellProjection shell_project(ShellSet shell, const ConvexBody& body,
                              const FeatureMap& m, const Mat& target,
                              double eps, double cefp_eps);

/// Concave utility report for one round; gradient must accept points
/// slightly outside the body (transformed strategies are probed before
/// projection restores endomorphism).
struct UtilityOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

struct LearnerState {
  ConvexBody body;
  FeatureMap m;
  ShellSet shell;
  Mat K;
  SupportDistribution mu;  // CEFP of x -> K m(x) at precision cefp_eps
  // telescoping endpoints of mu's defining orbit, for exact residual
  // accounting against any utility
  Vec orbit_start, orbit_end;
  long orbit_length = 0;
  double eta = 0.0;
  double proj_eps = 0.0;
  double cefp_eps = 0.0;
  long round = 0;
};

LearnerState make_learner(const ConvexBody& body, const FeatureMap& m,
                          double D, double eta, double proj_eps,
                          double cefp_eps);

/// y := K + eta * U projected back onto the shell; refreshes mu.
LearnerState shell_gd_step(LearnerState state, const Mat& U);

struct RegretOptions {
  double D = 0.0;           // 0 -> default_transform_bound
  double eta = 0.0;         // 0 -> D / sqrt(T * Gbar^2)
  double grad_bound = 0.0;  // bound on ||grad u||; 0 -> 1 + 4 R
  double cefp_eps = 0.0;    // 0 -> 1 / (k' sqrt(T))
  double proj_eps = 0.0;    // 0 -> cefp_eps
  // Utilities promised linear: best-in-hindsight comparators are computed
  // by exact linear maximization instead of the general concave path.
  bool linear_utilities = false;
  // Cap on the support atoms used for endomorphism rejection when
  // maximizing over comparator transforms (deterministic stride subsample).
  int endo_atom_cap = 2000;
};

struct RegretRow {
  long round = 0;
  double utility = 0.0;             // E_{mu_t} u_t
  double regret_vs_identity = 0.0;  // cumulative avg benefit of the best
                                    // constant transform (external regret)
  double regret_vs_bestK = 0.0;     // cumulative avg benefit of best_K
  double cefp_residual = 0.0;
  long shell_cuts = 0;
};

struct RegretTrace {
  std::vector<RegretRow> rows;
  Mat best_K;            // best fixed transform in hindsight
  Mat best_const_K;      // best constant transform (external comparator)
  double regret_best = 0.0;        // final average benefit of best_K
  double regret_external = 0.0;    // final average benefit of best_const_K
  double linearized_regret = 0.0;  // sum_t <U_t, best_K - K_t> / T
  double gd_bound = 0.0;           // (D^2/(2 eta) + eta sum ||U_t||^2) / T
  double residual_sum = 0.0;       // sum_t cefp residual against u_t
  double eta = 0.0;
  double D = 0.0;
  std::vector<Mat> U_history;
};

/// Phi_m-regret minimizer: ShellGD over transforms with per-round CEFP
/// play. stream(t) must be pure and deterministic (utilities are
/// re-evaluated for the hindsight accounting).
RegretTrace run_regret(const ConvexBody& body, const FeatureMap& m,
                       const std::function<UtilityOracle(long)>& stream,
                       long T, double eps, const RegretOptions& opts = {});

}  // namespace ceq
