#pragma once

#include <optional>
#include <vector>

#include "ceq/distribution.hpp"
#include "ceq/geometry.hpp"
#include "ceq/phi.hpp"

namespace ceq {

inline constexpr int kMaxPlayers = 4;

/// Concave game: per-player convex strategy bodies, utilities in [0,1]
/// concave in the own strategy, and own-gradient oracles. Profiles are
/// passed as per-player blocks; correlated distributions use the stacked
/// concatenation. Gradient oracles must accept points slightly outside the
/// own body (transformed strategies are evaluated before any projection).
struct ConcaveGame {
  int players = 0;
  std::vector<ConvexBody> bodies;
  std::vector<std::function<double(const std::vector<Vec>&)>> utility;
  std::vector<std::function<Vec(const std::vector<Vec>&)>> own_gradient;

  int total_dim() const;
  std::vector<Vec> split(const Vec& stacked) const;
  Vec stack(const std::vector<Vec>& profile) const;
  void validate() const;
};

/// Quadratic game: u_i(x) = b_i(x_{-i})' x_i - x_i' A_i(x_{-i}) x_i
/// + c_i(x_{-i}), with A_i symmetric PSD. The oracles receive the full
/// profile but must ignore the own block. c_i is optional (utility range
/// normalization only; it cancels out of every deviation benefit).
struct QuadraticGame {
  int players = 0;
  std::vector<ConvexBody> bodies;
  std::vector<std::function<Mat(const std::vector<Vec>&)>> A;
  std::vector<std::function<Vec(const std::vector<Vec>&)>> b;
  std::vector<std::function<double(const std::vector<Vec>&)>> c;

  ConcaveGame concave_view() const;
};

struct DeviationReport {
  double benefit = 0.0;
  // First atom whose deviated own strategy left the body, if any; the
  // benefit is still the exact expectation (utilities extend).
  std::optional<Vec> exterior_witness;
};

/// E_mu[u_i(dev(x_i), x_{-i}) - u_i(x)], exact over the finite support.
DeviationReport deviation_benefit(const ConcaveGame& game, int i,
                                  const SupportDistribution& mu,
                                  const PointMap& dev);

/// U = sum_j w_j grad_i u_i(K m(x_{i,j}), x_{-i,j}) m(x_{i,j})', the
/// K-space gradient of the expected deviation benefit.
Mat expected_feature_gradient(const ConcaveGame& game, int i,
                              const SupportDistribution& mu, const Mat& K,
                              const FeatureMap& m);

struct VerifyOptions {
  // PASS iff max benefit <= eps * (1 + tolerance_factor).
  double tolerance_factor = 0.1;
  // Precision of the inner concave maximization, as a fraction of eps.
  double opt_eps_factor = 0.25;
  int audit_budget = 1000;
  std::uint64_t seed = 0;
  // Per-player transform ball radii; empty -> default_transform_bound.
  std::vector<double> transform_bound;
  // K-space Lipschitz/smoothness bounds for the benefit; 0 -> derived from
  // the usual coefficient normalization (||b|| <= 1, ||A|| <= 2).
  double lipschitz = 0.0;
  double smoothness = 0.0;
};

struct EquilibriumReport {
  std::vector<double> opt_benefit;    // ellipsoid-maximized, per player
  std::vector<double> audit_benefit;  // max over random endomorphic K
  double max_benefit = 0.0;
  bool pass = false;
  double threshold = 0.0;
};

/// Audits a candidate Phi_m-equilibrium: per player, maximizes the expected
/// deviation benefit over endomorphic-on-support transforms in the D-ball
/// (concave in K), and additionally samples random endomorphic transforms.
EquilibriumReport verify_equilibrium(const ConcaveGame& game,
                                     const SupportDistribution& mu,
                                     const std::vector<FeatureMap>& maps,
                                     double eps,
                                     const VerifyOptions& opts = {});

}  // namespace ceq
