#pragma once

#include <vector>

#include "ceq/games.hpp"
#include "ceq/phi.hpp"

namespace ceq {

struct EahOptions {
  // Per-player transform ball radii; empty -> default_transform_bound.
  std::vector<double> transform_bound;
  // Lipschitz bound of the summed deviation benefit in stacked K-space;
  // 0 -> derived from the coefficient normalization.
  double lipschitz = 0.0;
  long certificate_budget = 50000;
  long max_iterations = -1;
};

struct EahResult {
  SupportDistribution mu;           // mixture of the hope-cut products
  double certificate_value = 0.0;   // h(lambda) <= eps
  std::vector<double> weights;      // simplex weights over hope cuts
  std::vector<CutRecord> cuts;      // full trace, in generation order
  long iterations = 0;
  long hope_cuts = 0;
  long endomorphism_cuts = 0;
  long feasibility_cuts = 0;
  int dual_dim = 0;
  // h certifies the summed form: sum_i benefit_i(K) <= eps for every
  // endomorphic K in the product of transform balls. Since the identity
  // transform is endomorphic with zero benefit, each individual player's
  // benefit obeys the same bound.
  double summed_eps = 0.0;
};

/// Ellipsoid-against-hope over stacked transforms (K_1, ..., K_n): each
/// dual center is semi-separated per player; endomorphism failures cut in
/// K-space, otherwise the product distribution yields a hope cut through
/// the concave summed benefit. Certificate weights minimize
///   h(lambda) = sup_K sum_j lambda_j (<g_j, K> + c_j)
/// over the simplex, the sup taken blockwise over the transform balls.
EahResult eah_quadratic(const QuadraticGame& game,
                        const std::vector<FeatureMap>& maps, double eps,
                        const EahOptions& opts = {});

struct FptasOptions {
  long T = 0;               // 0 -> ceil(poly_factor / eps^2)
  double poly_factor = 0.0; // 0 -> D^2 * max k'
  double cefp_eps = 0.0;    // 0 -> eps / 2
  std::vector<double> transform_bound;
};

struct FptasResult {
  SupportDistribution mu;  // time average of the round product distributions
  long T = 0;
  std::vector<double> final_regret;  // per-player measured benefit vs best K
};

/// Self-play of the ShellGD regret minimizer, one learner per player; the
/// average of the per-round product distributions is the equilibrium
/// candidate.
FptasResult fptas_equilibrium(const ConcaveGame& game,
                              const std::vector<FeatureMap>& maps, double eps,
                              const FptasOptions& opts = {});

}  // namespace ceq
