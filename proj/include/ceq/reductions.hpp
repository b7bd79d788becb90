#pragma once

#include <algorithm>

#include "ceq/fixedpoint.hpp"
#include "ceq/games.hpp"

namespace ceq {

/// Imitation game for a point map f on a shared body: u1 = -||x - y||^2,
/// u2 = -||y - f(x)||^2, affinely rescaled into [0,1] by u/scale + 1 with
/// scale = (2R)^2. Verifier quantities are reported in the raw (unscaled)
/// normalization; a game-level deviation benefit of eps corresponds to a
/// raw benefit of scale * eps.
struct NfceConstruction {
  QuadraticGame game;
  PointMap f;
  ConvexBody body;
  double scale = 0.0;
};

NfceConstruction nfce_game_from_map(const PointMap& f, const ConvexBody& body);

/// Exact finite-support residuals of the approximate-equilibrium
/// conditions of the imitation game, grouping atoms on exact coordinate
/// equality: resid_x = E_x ||x - E[y|x]||^2, resid_y = E_y ||y - E[f(x)|y]||^2.
struct NfceResiduals {
  double resid_x = 0.0;
  double resid_y = 0.0;
  double eps_hat() const { return std::max(resid_x, resid_y); }
};

NfceResiduals nfce_residuals(const SupportDistribution& mu, const PointMap& f);

struct LemmaDecreaseReport {
  double decrease = 0.0;  // E_x [Q(x) - Q(f(x))] over the x-marginal
  NfceResiduals residuals;
  double claimed_eps = 0.0;
  double bound = 0.0;  // 2 sqrt(eps_hat)
  bool residuals_ok = false;  // eps_hat <= claimed_eps
  bool holds = false;         // decrease <= bound (+ slack)
};

/// Checks the one-step decrease of a convex 1-Lipschitz Q against the
/// measured equilibrium residuals: when the residuals are genuine, the
/// decrease cannot exceed 2 sqrt(eps_hat). residuals_ok flags claimed
/// epsilons the distribution does not actually meet.
LemmaDecreaseReport verify_lemma_decrease(
    const SupportDistribution& mu, const PointMap& f,
    const std::function<double(const Vec&)>& Q, double eps);

/// A norm oracle, 1-Lipschitz with respect to l2 after normalization.
struct NormOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> subgradient;
};

NormOracle l2_norm();
NormOracle linf_norm();

/// Singleton-deviation game: u1 = -norm(x - y), u2 = -norm(y - f(x)),
/// rescaled into [0,1] by u/(2R) + 1, with Phi_1 = Phi_2 = {f}.
struct PhiEqConstruction {
  ConcaveGame game;
  PointMap f;
  ConvexBody body;
  NormOracle norm;
  double scale = 0.0;  // 2R
};

PhiEqConstruction phieq_game_from_contraction(const PointMap& f,
                                              const NormOracle& norm,
                                              const ConvexBody& body);

/// All quantities in the raw norm (the scale cancels from the chain).
struct PhiEqReport {
  double benefit1 = 0.0;    // E[u1(f(x), y) - u1], unscaled
  double benefit2 = 0.0;    // E[u2(x, f(y)) - u2], unscaled
  double summed = 0.0;      // = E[norm(x-y) - norm(f(x)-f(y))]
  double pair_gap = 0.0;    // E norm(x - y)
  double fixed_gap = 0.0;   // E norm(y - f(y))
  double eps = 0.0;         // max(benefit1 + benefit2, benefit2, 0)
  double chain_bound = 0.0; // 3 eps / gamma
  bool holds = false;       // fixed_gap <= chain_bound (+ slack)
};

PhiEqReport phieq_verify(const PhiEqConstruction& c,
                         const SupportDistribution& mu, double gamma);

}  // namespace ceq
