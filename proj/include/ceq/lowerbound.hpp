#pragma once

#include <cstdint>
#include <vector>

#include "ceq/distribution.hpp"

namespace ceq {

/// Tree-form decision problem: the learner picks a root index i in [k],
/// observes j in [n], and answers with a sign. A pure strategy is (i, s)
/// with s in {-1,+1}^n; its realization vector in R^{k*n} (row-major) has
/// row i equal to s / sqrt(n) and every other row zero, hence unit norm.
struct TreeFormProblem {
  int k = 0;
  int n = 0;

  int dim() const { return k * n; }
  Vec realization(int row, const std::vector<int>& signs) const;
  /// Throws ContractViolation unless x is a valid realization vector.
  void validate_pure(const Vec& x) const;

  /// Exact argmax of <w, x> over all k * 2^n pure strategies, in closed
  /// form: per row, the best sign pattern follows sign(w); ties resolved
  /// toward the lexicographically smallest realization.
  Vec best_response(const Vec& w) const;
  double best_response_value(const Vec& w) const;
};

struct NormalFormAdversary {
  int actions = 0;          // N = |A|
  std::vector<int> block;   // block[a] in [k]: the part A_i holding a
  int reserved = -1;        // a*, never played
  long horizon = 0;         // T
  // seed -> length-T action sequence; must respect reserved and the
  // increasing-order property (machine-checked on every draw).
  std::function<std::vector<int>(std::uint64_t)> draw;
};

/// Baseline stub: even partition of [N] into k parts, a* the last action
/// of the last part, each part's subsequence a sorted uniform multiset.
NormalFormAdversary baseline_adversary(int k, int N, long T);

struct Embedding {
  TreeFormProblem problem;
  std::vector<Vec> psi;    // psi[a]: embedded pure strategy, unit norm
  std::vector<int> block;  // copied from the adversary
  std::uint64_t seed = 0;
};

/// Draws psi (uniform in Pi_i per action, reproducible from seed), pulls
/// the adversary's action sequence, machine-checks the reserved-action and
/// increasing-order properties, and returns the embedded utilities.
std::pair<Embedding, std::vector<Vec>> embed(const NormalFormAdversary& adv,
                                             int k, int n,
                                             std::uint64_t seed);

struct ConcentrationReport {
  double max_offdiag = 0.0;      // over distinct same-row pairs
  double predicted_failure = 0.0;  // N^2 exp(-n eps^2 / 2)
  long violations = 0;           // pairs with |<.,.>| > eps
};

ConcentrationReport check_concentration(const Embedding& emb, double eps);

struct SwapDeviation {
  std::vector<Vec> from, to;  // phi on the played support, paired by index
  double swap_regret = 0.0;
};

/// Best swap deviation under linear utilities: for each supported pure
/// strategy x, phi(x) maximizes the cumulative weighted payoff
/// sum_t mu_t(x) <u_t, x'> over support(plays), extra_candidates, and the
/// closed-form per-cell best response (which makes the maximization exact
/// over all of Pi). Ties keep x itself, then go lexicographic.
SwapDeviation best_swap_deviation(const TreeFormProblem& prob,
                                  const std::vector<SupportDistribution>& plays,
                                  const std::vector<Vec>& utils,
                                  const std::vector<Vec>& extra_candidates = {});

/// Online learner over Pi: play(t) is queried before observe(u_t).
struct OnlineLearner {
  std::function<SupportDistribution(long)> play;
  std::function<void(const Vec&)> observe;
};

OnlineLearner fixed_learner(const Vec& x);
OnlineLearner ftl_learner(const TreeFormProblem& prob);

struct LowerBoundConfig {
  double C = 1.0;         // recipe constant
  double conc_eps = 0.5;  // concentration check threshold
};

struct LowerBoundReport {
  int k = 0, n = 0, N = 0;
  long T = 0;
  std::uint64_t seed = 0;
  std::vector<double> round_utility;  // E_{play_t} <u_t, .>
  SwapDeviation deviation;
  double swap_regret = 0.0;
  ConcentrationReport concentration;
  // reference parameter recipe: eps = 1/(4 C k^6), n = 2 log(20 C N^2 k^6) / eps^2
  double recipe_eps = 0.0;
  double recipe_n = 0.0;
};

LowerBoundReport run_lower_bound_experiment(OnlineLearner& learner,
                                            const NormalFormAdversary& adv,
                                            int k, int n, long T,
                                            std::uint64_t seed,
                                            const LowerBoundConfig& cfg = {});

}  // namespace ceq
