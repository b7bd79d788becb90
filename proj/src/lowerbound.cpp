#include "ceq/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>

namespace ceq {

Vec TreeFormProblem::realization(int row, const std::vector<int>& signs) const {
  if (row < 0 || row >= k || static_cast<int>(signs.size()) != n)
    throw UsageError("TreeFormProblem::realization: bad row or sign count");
  Vec x = Vec::Zero(dim());
  const double a = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    if (signs[j] != 1 && signs[j] != -1)
      throw UsageError("TreeFormProblem::realization: signs must be +-1");
    x[row * n + j] = signs[j] * a;
  }
  return x;
}

void TreeFormProblem::validate_pure(const Vec& x) const {
  if (x.size() != dim())
    throw ContractViolation("tree-form strategy: dimension mismatch");
  const double a = 1.0 / std::sqrt(static_cast<double>(n));
  int nonzero_row = -1;
  for (int i = 0; i < k; ++i) {
    bool any = false;
    for (int j = 0; j < n; ++j) {
      double v = x[i * n + j];
      if (v == 0.0) continue;
      if (std::abs(std::abs(v) - a) > 1e-12)
        throw ContractViolation("tree-form strategy: entry magnitude is not 1/sqrt(n)");
      any = true;
    }
    if (!any) continue;
    if (nonzero_row >= 0)
      throw ContractViolation("tree-form strategy: more than one nonzero row");
    for (int j = 0; j < n; ++j)
      if (x[i * n + j] == 0.0)
        throw ContractViolation("tree-form strategy: incomplete row");
    nonzero_row = i;
  }
  if (nonzero_row < 0)
    throw ContractViolation("tree-form strategy: all rows zero");
}

Vec TreeFormProblem::best_response(const Vec& w) const {
  if (w.size() != dim()) throw UsageError("best_response: dimension mismatch");
  Vec best;
  double best_val = 0.0;
  for (int i = 0; i < k; ++i) {
    std::vector<int> s(n);
    double val = 0.0;
    // w == 0 takes the minus sign: lexicographically smaller realization
    for (int j = 0; j < n; ++j) {
      s[j] = w[i * n + j] > 0.0 ? 1 : -1;
      val += std::abs(w[i * n + j]);
    }
    Vec cand = realization(i, s);
    bool better = best.size() == 0 || val > best_val;
    if (!better && val == best_val) {
      for (int t = 0; t < dim(); ++t) {
        if (cand[t] == best[t]) continue;
        better = cand[t] < best[t];
        break;
      }
    }
    if (better) {
      best = std::move(cand);
      best_val = val;
    }
  }
  return best;
}

double TreeFormProblem::best_response_value(const Vec& w) const {
  return w.dot(best_response(w));
}

NormalFormAdversary baseline_adversary(int k, int N, long T) {
  if (k < 1 || N < k + 1 || T < 0)
    throw UsageError("baseline_adversary: need k >= 1 and N >= k + 1");
  NormalFormAdversary adv;
  adv.actions = N;
  adv.horizon = T;
  adv.block.resize(N);
  for (int a = 0; a < N; ++a)
    adv.block[a] = std::min(k - 1, a / ((N + k - 1) / k));
  adv.reserved = N - 1;  // last action of the last part
  std::vector<int> block = adv.block;
  int reserved = adv.reserved;
  adv.draw = [k, N, T, block, reserved](std::uint64_t seed) {
    std::mt19937_64 rng(split_seed(seed, 0x6164u));
    // one block label per round, then each block's actions as a sorted
    // uniform multiset over its non-reserved members
    std::vector<int> labels(T);
    std::uniform_int_distribution<int> pick_block(0, k - 1);
    for (long t = 0; t < T; ++t) labels[t] = pick_block(rng);
    std::vector<std::vector<int>> pools(k);
    for (int a = 0; a < N; ++a)
      if (a != reserved) pools[block[a]].push_back(a);
    std::vector<std::vector<int>> subseq(k);
    for (long t = 0; t < T; ++t) {
      const auto& pool = pools[labels[t]];
      std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
      subseq[labels[t]].push_back(pool[pick(rng)]);
    }
    for (auto& s : subseq) std::sort(s.begin(), s.end());
    std::vector<int> out(T);
    std::vector<std::size_t> next(k, 0);
    for (long t = 0; t < T; ++t) out[t] = subseq[labels[t]][next[labels[t]]++];
    return out;
  };
  return adv;
}

std::pair<Embedding, std::vector<Vec>> embed(const NormalFormAdversary& adv,
                                             int k, int n,
                                             std::uint64_t seed) {
  if (k < 1 || n < 1) throw UsageError("embed: k and n must be positive");
  if (static_cast<int>(adv.block.size()) != adv.actions)
    throw UsageError("embed: adversary partition size mismatch");
  for (int b : adv.block)
    if (b < 0 || b >= k) throw UsageError("embed: partition block out of range");
  Embedding emb;
  emb.problem = TreeFormProblem{k, n};
  emb.block = adv.block;
  emb.seed = seed;
  emb.psi.reserve(adv.actions);
  for (int a = 0; a < adv.actions; ++a) {
    std::mt19937_64 rng(split_seed(seed, 0x70736900u + a));
    std::vector<int> s(n);
    for (int j = 0; j < n; ++j) s[j] = (rng() & 1u) ? 1 : -1;
    emb.psi.push_back(emb.problem.realization(adv.block[a], s));
  }
  std::vector<int> seq = adv.draw(split_seed(seed, 1));
  if (static_cast<long>(seq.size()) != adv.horizon)
    throw ContractViolation("adversary: drawn sequence length differs from horizon");
  std::vector<int> last(k, -1);
  for (int a : seq) {
    if (a < 0 || a >= adv.actions)
      throw ContractViolation("adversary: action out of range");
    if (a == adv.reserved)
      throw ContractViolation("adversary: reserved action a* was played");
    if (a < last[adv.block[a]])
      throw ContractViolation("adversary: increasing-order property violated");
    last[adv.block[a]] = a;
  }
  std::vector<Vec> utils;
  utils.reserve(seq.size());
  for (int a : seq) utils.push_back(emb.psi[a]);
  return {std::move(emb), std::move(utils)};
}

ConcentrationReport check_concentration(const Embedding& emb, double eps) {
  ConcentrationReport rep;
  const int N = static_cast<int>(emb.psi.size());
  rep.predicted_failure =
      static_cast<double>(N) * N *
      std::exp(-emb.problem.n * eps * eps / 2.0);
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) {
      if (emb.block[a] != emb.block[b]) continue;  // exactly 0 by support
      double ip = std::abs(emb.psi[a].dot(emb.psi[b]));
      rep.max_offdiag = std::max(rep.max_offdiag, ip);
      if (ip > eps) ++rep.violations;
    }
  return rep;
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

}  // namespace

SwapDeviation best_swap_deviation(const TreeFormProblem& prob,
                                  const std::vector<SupportDistribution>& plays,
                                  const std::vector<Vec>& utils,
                                  const std::vector<Vec>& extra_candidates) {
  if (plays.size() != utils.size() || plays.empty())
    throw UsageError("best_swap_deviation: plays and utils must align");
  const long T = static_cast<long>(plays.size());
  // cumulative weighted utility per distinct supported strategy
  std::map<Vec, Vec, LexLess> w;
  for (long t = 0; t < T; ++t)
    for (int j = 0; j < plays[t].size(); ++j) {
      const Vec& x = plays[t].atoms()[j];
      prob.validate_pure(x);
      auto it = w.find(x);
      if (it == w.end()) it = w.emplace(x, Vec(Vec::Zero(prob.dim()))).first;
      it->second += plays[t].weights()[j] * utils[t];
    }
  std::vector<Vec> candidates;
  for (const auto& kv : w) candidates.push_back(kv.first);
  for (const Vec& c : extra_candidates) {
    prob.validate_pure(c);
    candidates.push_back(c);
  }
  if (candidates.empty()) throw UsageError("best_swap_deviation: no candidates");
  LexLess lex;
  SwapDeviation out;
  for (const auto& kv : w) {
    const Vec& x = kv.first;
    const Vec& wx = kv.second;
    Vec best = x;  // incumbent wins ties: zero utilities keep the identity
    double best_val = wx.dot(x);
    auto consider = [&](const Vec& c) {
      double v = wx.dot(c);
      if (v > best_val || (v == best_val && (best - x).norm() > 0.0 && lex(c, best))) {
        best = c;
        best_val = v;
      }
    };
    for (const Vec& c : candidates) consider(c);
    consider(prob.best_response(wx));  // exact over all of Pi
    out.from.push_back(x);
    out.to.push_back(best);
    out.swap_regret += (best_val - wx.dot(x)) / static_cast<double>(T);
  }
  return out;
}

OnlineLearner fixed_learner(const Vec& x) {
  OnlineLearner l;
  l.play = [x](long) { return SupportDistribution::point_mass(x); };
  l.observe = [](const Vec&) {};
  return l;
}

OnlineLearner ftl_learner(const TreeFormProblem& prob) {
  auto cum = std::make_shared<Vec>(Vec::Zero(prob.dim()));
  OnlineLearner l;
  l.play = [prob, cum](long) {
    return SupportDistribution::point_mass(prob.best_response(*cum));
  };
  l.observe = [cum](const Vec& u) { *cum += u; };
  return l;
}

LowerBoundReport run_lower_bound_experiment(OnlineLearner& learner,
                                            const NormalFormAdversary& adv,
                                            int k, int n, long T,
                                            std::uint64_t seed,
                                            const LowerBoundConfig& cfg) {
  if (T != adv.horizon)
    throw UsageError("run_lower_bound_experiment: T differs from the adversary horizon");
  auto [emb, utils] = embed(adv, k, n, seed);
  LowerBoundReport rep;
  rep.k = k;
  rep.n = n;
  rep.N = adv.actions;
  rep.T = T;
  rep.seed = seed;
  std::vector<SupportDistribution> plays;
  plays.reserve(T);
  for (long t = 0; t < T; ++t) {
    SupportDistribution p = learner.play(t);
    double v = 0.0;
    for (int j = 0; j < p.size(); ++j)
      v += p.weights()[j] * utils[t].dot(p.atoms()[j]);
    rep.round_utility.push_back(v);
    learner.observe(utils[t]);
    plays.push_back(std::move(p));
  }
  rep.deviation = best_swap_deviation(emb.problem, plays, utils, emb.psi);
  rep.swap_regret = rep.deviation.swap_regret;
  rep.concentration = check_concentration(emb, cfg.conc_eps);
  double k6 = std::pow(static_cast<double>(k), 6.0);
  rep.recipe_eps = 1.0 / (4.0 * cfg.C * k6);
  rep.recipe_n = 2.0 *
                 std::log(20.0 * cfg.C * static_cast<double>(rep.N) * rep.N * k6) /
                 (rep.recipe_eps * rep.recipe_eps);
  return rep;
}

}  // namespace ceq
