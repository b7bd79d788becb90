// Times the equilibrium audit kernel with the OpenMP reduction enabled vs
// pinned to one thread. Usage: audit_bench [audits] [support]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include <omp.h>

#include "ceq/eqcomp.hpp"
#include "ceq/harness.hpp"

using namespace ceq;

namespace {

double time_verify(const ConcaveGame& g, const SupportDistribution& mu,
                   const std::vector<FeatureMap>& maps, double eps,
                   int audits, int threads, double* benefit) {
  omp_set_num_threads(threads);
  VerifyOptions vo;
  vo.audit_budget = audits;
  vo.seed = 99;
  auto t0 = std::chrono::steady_clock::now();
  EquilibriumReport rep = verify_equilibrium(g, mu, maps, eps, vo);
  auto t1 = std::chrono::steady_clock::now();
  *benefit = rep.max_benefit;
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int audits = argc > 1 ? std::atoi(argv[1]) : 2000;
  int support = argc > 2 ? std::atoi(argv[2]) : 64;

  QuadraticGame qg = game_from_spec("cross:d=3,r=1.25,seed=7");
  ConcaveGame g = qg.concave_view();
  std::vector<FeatureMap> maps;
  for (int i = 0; i < g.players; ++i)
    maps.push_back(affine_map(g.bodies[i].dim, g.bodies[i].outer_radius));

  // a synthetic candidate: a cloud of product-body points near the centers
  std::mt19937_64 rng(split_seed(7, 0x62656e63u));
  std::normal_distribution<double> gauss(0.0, 0.05);
  std::vector<Vec> atoms;
  for (int j = 0; j < support; ++j) {
    Vec z(g.total_dim());
    for (int r = 0; r < g.total_dim(); ++r) z[r] = gauss(rng);
    atoms.push_back(z);
  }
  SupportDistribution mu = SupportDistribution::uniform(atoms);

  int max_threads = omp_get_max_threads();
  double bs = 0, bp = 0;
  double serial = time_verify(g, mu, maps, 1e-2, audits, 1, &bs);
  double parallel = time_verify(g, mu, maps, 1e-2, audits, max_threads, &bp);

  std::printf("audits=%d support=%d\n", audits, support);
  std::printf("serial   (1 thread%s): %.3fs  max_benefit=%.6g\n", "", serial, bs);
  std::printf("parallel (%d threads): %.3fs  max_benefit=%.6g\n", max_threads,
              parallel, bp);
  std::printf("speedup: %.2fx\n", serial / parallel);
  if (bs != bp) {
    std::printf("WARNING: audit result depends on thread count\n");
    return 1;
  }
  return 0;
}
