#pragma once

#include <functional>
#include <optional>

#include "ceq/distribution.hpp"
#include "ceq/geometry.hpp"

namespace ceq {

/// Candidate deviation function x -> R^d. Not promised to map the body into
/// itself; solvers detect and report the violation. Must be deterministic.
struct PointMap {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;
};

/// A point of the dual box of the quadratic search: 0 <= A <= 2I, |b| <= 1.
struct QefpDual {
  Mat A;
  Vec b;
};

// The dual (b, A) lives in R^(d + d(d+1)/2): b, then the upper triangle of A
// with off-diagonal entries scaled by sqrt(2) so Euclidean inner products
// equal Frobenius ones.
int qefp_dual_dim(int d);
Vec pack_dual(const Vec& b, const Mat& A);
QefpDual unpack_dual(const Vec& z, int d);

struct FixedPointResult {
  // exactly one of the two is set
  std::optional<SupportDistribution> certificate;
  std::optional<Vec> not_endomorphism;

  long iterations = 0;
  long feasibility_cuts = 0;  // dual box cuts
  long hope_cuts = 0;         // cuts through approximate maximizers
  // residuals of the returned certificate (when one is returned)
  double efp_norm = -1.0;
  double psd_term = -1.0;
  // last iterate of the FPTAS orbit (cefp_fptas only), kept for auditing
  std::optional<Vec> final_iterate;

  bool is_certificate() const { return certificate.has_value(); }
};

/// FPTAS: mu = uniform over the first ceil(1/eps) iterates of phi from x0.
/// For any concave u with range in [0,1] the deviation benefit telescopes to
/// (u(x^(M)) - u(x^(0)))/M <= eps. The first iterate leaving the body is
/// reported instead.
FixedPointResult cefp_fptas(const PointMap& phi, const ConvexBody& body,
                            double eps, const Vec& x0);

/// Expected fixed point: certificate mu with |E_mu[phi(x) - x]| <= eps.
FixedPointResult efp_solve(const PointMap& phi, const ConvexBody& body,
                           double eps);

/// Quadratic expected fixed point: certificate mu with
///   |E w| + 2 * sum max(0, -lambda_i(sym(E[x w']))) <= eps,  w = phi(x) - x,
/// equivalently E<b - Ax, w> <= eps over the whole dual box.
FixedPointResult qefp_solve(const PointMap& phi, const ConvexBody& body,
                            double eps);

struct QefpResidual {
  double efp_norm = 0.0;
  double psd_term = 0.0;
  double evi_residual = 0.0;  // sup over v in body of E<phi(x)-x, v-x>
};

QefpResidual qefp_residual(const SupportDistribution& mu, const PointMap& phi,
                           const ConvexBody& body);

/// Weights over the recorded hope-cut witnesses minimizing the certificate
/// residual g; throws NumericError if g cannot be brought below eps (an
/// upstream contract must have been broken).
SupportDistribution qefp_certificate(const std::vector<CutRecord>& cuts,
                                     const PointMap& phi, double eps);

/// Unknown Mahalanobis contraction: f is promised to be a (1-gamma)
/// contraction under some hidden norm |x|_A^2 = x'Ax with 0 < A <= 2I.
/// Returns mu with E_mu |x - x*|_A^2 <= delta for the hidden A.
SupportDistribution mahalanobis_unkcontr(const PointMap& f,
                                         const ConvexBody& body, double gamma,
                                         double delta);

/// Round a distributional answer to a single point: re-solve at precision
/// delta / (realized support size) and take the heaviest atom.
Vec point_extract(const SupportDistribution& mu,
                  const std::function<SupportDistribution(double)>& refine,
                  double delta);

}  // namespace ceq
