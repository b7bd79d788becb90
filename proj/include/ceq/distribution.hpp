#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ceq/common.hpp"

namespace ceq {

/// Finite-support distribution: atoms in R^d with positive weights summing
/// to 1. Immutable after construction.
class SupportDistribution {
 public:
  // Empty placeholder (size 0); every operation other than assignment is
  // meaningless until a real distribution is assigned over it.
  SupportDistribution() : dim_(0) {}
  SupportDistribution(std::vector<Vec> atoms, std::vector<double> weights);

  static SupportDistribution point_mass(const Vec& x);
  static SupportDistribution uniform(const std::vector<Vec>& atoms);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(atoms_.size()); }
  const std::vector<Vec>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }

  /// E_mu[f] computed as the exact weighted sum over the support.
  Vec expect(const std::function<Vec(const Vec&)>& f) const;
  double expect_scalar(const std::function<double(const Vec&)>& f) const;
  Vec mean() const;

  /// Highest-weight atom; ties broken lexicographically on coordinates.
  const Vec& top_atom() const;

  std::string to_json() const;
  static SupportDistribution from_json(const std::string& text);

 private:
  int dim_;
  std::vector<Vec> atoms_;
  std::vector<double> weights_;
};

/// Weighted mixture; atoms merged on exact coordinate equality.
SupportDistribution mix(const std::vector<double>& weights,
                        const std::vector<SupportDistribution>& mus);

/// Product distribution over concatenated coordinates. Factor count and
/// support size are hard-capped.
SupportDistribution product(const std::vector<SupportDistribution>& mus,
                            int max_factors = 4,
                            std::size_t max_support = 1000000);

}  // namespace ceq
