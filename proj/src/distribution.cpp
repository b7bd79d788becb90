#include "ceq/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace ceq {

namespace {

// Exact lexicographic compare on coordinates.
bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

}  // namespace

SupportDistribution::SupportDistribution(std::vector<Vec> atoms,
                                         std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty() || atoms_.size() != weights_.size())
    throw UsageError("SupportDistribution: need equal, nonzero atom/weight counts");
  dim_ = static_cast<int>(atoms_[0].size());
  double total = 0.0;
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (atoms_[j].size() != dim_)
      throw UsageError("SupportDistribution: mixed atom dimensions");
    if (!(weights_[j] > 0.0))
      throw UsageError("SupportDistribution: weights must be strictly positive");
    if (!atoms_[j].allFinite()) throw NumericError("SupportDistribution: non-finite atom");
    total += weights_[j];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw UsageError("SupportDistribution: weights sum to " + std::to_string(total));
}

SupportDistribution SupportDistribution::point_mass(const Vec& x) {
  return SupportDistribution({x}, {1.0});
}

SupportDistribution SupportDistribution::uniform(const std::vector<Vec>& atoms) {
  // Exact duplicates collapse so weights stay well-defined.
  std::vector<SupportDistribution> parts;
  parts.reserve(atoms.size());
  std::vector<double> w(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  for (const Vec& a : atoms) parts.push_back(point_mass(a));
  return mix(w, parts);
}

Vec SupportDistribution::expect(const std::function<Vec(const Vec&)>& f) const {
  Vec acc = f(atoms_[0]) * weights_[0];
  for (std::size_t j = 1; j < atoms_.size(); ++j) acc += weights_[j] * f(atoms_[j]);
  if (!acc.allFinite()) throw NumericError("expect: oracle produced NaN/Inf");
  return acc;
}

double SupportDistribution::expect_scalar(
    const std::function<double(const Vec&)>& f) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < atoms_.size(); ++j) acc += weights_[j] * f(atoms_[j]);
  if (!std::isfinite(acc)) throw NumericError("expect_scalar: oracle produced NaN/Inf");
  return acc;
}

Vec SupportDistribution::mean() const {
  return expect([](const Vec& x) { return x; });
}

const Vec& SupportDistribution::top_atom() const {
  std::size_t best = 0;
  for (std::size_t j = 1; j < atoms_.size(); ++j) {
    if (weights_[j] > weights_[best] ||
        (weights_[j] == weights_[best] && lex_less(atoms_[j], atoms_[best])))
      best = j;
  }
  return atoms_[best];
}

std::string SupportDistribution::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    nlohmann::json rec;
    rec["weight"] = weights_[j];
    rec["point"] = std::vector<double>(atoms_[j].data(), atoms_[j].data() + atoms_[j].size());
    arr.push_back(rec);
  }
  return arr.dump();
}

SupportDistribution SupportDistribution::from_json(const std::string& text) {
  nlohmann::json arr = nlohmann::json::parse(text);
  std::vector<Vec> atoms;
  std::vector<double> weights;
  for (const auto& rec : arr) {
    std::vector<double> p = rec.at("point").get<std::vector<double>>();
    atoms.push_back(Eigen::Map<const Vec>(p.data(), static_cast<int>(p.size())));
    weights.push_back(rec.at("weight").get<double>());
  }
  return SupportDistribution(std::move(atoms), std::move(weights));
}

SupportDistribution mix(const std::vector<double>& weights,
                        const std::vector<SupportDistribution>& mus) {
  if (mus.empty() || weights.size() != mus.size())
    throw UsageError("mix: empty input or length mismatch");
  int dim = mus[0].dim();
  // Exact-equality dedup keeps mixture weights independent of input order.
  std::map<std::vector<double>, double> merged;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    if (weights[k] < 0.0) throw UsageError("mix: negative mixture weight");
    if (mus[k].dim() != dim) throw UsageError("mix: dimension mismatch");
    if (weights[k] == 0.0) continue;
    for (int j = 0; j < mus[k].size(); ++j) {
      const Vec& a = mus[k].atoms()[j];
      std::vector<double> key(a.data(), a.data() + a.size());
      merged[key] += weights[k] * mus[k].weights()[j];
    }
  }
  std::vector<Vec> atoms;
  std::vector<double> w;
  double total = 0.0;
  for (const auto& [key, weight] : merged) {
    atoms.push_back(Eigen::Map<const Vec>(key.data(), static_cast<int>(key.size())));
    w.push_back(weight);
    total += weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("mix: weights must sum to 1");
  for (double& x : w) x /= total;
  return SupportDistribution(std::move(atoms), std::move(w));
}

SupportDistribution product(const std::vector<SupportDistribution>& mus,
                            int max_factors, std::size_t max_support) {
  if (mus.empty()) throw UsageError("product: empty factor list");
  if (static_cast<int>(mus.size()) > max_factors)
    throw ResourceError("product: factor cap exceeded");
  std::size_t support = 1;
  int dim = 0;
  for (const auto& mu : mus) {
    support *= static_cast<std::size_t>(mu.size());
    if (support > max_support) throw ResourceError("product: support cap exceeded");
    dim += mu.dim();
  }
  std::vector<Vec> atoms;
  std::vector<double> weights;
  atoms.reserve(support);
  weights.reserve(support);
  std::vector<int> idx(mus.size(), 0);
  for (;;) {
    Vec atom(dim);
    double w = 1.0;
    int off = 0;
    for (std::size_t i = 0; i < mus.size(); ++i) {
      const Vec& a = mus[i].atoms()[idx[i]];
      atom.segment(off, a.size()) = a;
      off += static_cast<int>(a.size());
      w *= mus[i].weights()[idx[i]];
    }
    atoms.push_back(std::move(atom));
    weights.push_back(w);
    // Odometer increment over the factor supports.
    std::size_t i = mus.size();
    while (i > 0) {
      --i;
      if (++idx[i] < mus[i].size()) break;
      idx[i] = 0;
      if (i == 0) {
        // normalize tiny drift from weight products
        double total = 0.0;
        for (double x : weights) total += x;
        for (double& x : weights) x /= total;
        return SupportDistribution(std::move(atoms), std::move(weights));
      }
    }
  }
}

}  // namespace ceq
