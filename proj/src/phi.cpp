#include "ceq/phi.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <memory>
#include <cmath>

namespace ceq {

FeatureMap affine_map(int d, double radius) {
  if (d <= 0 || radius <= 0.0) throw UsageError("affine_map: bad arguments");
  FeatureMap m;
  m.in_dim = d;
  m.out_dim = d + 1;
  m.eval = [d](const Vec& x) {
    if (x.size() != d) throw UsageError("affine_map: dimension mismatch");
    Vec out(d + 1);
    out[0] = 1.0;
    out.tail(d) = x;
    return out;
  };
  m.norm_bound = std::sqrt(1.0 + radius * radius);
  m.linear_index.resize(d);
  for (int r = 0; r < d; ++r) m.linear_index[r] = 1 + r;
  m.constant_index = 0;
  return m;
}

namespace {

// Exponent vectors of total degree <= deg, ascending by degree, each degree
// block ordered lexicographically. Degree 1 therefore lists e_1..e_d in
// coordinate order... except lexicographic on exponents puts e_d first; fix
// the order explicitly so linear_index stays the natural one.
void exponents_of_degree(int d, int deg, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(d, 0);
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == d - 1) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[pos] = e;
      rec(pos + 1, remaining - e);
    }
  };
  rec(0, deg);
}

}  // namespace

FeatureMap monomial_map(int d, int degree, double radius) {
  if (d <= 0 || degree < 1 || radius <= 0.0)
    throw UsageError("monomial_map: bad arguments");
  auto exps = std::make_shared<std::vector<std::vector<int>>>();
  exps->push_back(std::vector<int>(d, 0));
  for (int deg = 1; deg <= degree; ++deg) exponents_of_degree(d, deg, *exps);
  const int k = static_cast<int>(exps->size());
  FeatureMap m;
  m.in_dim = d;
  m.out_dim = k;
  m.eval = [d, exps](const Vec& x) {
    if (x.size() != d) throw UsageError("monomial_map: dimension mismatch");
    Vec out(static_cast<int>(exps->size()));
    for (std::size_t j = 0; j < exps->size(); ++j) {
      double v = 1.0;
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < (*exps)[j][c]; ++e) v *= x[c];
      out[static_cast<int>(j)] = v;
    }
    return out;
  };
  m.norm_bound = std::sqrt(static_cast<double>(k)) *
                 std::pow(std::max(1.0, radius), degree);
  // degree-1 block: exponent e_r sits where the lex order of that block puts
  // it; locate each explicitly.
  m.linear_index.assign(d, -1);
  m.constant_index = 0;
  for (int j = 0; j < k; ++j) {
    const auto& a = (*exps)[j];
    int total = 0, where = -1;
    for (int c = 0; c < d; ++c) {
      total += a[c];
      if (a[c] == 1) where = c;
    }
    if (total == 1) m.linear_index[where] = j;
  }
  return m;
}

PointMap LinearTransform::as_point_map() const {
  LinearTransform copy = *this;
  PointMap p;
  p.dim = static_cast<int>(K.rows());
  p.eval = [copy](const Vec& x) { return copy.apply(x); };
  return p;
}

Vec flatten_rowmajor(const Mat& K) {
  Vec v(K.size());
  const int cols = static_cast<int>(K.cols());
  for (int r = 0; r < K.rows(); ++r)
    for (int c = 0; c < cols; ++c) v[r * cols + c] = K(r, c);
  return v;
}

Mat unflatten_rowmajor(const Vec& v, int rows, int cols) {
  if (v.size() != static_cast<long>(rows) * cols)
    throw UsageError("unflatten_rowmajor: size mismatch");
  Mat K(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) K(r, c) = v[r * cols + c];
  return K;
}

Mat identity_transform_matrix(const FeatureMap& m) {
  if (static_cast<int>(m.linear_index.size()) != m.in_dim)
    throw UsageError("identity_transform_matrix: map has no affine sub-block");
  Mat K = Mat::Zero(m.in_dim, m.out_dim);
  for (int r = 0; r < m.in_dim; ++r) {
    int j = m.linear_index[r];
    if (j < 0 || j >= m.out_dim)
      throw UsageError("identity_transform_matrix: map has no affine sub-block");
    K(r, j) = 1.0;
  }
  return K;
}

double default_transform_bound(const FeatureMap& m, const ConvexBody& body) {
  if (m.in_dim != body.dim)
    throw UsageError("default_transform_bound: dimension mismatch");
  std::vector<Vec> probes;
  probes.push_back(body.start);
  for (int j = 0; j < body.dim; ++j) {
    Vec e = Vec::Zero(body.dim);
    e[j] = body.inner_radius;
    probes.push_back(body.start + e);
    probes.push_back(body.start - e);
  }
  Mat G = Mat::Zero(m.out_dim, m.out_dim);
  for (const Vec& p : probes) {
    Vec f = m.eval(p);
    G += f * f.transpose() / static_cast<double>(probes.size());
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  double rho = std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
  rho = std::clamp(rho, 1e-2, 1.0);
  double d = std::sqrt(static_cast<double>(m.out_dim)) *
             std::max(body.outer_radius, 1.0) / rho;
  double id_norm = 2.0 * std::sqrt(static_cast<double>(m.in_dim));
  return std::max(d, id_norm);
}

Halfspace endomorphism_cut(const ConvexBody& body, const LinearTransform& t,
                           const Vec& witness_x) {
  auto sep = body.separate(t.apply(witness_x));
  if (!sep)
    throw UsageError("endomorphism_cut: witness image lies inside the body");
  Vec f = t.m.eval(witness_x);
  // a'(K m(w)) = <a m(w)', K>_F, flattened row-major.
  Mat coeff = sep->a * f.transpose();
  return Halfspace{flatten_rowmajor(coeff), sep->b};
}

SemiSeparation semi_separate(const ConvexBody& body, const LinearTransform& t,
                             double eps, SemiSeparateMode mode) {
  if (eps <= 0.0) throw UsageError("semi_separate: eps must be positive");
  if (t.m.in_dim != body.dim || t.K.rows() != body.dim ||
      t.K.cols() != t.m.out_dim)
    throw UsageError("semi_separate: dimension mismatch");
  PointMap phi = t.as_point_map();
  SemiSeparation out;
  out.detail = mode == SemiSeparateMode::Quadratic
                   ? qefp_solve(phi, body, 0.5 * eps)
                   : cefp_fptas(phi, body, 0.5 * eps, body.start);
  if (out.detail.is_certificate())
    out.safe = out.detail.certificate;
  else
    out.not_endomorphism = out.detail.not_endomorphism;
  return out;
}

}  // namespace ceq
