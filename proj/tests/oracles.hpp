#pragma once

// Test-only reference implementations, kept independent of the library's
// compute paths: naive entrywise products instead of the per-block dense
// product, and elimination-based rank instead of SVD cutoffs.

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "twoloc/matrix.hpp"

namespace twoloc::oracle {

/// Product in the base algebra straight from the structure constants of the
/// canonical basis (matrix units per simple block, row-major).
inline BaseElement slow_base_mul(const BaseElement& x, const BaseElement& y) {
  const auto& a = x.descriptor();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(a.dim());
  for (int b = 0; b < a.block_count(); ++b) {
    const int k = a.simple_blocks()[b];
    const int off = a.block_offset(b);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c)
        for (int t = 0; t < k; ++t)
          out[off + r * k + c] +=
              x.coords()[off + r * k + t] * y.coords()[off + t * k + c];
  }
  return BaseElement(a, std::move(out));
}

/// Matrix product over the base algebra via the entry convolution formula.
inline MatElem slow_mat_mul(const MatElem& x, const MatElem& y) {
  const int n = x.size();
  MatElem out(n, x.base());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      BaseElement acc = BaseElement::zero(x.base());
      for (int t = 0; t < n; ++t)
        acc = acc + slow_base_mul(x.entry(i, t), y.entry(t, j));
      out.set_entry(i, j, acc);
    }
  return out;
}

/// Rank by Gaussian elimination with partial pivoting.
inline int gauss_rank(Eigen::MatrixXcd m, double tol = 1e-9) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  double scale = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) scale = std::max(scale, std::abs(m(r, c)));
  if (scale == 0.0) return 0;
  int rank = 0;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < cols && row < rows; ++col) {
    Eigen::Index pivot = row;
    for (Eigen::Index r = row + 1; r < rows; ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (std::abs(m(pivot, col)) <= tol * scale) continue;
    m.row(pivot).swap(m.row(row));
    for (Eigen::Index r = row + 1; r < rows; ++r) {
      const Complex f = m(r, col) / m(row, col);
      m.row(r) -= f * m.row(row);
    }
    ++row;
    ++rank;
  }
  return rank;
}

/// Dimension of the joint solution space of y_i a = a x_i, built from the
/// naive product and decided by elimination.
inline int slow_intertwiner_dim(const std::vector<std::pair<MatElem, MatElem>>& pairs) {
  const int n = pairs.front().first.size();
  const auto& base = pairs.front().first.base();
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  Eigen::MatrixXcd op(static_cast<Eigen::Index>(pairs.size()) * dim, dim);
  for (Eigen::Index t = 0; t < dim; ++t) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e[t] = 1.0;
    MatElem a = MatElem::from_coords(n, base, e);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      op.block(static_cast<Eigen::Index>(p) * dim, t, dim, 1) =
          (slow_mat_mul(pairs[p].second, a) - slow_mat_mul(a, pairs[p].first)).coords();
  }
  return static_cast<int>(dim) - gauss_rank(std::move(op));
}

inline int slow_commutant_dim(const MatElem& target) {
  return slow_intertwiner_dim({{target, target}});
}

}  // namespace twoloc::oracle
