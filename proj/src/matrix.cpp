#include "twoloc/matrix.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace twoloc {

namespace {

std::pair<double, double> singular_extremes(const Eigen::MatrixXcd& m) {
  if (m.rows() == 1) {
    const double a = std::abs(m(0, 0));
    return {a, a};
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  return {sv(0), sv(sv.size() - 1)};
}

}  // namespace

MatElem::MatElem(int n, AlgebraDescriptor base) : n_(n), base_(std::move(base)) {
  if (n_ < 1) throw PreconditionError("matrix size must be positive");
  big_.reserve(base_.block_count());
  for (int k : base_.simple_blocks())
    big_.push_back(Eigen::MatrixXcd::Zero(n_ * k, n_ * k));
}

MatElem MatElem::identity(int n, const AlgebraDescriptor& base) {
  MatElem out(n, base);
  for (std::size_t b = 0; b < out.big_.size(); ++b)
    out.big_[b].setIdentity();
  return out;
}

void MatElem::check_index(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw IndexError("matrix index out of range");
}

MatElem MatElem::matrix_unit(int n, const AlgebraDescriptor& base, int i, int j) {
  MatElem out(n, base);
  out.check_index(i, j);
  for (int b = 0; b < base.block_count(); ++b) {
    const int k = base.simple_blocks()[b];
    out.big_[b].block(i * k, j * k, k, k).setIdentity();
  }
  return out;
}

MatElem MatElem::embed(const BaseElement& x, int n, int i, int j) {
  MatElem out(n, x.descriptor());
  out.check_index(i, j);
  out.set_entry(i, j, x);
  return out;
}

MatElem MatElem::scalar_matrix(int n, const AlgebraDescriptor& base,
                               const Eigen::MatrixXcd& coeffs) {
  if (coeffs.rows() != n || coeffs.cols() != n)
    throw DescriptorMismatch("scalar_matrix: coefficient shape mismatch");
  MatElem out(n, base);
  for (int b = 0; b < base.block_count(); ++b) {
    const int k = base.simple_blocks()[b];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.big_[b].block(i * k, j * k, k, k) =
            coeffs(i, j) * Eigen::MatrixXcd::Identity(k, k);
  }
  return out;
}

MatElem MatElem::random_gaussian(int n, const AlgebraDescriptor& base, Rng& rng) {
  MatElem out(n, base);
  for (auto& m : out.big_)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = gaussian(rng);
  return out;
}

MatElem MatElem::from_coords(int n, const AlgebraDescriptor& base,
                             const Eigen::VectorXcd& coords) {
  const int d = base.dim();
  if (coords.size() != static_cast<Eigen::Index>(n) * n * d)
    throw DescriptorMismatch("from_coords: wrong length");
  MatElem out(n, base);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int e_off = (i * n + j) * d;
      for (int b = 0; b < base.block_count(); ++b) {
        const int k = base.simple_blocks()[b];
        const int off = base.block_offset(b);
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < k; ++c)
            out.big_[b](i * k + r, j * k + c) = coords[e_off + off + r * k + c];
      }
    }
  return out;
}

Eigen::VectorXcd MatElem::coords() const {
  const int d = base_.dim();
  Eigen::VectorXcd out(coord_dim());
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const int e_off = (i * n_ + j) * d;
      for (int b = 0; b < base_.block_count(); ++b) {
        const int k = base_.simple_blocks()[b];
        const int off = base_.block_offset(b);
        for (int r = 0; r < k; ++r)
          for (int c = 0; c < k; ++c)
            out[e_off + off + r * k + c] = big_[b](i * k + r, j * k + c);
      }
    }
  return out;
}

BaseElement MatElem::entry(int i, int j) const {
  check_index(i, j);
  BaseElement out = BaseElement::zero(base_);
  for (int b = 0; b < base_.block_count(); ++b) {
    const int k = base_.simple_blocks()[b];
    out.set_block(b, big_[b].block(i * k, j * k, k, k));
  }
  return out;
}

void MatElem::set_entry(int i, int j, const BaseElement& x) {
  check_index(i, j);
  if (x.descriptor() != base_) throw DescriptorMismatch("set_entry: descriptor mismatch");
  for (int b = 0; b < base_.block_count(); ++b) {
    const int k = base_.simple_blocks()[b];
    big_[b].block(i * k, j * k, k, k) = x.block(b);
  }
}

MatElem MatElem::operator+(const MatElem& rhs) const {
  if (n_ != rhs.n_ || base_ != rhs.base_) throw DescriptorMismatch("add: ambient mismatch");
  MatElem out(n_, base_);
  for (std::size_t b = 0; b < big_.size(); ++b) out.big_[b] = big_[b] + rhs.big_[b];
  return out;
}

MatElem MatElem::operator-(const MatElem& rhs) const {
  if (n_ != rhs.n_ || base_ != rhs.base_) throw DescriptorMismatch("sub: ambient mismatch");
  MatElem out(n_, base_);
  for (std::size_t b = 0; b < big_.size(); ++b) out.big_[b] = big_[b] - rhs.big_[b];
  return out;
}

MatElem MatElem::operator*(const MatElem& rhs) const {
  if (n_ != rhs.n_ || base_ != rhs.base_) throw DescriptorMismatch("mul: ambient mismatch");
  MatElem out(n_, base_);
  for (std::size_t b = 0; b < big_.size(); ++b) out.big_[b] = big_[b] * rhs.big_[b];
  return out;
}

MatElem MatElem::operator*(Complex scalar) const {
  MatElem out(n_, base_);
  for (std::size_t b = 0; b < big_.size(); ++b) out.big_[b] = big_[b] * scalar;
  return out;
}

MatElem MatElem::adjoint() const {
  MatElem out(n_, base_);
  for (std::size_t b = 0; b < big_.size(); ++b) out.big_[b] = big_[b].adjoint();
  return out;
}

MatElem MatElem::inverse(const Tolerances& tol) const {
  MatElem out(n_, base_);
  for (std::size_t b = 0; b < big_.size(); ++b) {
    const auto [hi, lo] = singular_extremes(big_[b]);
    (void)hi;
    if (lo <= tol.eps_inv)
      throw SingularElement("matrix element is not invertible at the working tolerance");
    out.big_[b] = big_[b].partialPivLu().inverse();
  }
  return out;
}

bool MatElem::is_invertible(const Tolerances& tol) const {
  for (const auto& m : big_) {
    const auto [hi, lo] = singular_extremes(m);
    (void)hi;
    if (lo <= tol.eps_inv) return false;
  }
  return true;
}

double MatElem::condition() const {
  double worst = 0.0;
  for (const auto& m : big_) {
    const auto [hi, lo] = singular_extremes(m);
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, hi / lo);
  }
  return worst;
}

double MatElem::norm() const {
  double best = 0.0;
  for (const auto& m : big_) best = std::max(best, singular_extremes(m).first);
  return best;
}

MatElem MatElem::corner(int m) const {
  if (m < 1 || m > n_) throw IndexError("corner size out of range");
  MatElem out(m, base_);
  for (int b = 0; b < base_.block_count(); ++b) {
    const int k = base_.simple_blocks()[b];
    out.big_[b] = big_[b].topLeftCorner(m * k, m * k);
  }
  return out;
}

MatElem MatElem::pad(const MatElem& small, int n) {
  if (n < small.n_) throw IndexError("pad target smaller than source");
  MatElem out(n, small.base_);
  for (int b = 0; b < small.base_.block_count(); ++b) {
    const int k = small.base_.simple_blocks()[b];
    out.big_[b].topLeftCorner(small.n_ * k, small.n_ * k) = small.big_[b];
  }
  return out;
}

MatElem separating_diagonal(int n, const AlgebraDescriptor& base) {
  if (n < 2) throw PreconditionError("probe elements need size >= 2");
  MatElem out(n, base);
  for (int i = 0; i < n; ++i) {
    const double w = std::ldexp(1.0, -(i + 1));  // 2^-(i+1), exact
    for (int b = 0; b < base.block_count(); ++b) {
      const int k = base.simple_blocks()[b];
      out.mutable_block(b).block(i * k, i * k, k, k) =
          w * Eigen::MatrixXcd::Identity(k, k);
    }
  }
  return out;
}

MatElem upper_shift(int n, const AlgebraDescriptor& base) {
  if (n < 2) throw PreconditionError("probe elements need size >= 2");
  MatElem out(n, base);
  for (int i = 0; i + 1 < n; ++i) {
    for (int b = 0; b < base.block_count(); ++b) {
      const int k = base.simple_blocks()[b];
      out.mutable_block(b).block(i * k, (i + 1) * k, k, k).setIdentity();
    }
  }
  return out;
}

LinSubspace::LinSubspace(int n, AlgebraDescriptor base, Eigen::MatrixXcd basis)
    : n_(n), base_(std::move(base)), basis_(std::move(basis)) {
  if (basis_.rows() != static_cast<Eigen::Index>(n_) * n_ * base_.dim())
    throw DescriptorMismatch("subspace basis has wrong ambient dimension");
}

MatElem LinSubspace::element(int index) const {
  if (index < 0 || index >= dim()) throw IndexError("basis index out of range");
  return MatElem::from_coords(n_, base_, basis_.col(index));
}

MatElem LinSubspace::combine(const Eigen::VectorXcd& coeffs) const {
  if (coeffs.size() != dim()) throw DescriptorMismatch("combine: wrong coefficient count");
  return MatElem::from_coords(n_, base_, basis_ * coeffs);
}

MatElem LinSubspace::random_element(Rng& rng) const {
  Eigen::VectorXcd coeffs(dim());
  for (int i = 0; i < dim(); ++i) coeffs[i] = gaussian(rng);
  return combine(coeffs);
}

double LinSubspace::membership_residual(const MatElem& x) const {
  Eigen::VectorXcd v = x.coords();
  const double nv = v.norm();
  if (nv == 0.0) return 0.0;
  Eigen::VectorXcd proj = basis_ * (basis_.adjoint() * v);
  return (v - proj).norm() / nv;
}

Eigen::MatrixXcd nullspace_basis(const Eigen::MatrixXcd& op, double rel_cutoff,
                                 double scale_floor) {
  const Eigen::Index cols = op.cols();
  Eigen::MatrixXcd reduced = op;
  if (op.rows() > cols) {
    // QR reduction keeps the singular values and shrinks the SVD input.
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(op);
    reduced = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(reduced, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  const double threshold = rel_cutoff * std::max(top, scale_floor);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

Eigen::MatrixXcd nullspace_basis_gram(const Eigen::MatrixXcd& op, double rel_cutoff,
                                      double scale_floor) {
  const Eigen::Index cols = op.cols();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.adjoint() * op);
  if (es.info() != Eigen::Success) return nullspace_basis(op, rel_cutoff, scale_floor);
  const auto& ev = es.eigenvalues();  // ascending
  const double lam_max = cols > 0 ? std::max(0.0, ev(cols - 1)) : 0.0;
  const double sigma_scale = std::max(std::sqrt(lam_max), scale_floor);
  // The eigenvalue route cannot resolve singular values below about
  // sqrt(machine epsilon) of the scale; keep the threshold above that noise.
  const double lam_threshold =
      std::max(rel_cutoff * rel_cutoff * sigma_scale * sigma_scale,
               1e-13 * std::max(lam_max, scale_floor * scale_floor));
  Eigen::Index null_count = 0;
  while (null_count < cols && ev(null_count) <= lam_threshold) ++null_count;
  Eigen::MatrixXcd basis = es.eigenvectors().leftCols(null_count);
  if (null_count > 0 && (op * basis).norm() > 1e-6 * std::max(1.0, sigma_scale))
    return nullspace_basis(op, rel_cutoff, scale_floor);
  return basis;
}

Eigen::MatrixXcd sylvester_operator(const MatElem& x, const MatElem& y) {
  const int n = x.size();
  const auto& base = x.base();
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  Eigen::MatrixXcd op(dim, dim);
  for (Eigen::Index t = 0; t < dim; ++t) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e[t] = 1.0;
    MatElem a = MatElem::from_coords(n, base, e);
    op.col(t) = (y * a - a * x).coords();
  }
  return op;
}

Eigen::MatrixXcd stacked_sylvester(std::span<const std::pair<MatElem, MatElem>> pairs,
                                   const Eigen::MatrixXcd& columns, int n,
                                   const AlgebraDescriptor& base) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  const Eigen::Index m = columns.cols();
  Eigen::MatrixXcd op(static_cast<Eigen::Index>(pairs.size()) * dim, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    MatElem a = MatElem::from_coords(n, base, columns.col(c));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [x, y] = pairs[p];
      op.block(static_cast<Eigen::Index>(p) * dim, c, dim, 1) = (y * a - a * x).coords();
    }
  }
  return op;
}

LinSubspace solve_commutant(std::span<const MatElem> targets, const Tolerances& tol) {
  if (targets.empty()) throw PreconditionError("commutant needs at least one target");
  const int n = targets[0].size();
  const auto& base = targets[0].base();
  for (const auto& t : targets)
    if (t.size() != n || t.base() != base)
      throw DescriptorMismatch("commutant targets must share the ambient algebra");
  std::vector<std::pair<MatElem, MatElem>> pairs;
  pairs.reserve(targets.size());
  double scale = 0.0;
  for (const auto& t : targets) {
    pairs.emplace_back(t, t);
    scale = std::max(scale, 2.0 * t.norm());
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  Eigen::MatrixXcd op =
      stacked_sylvester(pairs, Eigen::MatrixXcd::Identity(dim, dim), n, base);
  return LinSubspace(n, base, nullspace_basis(op, tol.rank_cutoff, scale));
}

std::string to_string(SubspacePattern p) {
  switch (p) {
    case SubspacePattern::Diagonal: return "diagonal";
    case SubspacePattern::ToeplitzUpper: return "toeplitz-upper";
    case SubspacePattern::Full: return "full";
    case SubspacePattern::Other: return "other";
  }
  return "other";
}

SubspacePattern classify_structure(const LinSubspace& s, const Tolerances& tol) {
  const int n = s.ambient_n();
  bool diagonal = true;
  bool toeplitz = true;
  for (int idx = 0; idx < s.dim() && (diagonal || toeplitz); ++idx) {
    MatElem m = s.element(idx);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double entry_norm = m.entry(i, j).coords().norm();
        if (i != j && entry_norm > tol.eps) diagonal = false;
        if (j < i && entry_norm > tol.eps) toeplitz = false;
      }
    // Toeplitz: entries constant along each diagonal offset.
    for (int off = 0; off < n && toeplitz; ++off)
      for (int i = 1; i + off < n && toeplitz; ++i)
        if ((m.entry(i, i + off) - m.entry(0, off)).coords().norm() > tol.eps)
          toeplitz = false;
  }
  if (s.dim() > 0 && diagonal) return SubspacePattern::Diagonal;
  if (s.dim() > 0 && toeplitz) return SubspacePattern::ToeplitzUpper;
  if (s.dim() == n * n * s.base().dim()) return SubspacePattern::Full;
  return SubspacePattern::Other;
}

MatElem regroup(const MatElem& x) {
  const int n = x.size();
  if (n % 2 != 0) throw PreconditionError("regroup needs even size");
  const int m = n / 2;
  MatElem out(2, AlgebraDescriptor::matrix_over(x.base(), m));
  // Flattened block data is index-compatible; only the contract changes.
  for (std::size_t b = 0; b < x.blocks().size(); ++b) out.mutable_block(b) = x.blocks()[b];
  return out;
}

MatElem regroup_inverse(const MatElem& y, int n, const AlgebraDescriptor& base) {
  if (y.size() != 2) throw PreconditionError("regroup_inverse expects a 2 x 2 element");
  if (n % 2 != 0) throw PreconditionError("regroup_inverse needs even target size");
  if (AlgebraDescriptor::matrix_over(base, n / 2) != y.base())
    throw DescriptorMismatch("regroup_inverse: base does not match");
  MatElem out(n, base);
  for (std::size_t b = 0; b < y.blocks().size(); ++b) out.mutable_block(b) = y.blocks()[b];
  return out;
}

FourProjectionEmbedding::FourProjectionEmbedding(std::array<MatElem, 4> projections,
                                                 std::array<MatElem, 4> isometries,
                                                 const Tolerances& tol)
    : proj_(std::move(projections)), isom_(std::move(isometries)) {
  const int n = proj_[0].size();
  const auto& base = proj_[0].base();
  MatElem sum(n, base);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      MatElem prod = proj_[i] * proj_[j];
      MatElem expect = (i == j) ? proj_[i] : MatElem(n, base);
      if ((prod - expect).norm() > tol.eps)
        throw PreconditionError("projections fail orthogonality/idempotence");
    }
    sum = sum + proj_[i];
  }
  if ((sum - MatElem::identity(n, base)).norm() > tol.eps)
    throw PreconditionError("projections do not sum to the identity");

  for (int i = 0; i < 4; ++i) {
    MatElem left = isom_[i] * isom_[i].adjoint();
    MatElem right = isom_[i].adjoint() * isom_[i];
    if ((left - proj_[i]).norm() > tol.eps || (right - proj_[0]).norm() > tol.eps)
      throw PreconditionError("isometries do not realize the projections");
  }

  // Diagonal 0/1 support of the first projection fixes the corner indexing.
  for (int t = 0; t < n; ++t) {
    const BaseElement d = proj_[0].entry(t, t);
    const double v = d.coords().norm();
    if (v > tol.eps) {
      if ((d - BaseElement::unit(base)).norm() > tol.eps)
        throw PreconditionError("first projection must be a 0/1 diagonal");
      support_.push_back(t);
    }
  }
  m_ = static_cast<int>(support_.size());
  if (4 * m_ != n) throw PreconditionError("projection supports must split the size evenly");
  corner_base_ = AlgebraDescriptor::matrix_over(base, m_);
}

BaseElement FourProjectionEmbedding::corner_extract(const MatElem& x) const {
  const auto& base = x.base();
  BaseElement out = BaseElement::zero(corner_base_);
  for (int b = 0; b < base.block_count(); ++b) {
    const int k = base.simple_blocks()[b];
    Eigen::MatrixXcd m(m_ * k, m_ * k);
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c)
        m.block(r * k, c * k, k, k) =
            x.blocks()[b].block(support_[r] * k, support_[c] * k, k, k);
    out.set_block(b, m);
  }
  return out;
}

MatElem FourProjectionEmbedding::corner_expand(const BaseElement& x) const {
  const int n = proj_[0].size();
  const auto& base = proj_[0].base();
  MatElem out(n, base);
  for (int b = 0; b < base.block_count(); ++b) {
    const int k = base.simple_blocks()[b];
    const Eigen::MatrixXcd m = x.block(b);
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c)
        out.mutable_block(b).block(support_[r] * k, support_[c] * k, k, k) =
            m.block(r * k, c * k, k, k);
  }
  return out;
}

MatElem FourProjectionEmbedding::apply(const MatElem& x) const {
  MatElem out(4, corner_base_);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out.set_entry(i, j, corner_extract(isom_[i].adjoint() * x * isom_[j]));
  return out;
}

MatElem FourProjectionEmbedding::apply_inverse(const MatElem& y) const {
  const int n = proj_[0].size();
  MatElem out(n, proj_[0].base());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out = out + isom_[i] * corner_expand(y.entry(i, j)) * isom_[j].adjoint();
  return out;
}

}  // namespace twoloc
