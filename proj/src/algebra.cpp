#include "twoloc/algebra.hpp"

#include <Eigen/SVD>
#include <sstream>

namespace twoloc {

namespace {

double smallest_singular_value(const Eigen::MatrixXcd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double largest_singular_value(const Eigen::MatrixXcd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

AlgebraDescriptor AlgebraDescriptor::scalars() {
  AlgebraDescriptor a;
  a.kind_ = AlgebraKind::Scalars;
  a.summands_.clear();
  a.finalize();
  return a;
}

AlgebraDescriptor AlgebraDescriptor::full_matrix_block(int k) {
  if (k < 1) throw PreconditionError("matrix block size must be positive");
  AlgebraDescriptor a;
  a.kind_ = AlgebraKind::FullMatrixBlock;
  a.block_size_ = k;
  a.finalize();
  return a;
}

AlgebraDescriptor AlgebraDescriptor::direct_sum(std::vector<AlgebraDescriptor> summands) {
  if (summands.empty()) throw PreconditionError("direct sum needs at least one summand");
  AlgebraDescriptor a;
  a.kind_ = AlgebraKind::DirectSum;
  a.summands_ = std::move(summands);
  a.finalize();
  return a;
}

AlgebraDescriptor AlgebraDescriptor::finite_functions(int points) {
  if (points < 1) throw PreconditionError("finite-functions needs at least one point");
  AlgebraDescriptor a;
  a.kind_ = AlgebraKind::FiniteFunctions;
  a.points_ = points;
  a.finalize();
  return a;
}

AlgebraDescriptor AlgebraDescriptor::matrix_over(const AlgebraDescriptor& base, int m) {
  if (m < 1) throw PreconditionError("matrix size must be positive");
  std::vector<AlgebraDescriptor> parts;
  parts.reserve(base.simple_blocks().size());
  for (int k : base.simple_blocks()) parts.push_back(full_matrix_block(m * k));
  if (parts.size() == 1) return parts.front();
  return direct_sum(std::move(parts));
}

void AlgebraDescriptor::finalize() {
  blocks_.clear();
  switch (kind_) {
    case AlgebraKind::Scalars:
      blocks_.push_back(1);
      break;
    case AlgebraKind::FullMatrixBlock:
      blocks_.push_back(block_size_);
      break;
    case AlgebraKind::FiniteFunctions:
      blocks_.assign(static_cast<std::size_t>(points_), 1);
      break;
    case AlgebraKind::DirectSum:
      for (const auto& s : summands_)
        blocks_.insert(blocks_.end(), s.simple_blocks().begin(), s.simple_blocks().end());
      break;
  }
  offsets_.clear();
  dim_ = 0;
  for (int k : blocks_) {
    offsets_.push_back(dim_);
    dim_ += k * k;
  }
}

bool AlgebraDescriptor::commutative() const {
  for (int k : blocks_)
    if (k > 1) return false;
  return true;
}

bool AlgebraDescriptor::operator==(const AlgebraDescriptor& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case AlgebraKind::Scalars:
      return true;
    case AlgebraKind::FullMatrixBlock:
      return block_size_ == other.block_size_;
    case AlgebraKind::FiniteFunctions:
      return points_ == other.points_;
    case AlgebraKind::DirectSum:
      return summands_ == other.summands_;
  }
  return false;
}

BaseElement::BaseElement(AlgebraDescriptor descriptor, Eigen::VectorXcd coords)
    : descriptor_(std::move(descriptor)), coords_(std::move(coords)) {
  if (coords_.size() != descriptor_.dim())
    throw DescriptorMismatch("coordinate vector length does not match algebra dimension");
}

BaseElement BaseElement::zero(const AlgebraDescriptor& a) {
  return BaseElement(a, Eigen::VectorXcd::Zero(a.dim()));
}

BaseElement BaseElement::unit(const AlgebraDescriptor& a) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(a.dim());
  for (int b = 0; b < a.block_count(); ++b) {
    const int k = a.simple_blocks()[b];
    for (int r = 0; r < k; ++r) c[a.block_offset(b) + r * k + r] = 1.0;
  }
  return BaseElement(a, std::move(c));
}

BaseElement BaseElement::basis(const AlgebraDescriptor& a, int index) {
  if (index < 0 || index >= a.dim()) throw IndexError("basis index out of range");
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(a.dim());
  c[index] = 1.0;
  return BaseElement(a, std::move(c));
}

BaseElement BaseElement::random_gaussian(const AlgebraDescriptor& a, Rng& rng) {
  Eigen::VectorXcd c(a.dim());
  for (int i = 0; i < a.dim(); ++i) c[i] = gaussian(rng);
  return BaseElement(a, std::move(c));
}

Eigen::MatrixXcd BaseElement::block(int b) const {
  const int k = descriptor_.simple_blocks()[b];
  const int off = descriptor_.block_offset(b);
  Eigen::MatrixXcd m(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) m(r, c) = coords_[off + r * k + c];
  return m;
}

void BaseElement::set_block(int b, const Eigen::MatrixXcd& m) {
  const int k = descriptor_.simple_blocks()[b];
  const int off = descriptor_.block_offset(b);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) coords_[off + r * k + c] = m(r, c);
}

BaseElement BaseElement::operator+(const BaseElement& rhs) const {
  if (descriptor_ != rhs.descriptor_) throw DescriptorMismatch("add: descriptor mismatch");
  return BaseElement(descriptor_, coords_ + rhs.coords_);
}

BaseElement BaseElement::operator-(const BaseElement& rhs) const {
  if (descriptor_ != rhs.descriptor_) throw DescriptorMismatch("sub: descriptor mismatch");
  return BaseElement(descriptor_, coords_ - rhs.coords_);
}

BaseElement BaseElement::operator*(const BaseElement& rhs) const {
  if (descriptor_ != rhs.descriptor_) throw DescriptorMismatch("mul: descriptor mismatch");
  BaseElement out = zero(descriptor_);
  for (int b = 0; b < descriptor_.block_count(); ++b)
    out.set_block(b, block(b) * rhs.block(b));
  return out;
}

BaseElement BaseElement::operator*(Complex scalar) const {
  return BaseElement(descriptor_, coords_ * scalar);
}

BaseElement BaseElement::adjoint() const {
  BaseElement out = zero(descriptor_);
  for (int b = 0; b < descriptor_.block_count(); ++b)
    out.set_block(b, block(b).adjoint());
  return out;
}

BaseElement BaseElement::inverse(const Tolerances& tol) const {
  BaseElement out = zero(descriptor_);
  for (int b = 0; b < descriptor_.block_count(); ++b) {
    Eigen::MatrixXcd m = block(b);
    if (smallest_singular_value(m) <= tol.eps_inv)
      throw SingularElement("element is not invertible at the working tolerance");
    out.set_block(b, m.partialPivLu().inverse());
  }
  return out;
}

bool BaseElement::is_invertible(const Tolerances& tol) const {
  for (int b = 0; b < descriptor_.block_count(); ++b)
    if (smallest_singular_value(block(b)) <= tol.eps_inv) return false;
  return true;
}

double BaseElement::norm() const {
  double best = 0.0;
  for (int b = 0; b < descriptor_.block_count(); ++b)
    best = std::max(best, largest_singular_value(block(b)));
  return best;
}

std::optional<std::pair<BaseElement, BaseElement>> find_annihilator_witness(
    const AlgebraDescriptor& a, const Tolerances& tol) {
  for (int b = 0; b < a.block_count(); ++b) {
    const int k = a.simple_blocks()[b];
    if (k < 2) continue;
    // Nilpotent/idempotent pair inside the first non-commutative block.
    const int off = a.block_offset(b);
    BaseElement x = BaseElement::basis(a, off + 0 * k + 1);  // E_{0,1}
    BaseElement y = BaseElement::basis(a, off + 0 * k + 0);  // E_{0,0}
    if ((x * y).norm() <= tol.eps && (y * x).norm() > tol.delta_m)
      return std::make_pair(x, y);
  }
  return std::nullopt;
}

namespace {

BaseElement apply_map(const Eigen::MatrixXcd& map, const BaseElement& x) {
  return BaseElement(x.descriptor(), map * x.coords());
}

}  // namespace

BaseElement jordan_split(const Eigen::MatrixXcd& jordan_map, const AlgebraDescriptor& a,
                         const Tolerances& tol) {
  const int d = a.dim();
  if (jordan_map.rows() != d || jordan_map.cols() != d)
    throw DescriptorMismatch("jordan_split: map shape does not match algebra dimension");

  // Precondition: bijective and Jordan (polarized square identity on basis pairs).
  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(jordan_map);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= tol.rank_cutoff * std::max(1.0, sv(0)))
      throw NotJordan("map is not bijective");
  }
  for (int s = 0; s < d; ++s) {
    BaseElement bs = apply_map(jordan_map, BaseElement::basis(a, s));
    for (int t = 0; t < d; ++t) {
      BaseElement bt_el = BaseElement::basis(a, t);
      BaseElement lhs = apply_map(jordan_map,
                                  BaseElement::basis(a, s) * bt_el + bt_el * BaseElement::basis(a, s));
      BaseElement bt = apply_map(jordan_map, bt_el);
      BaseElement rhs = bs * bt + bt * bs;
      if ((lhs - rhs).norm() > tol.eps_auto * 10.0) {
        std::ostringstream msg;
        msg << "Jordan identity fails on basis pair (" << s << ", " << t << ")";
        throw NotJordan(msg.str());
      }
    }
  }

  BaseElement z = BaseElement::zero(a);
  for (int b = 0; b < a.block_count(); ++b) {
    const int k = a.simple_blocks()[b];
    const int off = a.block_offset(b);
    auto unit_at = [&](int r, int c) { return BaseElement::basis(a, off + r * k + c); };

    bool multiplicative = true;
    bool anti = true;
    for (int r = 0; r < k && (multiplicative || anti); ++r)
      for (int c = 0; c < k && (multiplicative || anti); ++c)
        for (int r2 = 0; r2 < k && (multiplicative || anti); ++r2)
          for (int c2 = 0; c2 < k && (multiplicative || anti); ++c2) {
            BaseElement img_prod = apply_map(jordan_map, unit_at(r, c) * unit_at(r2, c2));
            BaseElement jx = apply_map(jordan_map, unit_at(r, c));
            BaseElement jy = apply_map(jordan_map, unit_at(r2, c2));
            if ((jx * jy - img_prod).norm() > tol.eps_auto * 10.0) multiplicative = false;
            if ((jy * jx - img_prod).norm() > tol.eps_auto * 10.0) anti = false;
          }

    if (!multiplicative && !anti) {
      std::ostringstream msg;
      msg << "block " << b << " is neither multiplicative nor anti-multiplicative";
      throw UndecidableSplit(msg.str());
    }
    // Commutative blocks satisfy both; they count as multiplicative.
    if (multiplicative) {
      BaseElement block_unit = BaseElement::zero(a);
      for (int r = 0; r < k; ++r) block_unit = block_unit + unit_at(r, r);
      z = z + apply_map(jordan_map, block_unit);
    }
  }

  // The returned element must be a central projection.
  if ((z * z - z).norm() > tol.eps_auto * 10.0)
    throw UndecidableSplit("detected part sum is not idempotent");
  for (int t = 0; t < d; ++t) {
    BaseElement bt = BaseElement::basis(a, t);
    if ((z * bt - bt * z).norm() > tol.eps_auto * 10.0)
      throw UndecidableSplit("detected part sum is not central");
  }
  return z;
}

}  // namespace twoloc
