#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "twoloc/common.hpp"

namespace twoloc {

enum class AlgebraKind { Scalars, FullMatrixBlock, DirectSum, FiniteFunctions };

/// Description of a finite-dimensional unital *-algebra: the complex numbers,
/// a full matrix block M_k(C), a direct sum of such algebras, or the functions
/// on a finite point set (pointwise product). Internally every instance
/// flattens to a list of simple matrix blocks; the canonical basis enumerates
/// each block's matrix units in row-major order, blocks in descriptor order.
class AlgebraDescriptor {
 public:
  AlgebraDescriptor() { finalize(); }  // scalars

  static AlgebraDescriptor scalars();
  static AlgebraDescriptor full_matrix_block(int k);
  static AlgebraDescriptor direct_sum(std::vector<AlgebraDescriptor> summands);
  static AlgebraDescriptor finite_functions(int points);
  /// The algebra of m x m matrices over `base`, flattened to simple blocks.
  static AlgebraDescriptor matrix_over(const AlgebraDescriptor& base, int m);

  AlgebraKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int block_size() const { return block_size_; }    // FullMatrixBlock only
  int points() const { return points_; }            // FiniteFunctions only
  const std::vector<AlgebraDescriptor>& summands() const { return summands_; }

  /// Sizes of the simple blocks in canonical order.
  const std::vector<int>& simple_blocks() const { return blocks_; }
  /// Coordinate offset of simple block b.
  int block_offset(int b) const { return offsets_[b]; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  bool commutative() const;

  bool operator==(const AlgebraDescriptor& other) const;
  bool operator!=(const AlgebraDescriptor& other) const { return !(*this == other); }

 private:
  AlgebraKind kind_ = AlgebraKind::Scalars;
  int block_size_ = 0;
  int points_ = 0;
  std::vector<AlgebraDescriptor> summands_;
  std::vector<int> blocks_;
  std::vector<int> offsets_;
  int dim_ = 0;

  void finalize();
};

/// An element of the base algebra, held as its canonical coordinate vector.
class BaseElement {
 public:
  BaseElement(AlgebraDescriptor descriptor, Eigen::VectorXcd coords);

  static BaseElement zero(const AlgebraDescriptor& a);
  static BaseElement unit(const AlgebraDescriptor& a);
  static BaseElement basis(const AlgebraDescriptor& a, int index);
  static BaseElement random_gaussian(const AlgebraDescriptor& a, Rng& rng);

  const AlgebraDescriptor& descriptor() const { return descriptor_; }
  const Eigen::VectorXcd& coords() const { return coords_; }

  /// Dense view of simple block b (copies; blocks are tiny).
  Eigen::MatrixXcd block(int b) const;
  void set_block(int b, const Eigen::MatrixXcd& m);

  BaseElement operator+(const BaseElement& rhs) const;
  BaseElement operator-(const BaseElement& rhs) const;
  BaseElement operator*(const BaseElement& rhs) const;
  BaseElement operator*(Complex scalar) const;
  BaseElement adjoint() const;

  /// Two-sided inverse; throws SingularElement when any block has smallest
  /// singular value at or below tol.eps_inv.
  BaseElement inverse(const Tolerances& tol = default_tolerances()) const;
  bool is_invertible(const Tolerances& tol = default_tolerances()) const;

  /// Operator norm: the largest singular value over the simple blocks
  /// (max modulus on commutative instances).
  double norm() const;

 private:
  AlgebraDescriptor descriptor_;
  Eigen::VectorXcd coords_;
};

inline BaseElement operator*(Complex scalar, const BaseElement& x) { return x * scalar; }

/// Searches for a pair (x, y) with x*y = 0 and ||y*x|| > tol.delta_m.
/// Any instance containing a matrix block of size >= 2 yields the embedded
/// nilpotent/idempotent pair; commutative instances have no such pair.
std::optional<std::pair<BaseElement, BaseElement>> find_annihilator_witness(
    const AlgebraDescriptor& a, const Tolerances& tol = default_tolerances());

/// Splits a Jordan automorphism (given as its coordinate matrix) into its
/// multiplicative and anti-multiplicative parts: returns the central
/// projection z such that x -> J(x)*z is a homomorphism and
/// x -> J(x)*(1-z) an anti-homomorphism. Detection is per simple block;
/// one-dimensional blocks count as multiplicative.
/// Throws NotJordan when the input fails the Jordan precondition and
/// UndecidableSplit when a block satisfies neither option.
BaseElement jordan_split(const Eigen::MatrixXcd& jordan_map,
                         const AlgebraDescriptor& a,
                         const Tolerances& tol = default_tolerances());

}  // namespace twoloc
