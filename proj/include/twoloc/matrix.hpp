#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twoloc/algebra.hpp"
#include "twoloc/common.hpp"

namespace twoloc {

/// An element of M_n(A). Stored as one dense complex matrix per simple block
/// of the base algebra: block b of size k contributes an (n*k) x (n*k)
/// matrix whose (i,j) sub-block of size k is the block-b part of entry (i,j).
/// The coordinate vector enumerates entries row-major, each entry in the
/// base algebra's canonical basis.
class MatElem {
 public:
  MatElem(int n, AlgebraDescriptor base);  // zero element

  static MatElem identity(int n, const AlgebraDescriptor& base);
  static MatElem matrix_unit(int n, const AlgebraDescriptor& base, int i, int j);
  /// Base element x placed at slot (i, j), zero elsewhere.
  static MatElem embed(const BaseElement& x, int n, int i, int j);
  /// Sum of coeffs(i,j) * unit-at-(i,j): a matrix with scalar entries.
  static MatElem scalar_matrix(int n, const AlgebraDescriptor& base,
                               const Eigen::MatrixXcd& coeffs);
  static MatElem random_gaussian(int n, const AlgebraDescriptor& base, Rng& rng);
  static MatElem from_coords(int n, const AlgebraDescriptor& base,
                             const Eigen::VectorXcd& coords);

  int size() const { return n_; }
  const AlgebraDescriptor& base() const { return base_; }
  int coord_dim() const { return n_ * n_ * base_.dim(); }

  BaseElement entry(int i, int j) const;
  void set_entry(int i, int j, const BaseElement& x);

  const std::vector<Eigen::MatrixXcd>& blocks() const { return big_; }
  Eigen::MatrixXcd& mutable_block(int b) { return big_[b]; }

  Eigen::VectorXcd coords() const;

  MatElem operator+(const MatElem& rhs) const;
  MatElem operator-(const MatElem& rhs) const;
  MatElem operator*(const MatElem& rhs) const;
  MatElem operator*(Complex scalar) const;
  MatElem adjoint() const;

  MatElem inverse(const Tolerances& tol = default_tolerances()) const;
  bool is_invertible(const Tolerances& tol = default_tolerances()) const;
  /// max over blocks of sigma_max / sigma_min.
  double condition() const;

  /// Operator norm (largest singular value over the blocks).
  double norm() const;

  /// Top-left m x m corner as an element of M_m(A).
  MatElem corner(int m) const;
  /// Writes an M_m(A) element into the top-left corner, other slots zero.
  static MatElem pad(const MatElem& small, int n);

 private:
  int n_;
  AlgebraDescriptor base_;
  std::vector<Eigen::MatrixXcd> big_;

  void check_index(int i, int j) const;
};

inline MatElem operator*(Complex scalar, const MatElem& x) { return x * scalar; }

/// Distinct-diagonal probe: sum of 2^-(i+1) * unit at (i, i). Its commutant is
/// exactly the diagonal matrices. Requires n >= 2.
MatElem separating_diagonal(int n, const AlgebraDescriptor& base);
/// Nilpotent shift probe: sum of units at (i, i+1). Its commutant is the
/// upper-triangular Toeplitz family. Requires n >= 2.
MatElem upper_shift(int n, const AlgebraDescriptor& base);

/// A linear subspace of M_n(A), kept as an orthonormal coordinate basis.
class LinSubspace {
 public:
  LinSubspace(int n, AlgebraDescriptor base, Eigen::MatrixXcd basis);

  int ambient_n() const { return n_; }
  const AlgebraDescriptor& base() const { return base_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXcd& basis_matrix() const { return basis_; }

  MatElem element(int index) const;
  MatElem combine(const Eigen::VectorXcd& coeffs) const;
  MatElem random_element(Rng& rng) const;

  /// Distance of x (relative to its norm) from the subspace.
  double membership_residual(const MatElem& x) const;

 private:
  int n_;
  AlgebraDescriptor base_;
  Eigen::MatrixXcd basis_;  // coord_dim x dim, orthonormal columns
};

/// Orthonormal nullspace basis of `op` with a relative singular-value cutoff.
/// `scale_floor` keeps the threshold meaningful when the operator itself is
/// numerical noise (an intended-zero constraint): the cutoff is
/// rel_cutoff * max(sigma_max, scale_floor).
Eigen::MatrixXcd nullspace_basis(const Eigen::MatrixXcd& op, double rel_cutoff,
                                 double scale_floor = 0.0);

/// Faster nullspace through the normal-equation eigendecomposition; verifies
/// its answer against the operator and falls back to the SVD route when the
/// residual disagrees. Resolution bottoms out near sqrt(machine epsilon).
Eigen::MatrixXcd nullspace_basis_gram(const Eigen::MatrixXcd& op, double rel_cutoff,
                                      double scale_floor = 0.0);

/// Coordinate matrix of a -> y*a - a*x, column per canonical basis element.
Eigen::MatrixXcd sylvester_operator(const MatElem& x, const MatElem& y);

/// Stacked Sylvester constraints applied to prescribed coordinate columns.
Eigen::MatrixXcd stacked_sylvester(std::span<const std::pair<MatElem, MatElem>> pairs,
                                   const Eigen::MatrixXcd& columns, int n,
                                   const AlgebraDescriptor& base);

/// Basis of { a : a*t = t*a for every target t }.
LinSubspace solve_commutant(std::span<const MatElem> targets,
                            const Tolerances& tol = default_tolerances());

enum class SubspacePattern { Diagonal, ToeplitzUpper, Full, Other };
std::string to_string(SubspacePattern p);

/// Pattern test on the basis supports: diagonal when every off-diagonal slot
/// vanishes; Toeplitz-upper when entries depend only on j-i and vanish below
/// the diagonal; full when the subspace is everything.
SubspacePattern classify_structure(const LinSubspace& s,
                                   const Tolerances& tol = default_tolerances());

/// The block isomorphism M_{2m}(A) = M_2(M_m(A)). The per-block dense data is
/// unchanged; only the indexing contract moves, so the map is exact.
MatElem regroup(const MatElem& x);
MatElem regroup_inverse(const MatElem& y, int n, const AlgebraDescriptor& base);

/// Isomorphism x -> [ s_i^* x s_j ] onto M_4(A') with A' the corner algebra
/// of the first projection. The caller supplies four pairwise-orthogonal
/// projections summing to one together with partial isometries s_i
/// (s_i^* s_i = e_1, s_i s_i^* = e_i); on our finite instances these are
/// explicit shift matrices. Projections must be 0/1 diagonal with equally
/// sized supports.
class FourProjectionEmbedding {
 public:
  FourProjectionEmbedding(std::array<MatElem, 4> projections,
                          std::array<MatElem, 4> isometries,
                          const Tolerances& tol = default_tolerances());

  const AlgebraDescriptor& corner_base() const { return corner_base_; }
  MatElem apply(const MatElem& x) const;
  MatElem apply_inverse(const MatElem& y) const;

 private:
  std::array<MatElem, 4> proj_;
  std::array<MatElem, 4> isom_;
  std::vector<int> support_;  // diagonal support of the first projection
  int m_ = 0;
  AlgebraDescriptor corner_base_;

  BaseElement corner_extract(const MatElem& x) const;
  MatElem corner_expand(const BaseElement& x) const;
};

}  // namespace twoloc
