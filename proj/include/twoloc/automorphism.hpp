#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "twoloc/matrix.hpp"

namespace twoloc {

/// An automorphism of the base algebra, held as its coordinate matrix with a
/// verified inverse. On the supported semisimple instances every automorphism
/// is an inner one composed with a permutation of equal-size simple blocks.
class BaseAutomorphism {
 public:
  static BaseAutomorphism identity(const AlgebraDescriptor& a);
  /// Wraps a coordinate matrix after checking unitality, bijectivity and
  /// multiplicativity on all basis pairs; throws NotAutomorphism otherwise.
  static BaseAutomorphism verified(const AlgebraDescriptor& a, const Eigen::MatrixXcd& map,
                                   const Tolerances& tol = default_tolerances());
  static BaseAutomorphism inner(const BaseElement& c,
                                const Tolerances& tol = default_tolerances());
  /// perm[b] is the target block of block b; sizes must match.
  static BaseAutomorphism block_permutation(const AlgebraDescriptor& a,
                                            const std::vector<int>& perm);
  static BaseAutomorphism random(const AlgebraDescriptor& a, Rng& rng,
                                 const Tolerances& tol = default_tolerances());

  const AlgebraDescriptor& descriptor() const { return descriptor_; }
  const Eigen::MatrixXcd& matrix() const { return map_; }
  BaseElement apply(const BaseElement& x) const;
  BaseAutomorphism inverse() const;

 private:
  BaseAutomorphism(AlgebraDescriptor a, Eigen::MatrixXcd map, Eigen::MatrixXcd inv);
  AlgebraDescriptor descriptor_;
  Eigen::MatrixXcd map_, inv_;
};

/// All size-preserving permutations of the simple blocks (identity first).
std::vector<std::vector<int>> block_permutation_candidates(const AlgebraDescriptor& a);

/// A represented automorphism of M_n(A): conjugation by an invertible element,
/// entrywise application of a base automorphism, a composite (applied
/// right-to-left), or an explicit verified coordinate matrix.
class Automorphism {
 public:
  static Automorphism identity(int n, const AlgebraDescriptor& base);
  static Automorphism spatial(const MatElem& a,
                              const Tolerances& tol = default_tolerances());
  static Automorphism induced(const BaseAutomorphism& psi, int n);
  static Automorphism composite(std::vector<Automorphism> factors);
  /// Wraps an already-verified coordinate matrix (see verify_automorphism).
  static Automorphism explicit_map(int n, const AlgebraDescriptor& base,
                                   const Eigen::MatrixXcd& map, const Eigen::MatrixXcd& inv);

  int size() const { return n_; }
  const AlgebraDescriptor& base() const { return base_; }

  MatElem apply(const MatElem& x) const;
  Automorphism inverse() const;
  Eigen::MatrixXcd coordinate_matrix() const;

  /// Max residual of multiplicativity over all matrix-unit pairs plus
  /// `random_pairs` random pairs, and of unitality.
  double multiplicativity_residual(Rng& rng, int random_pairs = 50) const;

  enum class Kind { Spatial, Induced, Composite, Explicit };
  Kind kind() const;
  const MatElem& spatial_element() const;
  const MatElem& spatial_inverse() const;
  const BaseAutomorphism& base_map() const;
  const std::vector<Automorphism>& factors() const;
  const Eigen::MatrixXcd& explicit_matrix() const;
  const Eigen::MatrixXcd& explicit_inverse() const;

 private:
  struct SpatialData {
    MatElem a, a_inv;
  };
  struct InducedData {
    BaseAutomorphism psi;
  };
  struct CompositeData {
    std::vector<Automorphism> factors;
  };
  struct ExplicitData {
    Eigen::MatrixXcd map, inv;
  };
  using Repr = std::variant<SpatialData, InducedData, CompositeData, ExplicitData>;

  Automorphism(int n, AlgebraDescriptor base, Repr repr);
  int n_;
  AlgebraDescriptor base_;
  std::shared_ptr<const Repr> repr_;
};

/// Checks unitality, bijectivity and multiplicativity (all matrix-unit pairs
/// plus 50 random pairs) of a coordinate-space linear map and wraps it.
/// Throws NotAutomorphism naming the first failed relation.
Automorphism verify_automorphism(int n, const AlgebraDescriptor& base,
                                 const Eigen::MatrixXcd& map, Rng& rng,
                                 const Tolerances& tol = default_tolerances());

/// Basis of { a : y*a = a*x for every pair (x, y) }.
LinSubspace joint_intertwiner(std::span<const std::pair<MatElem, MatElem>> pairs,
                              const Tolerances& tol = default_tolerances());
/// Same, restricted to a precomputed subspace of the ambient algebra.
LinSubspace joint_intertwiner_within(std::span<const std::pair<MatElem, MatElem>> pairs,
                                     const LinSubspace& within,
                                     const Tolerances& tol = default_tolerances());

struct InvertibleSearch {
  std::optional<MatElem> element;
  /// True when every sample was numerically singular (or the space is
  /// trivial): strong evidence that no invertible element exists at all.
  bool exhausted = false;
  double best_rel_sigma = 0.0;
  int tries = 0;
};

/// Random combinations of the basis tested for invertibility; a miss after
/// all retries is probabilistic evidence only (see `exhausted`).
InvertibleSearch find_invertible_in(const LinSubspace& s, int retries, Rng& rng,
                                    const Tolerances& tol = default_tolerances());

struct Decomposition {
  MatElem a;
  BaseAutomorphism psi;
  double residual = 0.0;  // max coordinate-basis deviation of the recomposition
};

/// Factors an automorphism as conjugation-by-a composed with an entrywise
/// base automorphism. The pair is normalized (unit-norm (0,0) entry with
/// positive-real leading coordinate when possible) but is unique only up to
/// central twists; the contract is the residual of the recomposition.
/// Throws DecompositionFailed when no invertible intertwiner is located.
Decomposition decompose(const Automorphism& phi, Rng& rng,
                        const Tolerances& tol = default_tolerances());

/// Convenience generators for tests and fuzzing: conditioned random invertible
/// elements and random spatial-times-induced automorphisms.
MatElem random_invertible(int n, const AlgebraDescriptor& base, Rng& rng,
                          double max_condition = 200.0);
Automorphism random_automorphism(int n, const AlgebraDescriptor& base, Rng& rng,
                                 const Tolerances& tol = default_tolerances());

}  // namespace twoloc
