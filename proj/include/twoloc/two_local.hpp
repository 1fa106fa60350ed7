#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twoloc/automorphism.hpp"

namespace twoloc {

/// A candidate 2-local map on M_n(A): an evaluable (possibly nonlinear)
/// function plus an optional table of pre-supplied pairwise witnesses keyed
/// by element digests.
struct TwoLocalCandidate {
  int n = 0;
  AlgebraDescriptor base;
  std::function<MatElem(const MatElem&)> eval;
  std::map<std::pair<std::string, std::string>, Automorphism> witness_hints;
  std::string provenance = "user-supplied";

  MatElem operator()(const MatElem& x) const { return eval(x); }
};

/// Digest of an element's coordinates (quantized); used to key witness hints.
std::string element_digest(const MatElem& x);

/// The candidate w^-1 o delta; hints do not survive composition.
TwoLocalCandidate compose_with_inverse(const Automorphism& w,
                                       const TwoLocalCandidate& delta);

struct LemmaReport {
  enum class Status { Pass, Fail, Skipped };
  /// What a failure means: a witness search that came up empty (inconclusive
  /// unless exhausted), a concrete identity violation (a refutation), or an
  /// undecidable classification.
  enum class FailureKind { None, WitnessSearch, IdentityCheck, Undecidable };
  std::string lemma;
  Status status = Status::Pass;
  FailureKind failure_kind = FailureKind::None;
  double max_residual = 0.0;
  std::string witness;  ///< violating element or located-witness info
  std::string notes;
  int witnesses_found = 0;
  bool search_exhausted = false;
};

std::string to_string(LemmaReport::Status s);

enum class CandidateStatus { Certified, Refuted, Inconclusive };
std::string to_string(CandidateStatus s);

struct CertifyResult {
  std::optional<Automorphism> witness;
  /// True when no permutation part leaves an invertible intertwiner and every
  /// sampled element was numerically singular: the pair admits no witness.
  bool exhausted = false;
  double best_rel_sigma = 0.0;
  double agreement = 0.0;  ///< max residual of the witness at the two points
};

struct CertifyOptions {
  /// Precomputed intertwiner space for the pair (y, delta(y)); when set, the
  /// solve runs inside it and only the x-constraint is stacked.
  const LinSubspace* y_constraint_space = nullptr;
};

/// Searches conjugation-times-block-permutation automorphisms for one that
/// agrees with the candidate at both points.
CertifyResult certify_pair(const TwoLocalCandidate& delta, const MatElem& x,
                           const MatElem& y, const Tolerances& tol, Rng& rng,
                           const CertifyOptions& opts = {});

/// Sample counts used by the pipeline checks. Spot-check totals follow the
/// verification contract; demand counts bound how many witness searches each
/// lemma family issues.
struct PipelineOptions {
  int scalar_span_samples = 20;
  int random_test_elements = 50;
  int block_preservation_samples = 0;  ///< 0 = one per slot
  int diagonal_samples = 5;
  int transfer_samples = 3;
  int linearity_samples = 5;
  int demand_samples = 2;
};

/// Shared probe data for one ambient algebra (built once per pipeline run).
struct ProbeContext {
  MatElem sep;    // distinct-diagonal probe
  MatElem shift;  // nilpotent shift probe
  LinSubspace sep_commutant;
  LinSubspace shift_commutant;

  static ProbeContext make(int n, const AlgebraDescriptor& base, const Tolerances& tol);
};

struct NormalizeResult {
  TwoLocalCandidate normalized;
  Automorphism witness;
  LemmaReport report;
};

/// Finds a witness at the probe pair and conjugates the candidate so that it
/// fixes both probes. Empty optional when no witness was found (the report
/// carries the search evidence).
std::optional<NormalizeResult> normalize_on_probes(const TwoLocalCandidate& delta,
                                                   const ProbeContext& ctx,
                                                   const PipelineOptions& opts,
                                                   const Tolerances& tol, Rng& rng,
                                                   LemmaReport* failure = nullptr);

/// For a candidate fixing the probes: every matrix unit and every matrix with
/// scalar entries must be fixed.
LemmaReport check_matrix_units(const TwoLocalCandidate& normalized, const ProbeContext& ctx,
                               const PipelineOptions& opts, const Tolerances& tol, Rng& rng);

/// Entries stay in their slot: a candidate fixing units maps each
/// single-slot element to the same slot.
LemmaReport check_block_preservation(const TwoLocalCandidate& normalized,
                                     const ProbeContext& ctx, const PipelineOptions& opts,
                                     const Tolerances& tol, Rng& rng);

/// Diagonal behaviour: corner compression of a diagonal image recovers the
/// entry image ("diagonal-compression"), and shifting a diagonal slot
/// commutes with the candidate ("corner-transfer").
std::vector<LemmaReport> check_diagonal_projection(const TwoLocalCandidate& normalized,
                                                   const ProbeContext& ctx,
                                                   const PipelineOptions& opts,
                                                   const Tolerances& tol, Rng& rng);

/// The diagonal slot maps: linear ("diagonal-additivity") and genuinely
/// multiplicative, not anti-multiplicative ("diagonal-multiplicative"); the
/// exclusion argument needs an annihilator witness and is reported skipped on
/// commutative bases. Requires n >= 3.
std::vector<LemmaReport> check_diagonal_block_maps(const TwoLocalCandidate& normalized,
                                                   const ProbeContext& ctx,
                                                   const PipelineOptions& opts,
                                                   const Tolerances& tol, Rng& rng);

/// Definition-level consequences: certified squares satisfy
/// delta(x^2) = delta(x)^2 and certified scalings are homogeneous.
std::vector<LemmaReport> check_definition_consequences(const TwoLocalCandidate& delta,
                                                       int samples, const Tolerances& tol,
                                                       Rng& rng);

struct ReconstructResult {
  CandidateStatus status = CandidateStatus::Inconclusive;
  std::optional<Automorphism> reconstructed;
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<LemmaReport> reports;
  int witness_count = 0;
  std::string failing_lemma;  ///< empty when certified
};

/// Runs the full verification pipeline on sizes 4, 8, 16: normalize on the
/// probe pair, pin the matrix units and the scalar span, extract and divide
/// out the entrywise extension of the first diagonal slot map, then verify
/// that what remains is the identity, recursing through the 2 x 2 block
/// split. Certified candidates come back with the reconstructed automorphism
/// and the max deviation over the test set.
ReconstructResult reconstruct_automorphism(const TwoLocalCandidate& delta,
                                           const Tolerances& tol, Rng& rng,
                                           const PipelineOptions& opts = {});

// ---------------------------------------------------------------------------
// Fuzzing

struct AmbientSpec {
  int n = 4;
  AlgebraDescriptor base;
};

struct GeneratorSpec {
  std::string kind;  // genuine | twisted | anti | scaled | corrupted | identity
  int samples = 0;
};

struct FuzzConfig {
  std::vector<AmbientSpec> ambients;
  std::vector<GeneratorSpec> generators;
  std::uint64_t seed = 0;
  Tolerances tol;
  int workers = 0;  ///< 0 = hardware concurrency
};

struct CandidateRecord {
  int id = 0;
  std::string provenance;
  AmbientSpec ambient;
  CandidateStatus status = CandidateStatus::Inconclusive;
  std::string failing_lemma;
  double residual = std::numeric_limits<double>::quiet_NaN();
  int witness_count = 0;
  bool soundness_violation = false;
};

struct FuzzReport {
  std::vector<CandidateRecord> records;
  int certified = 0;
  int refuted = 0;
  int inconclusive = 0;
  int soundness_violations = 0;
  std::uint64_t seed = 0;
};

/// Builds one candidate of the given kind (deterministic in rng).
TwoLocalCandidate make_candidate(const std::string& kind, const AmbientSpec& ambient,
                                 Rng& rng, const Tolerances& tol);

/// Generates and verifies candidates per the config; certified candidates are
/// re-checked for multiplicativity so that a certified-but-not-multiplicative
/// case can never pass silently.
FuzzReport fuzz_candidates(const FuzzConfig& config);

}  // namespace twoloc
