#pragma once

#include <json.hpp>

#include "twoloc/two_local.hpp"

namespace twoloc {

using nlohmann::json;

// Descriptors: {"kind": "...", "params": {...}}.
json to_json(const AlgebraDescriptor& a);
AlgebraDescriptor descriptor_from_json(const json& j);

// Elements carry interleaved re/im coordinate arrays.
json to_json(const BaseElement& x);
BaseElement base_element_from_json(const json& j);

// {"n": ..., "base": ..., "entries": [[re,im,...], ...]} row-major.
json to_json(const MatElem& x);
MatElem mat_elem_from_json(const json& j);

json to_json(const LinSubspace& s);
LinSubspace subspace_from_json(const json& j);

// Tagged variants; explicit maps store the dense coordinate matrix.
json to_json(const BaseAutomorphism& psi);
BaseAutomorphism base_automorphism_from_json(const json& j,
                                             const Tolerances& tol = default_tolerances());
json to_json(const Automorphism& phi);
Automorphism automorphism_from_json(const json& j,
                                    const Tolerances& tol = default_tolerances());

json to_json(const LemmaReport& r);
json to_json(const CandidateRecord& r);

FuzzConfig fuzz_config_from_json(const json& j);
json to_json(const FuzzConfig& c);

/// One JSON object per line: every candidate record, then a summary record
/// with the tallies and the environment stamp.
std::string report_to_jsonl(const FuzzReport& report, const Tolerances& tol);

/// Candidate files: {"ambient": {"n":..., "base":...}, "kind": "...", ...}.
/// Deterministic kinds (identity, transpose, automorphism, explicit-linear)
/// need no seed; generated kinds (genuine, twisted, anti, scaled, corrupted)
/// take one.
TwoLocalCandidate candidate_from_json(const json& j,
                                      const Tolerances& tol = default_tolerances());

std::vector<double> interleave(const Eigen::VectorXcd& v);
Eigen::VectorXcd deinterleave(const std::vector<double>& v);

}  // namespace twoloc
