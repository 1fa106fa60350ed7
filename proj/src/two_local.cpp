#include "twoloc/two_local.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace twoloc {

namespace {

double rel_residual(const MatElem& got, const MatElem& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

std::string slot_name(int i, int j) {
  std::ostringstream s;
  s << "slot(" << i << "," << j << ")";
  return s.str();
}

}  // namespace

std::string element_digest(const MatElem& x) {
  const Eigen::VectorXcd c = x.coords();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over quantized coordinates
  auto feed = [&h](std::int64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= static_cast<std::uint64_t>(v >> (8 * byte)) & 0xffull;
      h *= 1099511628211ull;
    }
  };
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    feed(std::llround(c[i].real() * 1e10));
    feed(std::llround(c[i].imag() * 1e10));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TwoLocalCandidate compose_with_inverse(const Automorphism& w,
                                       const TwoLocalCandidate& delta) {
  TwoLocalCandidate out;
  out.n = delta.n;
  out.base = delta.base;
  out.provenance = delta.provenance;
  Automorphism w_inv = w.inverse();
  auto eval = delta.eval;
  out.eval = [w_inv, eval](const MatElem& x) { return w_inv.apply(eval(x)); };
  return out;
}

std::string to_string(LemmaReport::Status s) {
  switch (s) {
    case LemmaReport::Status::Pass: return "pass";
    case LemmaReport::Status::Fail: return "fail";
    case LemmaReport::Status::Skipped: return "skipped";
  }
  return "fail";
}

std::string to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::Certified: return "certified";
    case CandidateStatus::Refuted: return "refuted";
    case CandidateStatus::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

CertifyResult certify_pair(const TwoLocalCandidate& delta, const MatElem& x,
                           const MatElem& y, const Tolerances& tol, Rng& rng,
                           const CertifyOptions& opts) {
  const int n = delta.n;
  const auto& base = delta.base;
  const MatElem dx = delta.eval(x);
  const MatElem dy = delta.eval(y);

  CertifyResult out;

  auto agreement_of = [&](const Automorphism& w) {
    return std::max(rel_residual(w.apply(x), dx), rel_residual(w.apply(y), dy));
  };

  if (!delta.witness_hints.empty()) {
    auto it = delta.witness_hints.find({element_digest(x), element_digest(y)});
    if (it != delta.witness_hints.end()) {
      const double agree = agreement_of(it->second);
      if (agree <= tol.eps_auto) {
        out.witness = it->second;
        out.agreement = agree;
        return out;
      }
    }
  }

  bool all_exhausted = true;
  for (const auto& perm : block_permutation_candidates(base)) {
    BaseAutomorphism pi = BaseAutomorphism::block_permutation(base, perm);
    Automorphism pibar = Automorphism::induced(pi, n);
    const MatElem px = pibar.apply(x);
    const MatElem py = pibar.apply(y);

    LinSubspace space = [&] {
      if (opts.y_constraint_space) {
        std::pair<MatElem, MatElem> one[] = {{px, dx}};
        return joint_intertwiner_within(one, *opts.y_constraint_space, tol);
      }
      std::pair<MatElem, MatElem> two[] = {{px, dx}, {py, dy}};
      return joint_intertwiner(two, tol);
    }();

    InvertibleSearch search = find_invertible_in(space, tol.invertible_retries, rng, tol);
    out.best_rel_sigma = std::max(out.best_rel_sigma, search.best_rel_sigma);
    if (search.element) {
      all_exhausted = false;
      bool trivial_perm = true;
      for (std::size_t b = 0; b < perm.size(); ++b)
        if (perm[b] != static_cast<int>(b)) trivial_perm = false;
      Automorphism w = trivial_perm
                           ? Automorphism::spatial(*search.element, tol)
                           : Automorphism::composite(
                                 {Automorphism::spatial(*search.element, tol), pibar});
      const double agree = agreement_of(w);
      if (agree <= tol.eps_auto) {
        out.witness = std::move(w);
        out.agreement = agree;
        return out;
      }
      // Invertible but badly conditioned; keep looking.
    } else if (!search.exhausted) {
      all_exhausted = false;
    }
  }
  out.exhausted = all_exhausted;
  return out;
}

ProbeContext ProbeContext::make(int n, const AlgebraDescriptor& base,
                                const Tolerances& tol) {
  MatElem sep = separating_diagonal(n, base);
  MatElem shift = upper_shift(n, base);
  MatElem sep_targets[] = {sep};
  MatElem shift_targets[] = {shift};
  return ProbeContext{sep, shift, solve_commutant(sep_targets, tol),
                      solve_commutant(shift_targets, tol)};
}

namespace {

/// Issues one witness demand and folds the outcome into the report.
/// Returns false when the search failed (report already marked).
bool demand_witness(LemmaReport& report, const TwoLocalCandidate& delta, const MatElem& x,
                    const MatElem& y, const std::string& what, const Tolerances& tol,
                    Rng& rng, const CertifyOptions& opts = {}) {
  CertifyResult res = certify_pair(delta, x, y, tol, rng, opts);
  if (res.witness) {
    ++report.witnesses_found;
    return true;
  }
  report.status = LemmaReport::Status::Fail;
  report.failure_kind = LemmaReport::FailureKind::WitnessSearch;
  report.search_exhausted = res.exhausted;
  report.witness = what;
  std::ostringstream notes;
  notes << "no agreeing automorphism located (best relative sigma " << res.best_rel_sigma
        << ")";
  report.notes = notes.str();
  return false;
}

void record_identity(LemmaReport& report, double residual, double bound,
                     const std::string& what) {
  report.max_residual = std::max(report.max_residual, residual);
  if (residual > bound && report.status == LemmaReport::Status::Pass) {
    report.status = LemmaReport::Status::Fail;
    report.failure_kind = LemmaReport::FailureKind::IdentityCheck;
    report.witness = what;
  }
}

MatElem random_diagonal(int n, const AlgebraDescriptor& base, Rng& rng) {
  MatElem x(n, base);
  for (int k = 0; k < n; ++k) x.set_entry(k, k, BaseElement::random_gaussian(base, rng));
  return x;
}

Eigen::MatrixXcd slot_map_matrix(const TwoLocalCandidate& normalized, int i) {
  const auto& base = normalized.base;
  const int d = base.dim();
  Eigen::MatrixXcd map(d, d);
  for (int t = 0; t < d; ++t) {
    MatElem lifted =
        normalized.eval(MatElem::embed(BaseElement::basis(base, t), normalized.n, i, i));
    map.col(t) = lifted.entry(i, i).coords();
  }
  return map;
}

}  // namespace

std::optional<NormalizeResult> normalize_on_probes(const TwoLocalCandidate& delta,
                                                   const ProbeContext& ctx,
                                                   const PipelineOptions& opts,
                                                   const Tolerances& tol, Rng& rng,
                                                   LemmaReport* failure) {
  (void)opts;
  LemmaReport report;
  report.lemma = "probe-normalization";
  CertifyResult res = certify_pair(delta, ctx.sep, ctx.shift, tol, rng);
  if (!res.witness) {
    report.status = LemmaReport::Status::Fail;
    report.failure_kind = LemmaReport::FailureKind::WitnessSearch;
    report.search_exhausted = res.exhausted;
    report.witness = "probe pair";
    std::ostringstream notes;
    notes << "no agreeing automorphism located (best relative sigma " << res.best_rel_sigma
          << ")";
    report.notes = notes.str();
    if (failure) *failure = report;
    return std::nullopt;
  }
  report.witnesses_found = 1;
  TwoLocalCandidate normalized = compose_with_inverse(*res.witness, delta);
  record_identity(report, rel_residual(normalized.eval(ctx.sep), ctx.sep), tol.eps_auto,
                  "diagonal probe");
  record_identity(report, rel_residual(normalized.eval(ctx.shift), ctx.shift),
                  tol.eps_auto, "shift probe");
  if (report.status != LemmaReport::Status::Pass) {
    if (failure) *failure = report;
    return std::nullopt;
  }
  return NormalizeResult{std::move(normalized), *res.witness, std::move(report)};
}

LemmaReport check_matrix_units(const TwoLocalCandidate& normalized, const ProbeContext& ctx,
                               const PipelineOptions& opts, const Tolerances& tol,
                               Rng& rng) {
  const int n = normalized.n;
  const auto& base = normalized.base;
  LemmaReport report;
  report.lemma = "matrix-units-fixed";

  CertifyOptions in_sep{&ctx.sep_commutant};
  CertifyOptions in_shift{&ctx.shift_commutant};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MatElem unit = MatElem::matrix_unit(n, base, i, j);
      if (!demand_witness(report, normalized, unit, ctx.sep,
                          slot_name(i, j) + " with diagonal probe", tol, rng, in_sep))
        return report;
      if (!demand_witness(report, normalized, unit, ctx.shift,
                          slot_name(i, j) + " with shift probe", tol, rng, in_shift))
        return report;
      record_identity(report, rel_residual(normalized.eval(unit), unit), tol.eps_auto,
                      slot_name(i, j));
      if (report.status != LemmaReport::Status::Pass) return report;
    }

  for (int s = 0; s < opts.scalar_span_samples; ++s) {
    Eigen::MatrixXcd coeffs(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) coeffs(i, j) = gaussian(rng);
    MatElem x = MatElem::scalar_matrix(n, base, coeffs);
    record_identity(report, rel_residual(normalized.eval(x), x), tol.eps_auto,
                    "scalar-span sample");
    if (report.status != LemmaReport::Status::Pass) return report;
  }
  return report;
}

LemmaReport check_block_preservation(const TwoLocalCandidate& normalized,
                                     const ProbeContext& ctx, const PipelineOptions& opts,
                                     const Tolerances& tol, Rng& rng) {
  const int n = normalized.n;
  const auto& base = normalized.base;
  LemmaReport report;
  report.lemma = "entry-block-preservation";
  CertifyOptions in_sep{&ctx.sep_commutant};

  const int total =
      opts.block_preservation_samples > 0 ? opts.block_preservation_samples : n * n;
  for (int s = 0; s < total; ++s) {
    const int i = (s / n) % n;
    const int j = s % n;
    MatElem x = MatElem::embed(BaseElement::random_gaussian(base, rng), n, i, j);
    if (s < 2 * opts.demand_samples) {
      if (!demand_witness(report, normalized, x, ctx.sep,
                          slot_name(i, j) + " with diagonal probe", tol, rng, in_sep))
        return report;
    }
    MatElem image = normalized.eval(x);
    const double scale = std::max(1.0, x.norm());
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        if (r == i && c == j) continue;
        record_identity(report, image.entry(r, c).norm() / scale, tol.eps_auto,
                        slot_name(i, j) + " leaks into " + slot_name(r, c));
        if (report.status != LemmaReport::Status::Pass) return report;
      }
  }
  return report;
}

std::vector<LemmaReport> check_diagonal_projection(const TwoLocalCandidate& normalized,
                                                   const ProbeContext& ctx,
                                                   const PipelineOptions& opts,
                                                   const Tolerances& tol, Rng& rng) {
  const int n = normalized.n;
  const auto& base = normalized.base;
  LemmaReport compression;
  compression.lemma = "diagonal-compression";
  LemmaReport transfer;
  transfer.lemma = "corner-transfer";
  CertifyOptions in_shift{&ctx.shift_commutant};

  for (int s = 0; s < opts.diagonal_samples; ++s) {
    MatElem x = random_diagonal(n, base, rng);
    MatElem image = normalized.eval(x);
    for (int k = 0; k < n; ++k) {
      BaseElement xkk = x.entry(k, k);
      MatElem compressed = MatElem::embed(image.entry(k, k), n, k, k);
      MatElem expected = normalized.eval(MatElem::embed(xkk, n, k, k));
      record_identity(compression, rel_residual(compressed, expected), tol.eps_auto,
                      "diagonal sample, " + slot_name(k, k));
      if (compression.status != LemmaReport::Status::Pass) return {compression, transfer};
    }
    if (s < opts.demand_samples) {
      for (int k = 0; k < n; ++k) {
        // Nudge the slot entry to an invertible one before demanding.
        const double lambda = x.entry(k, k).norm() + 1.0;
        MatElem nudged = x + MatElem::embed(BaseElement::unit(base) * lambda, n, k, k);
        MatElem slot = MatElem::embed(nudged.entry(k, k), n, k, k);
        if (!demand_witness(compression, normalized, nudged, slot,
                            "diagonal with nudged " + slot_name(k, k), tol, rng))
          return {compression, transfer};
        MatElem nudged_image = normalized.eval(nudged);
        record_identity(compression,
                        rel_residual(MatElem::embed(nudged_image.entry(k, k), n, k, k),
                                     normalized.eval(slot)),
                        tol.eps_auto, "nudged diagonal, " + slot_name(k, k));
        if (compression.status != LemmaReport::Status::Pass)
          return {compression, transfer};
      }
    }
  }

  for (int s = 0; s < opts.transfer_samples; ++s) {
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    BaseElement xi = BaseElement::random_gaussian(base, rng);
    MatElem x = MatElem::embed(xi, n, i, i);
    MatElem image = normalized.eval(x);
    for (int j = 0; j < n; ++j) {
      MatElem moved = MatElem::embed(image.entry(i, i), n, j, j);
      MatElem expected = normalized.eval(MatElem::embed(xi, n, j, j));
      record_identity(transfer, rel_residual(moved, expected), tol.eps_auto,
                      slot_name(i, i) + " moved to " + slot_name(j, j));
      if (transfer.status != LemmaReport::Status::Pass) return {compression, transfer};
    }
    if (s < opts.demand_samples) {
      const int j = (i + 1) % n;
      MatElem y = x + MatElem::embed(xi, n, j, j);
      if (!demand_witness(transfer, normalized, y, ctx.shift,
                          "two-slot diagonal with shift probe", tol, rng, in_shift))
        return {compression, transfer};
    }
  }
  return {compression, transfer};
}

std::vector<LemmaReport> check_diagonal_block_maps(const TwoLocalCandidate& normalized,
                                                   const ProbeContext& ctx,
                                                   const PipelineOptions& opts,
                                                   const Tolerances& tol, Rng& rng) {
  const int n = normalized.n;
  const auto& base = normalized.base;
  LemmaReport additivity;
  additivity.lemma = "diagonal-additivity";
  LemmaReport multiplicative;
  multiplicative.lemma = "diagonal-multiplicative";
  CertifyOptions in_shift{&ctx.shift_commutant};

  if (n < 3) {
    additivity.status = LemmaReport::Status::Skipped;
    additivity.notes = "needs size >= 3";
    multiplicative.status = LemmaReport::Status::Skipped;
    multiplicative.notes = "needs size >= 3";
    return {additivity, multiplicative};
  }

  auto witness = find_annihilator_witness(base, tol);

  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXcd map = slot_map_matrix(normalized, i);
    auto slot_map = [&](const BaseElement& xi) {
      MatElem lifted = normalized.eval(MatElem::embed(xi, n, i, i));
      return lifted.entry(i, i);
    };

    for (int s = 0; s < opts.linearity_samples; ++s) {
      BaseElement xi = BaseElement::random_gaussian(base, rng);
      BaseElement eta = BaseElement::random_gaussian(base, rng);
      BaseElement lhs = slot_map(xi + eta);
      BaseElement rhs = slot_map(xi) + slot_map(eta);
      const double scale = std::max(1.0, rhs.norm());
      record_identity(additivity, (lhs - rhs).norm() / scale, tol.eps_auto,
                      "sum at " + slot_name(i, i));
      record_identity(additivity,
                      (lhs - BaseElement(base, map * (xi + eta).coords())).norm() / scale,
                      tol.eps_auto, "linearization at " + slot_name(i, i));
      if (additivity.status != LemmaReport::Status::Pass)
        return {additivity, multiplicative};
      if (i == 0 && s < opts.demand_samples) {
        // Spread the two summands and their sum across three diagonal slots.
        const int k = (i + 1) % n;
        const int s2 = (i + 2) % n;
        MatElem z = MatElem::embed(xi + eta, n, i, i) + MatElem::embed(xi, n, k, k) +
                    MatElem::embed(eta, n, s2, s2);
        if (!demand_witness(additivity, normalized, z, ctx.shift,
                            "three-slot diagonal with shift probe", tol, rng, in_shift))
          return {additivity, multiplicative};
      }
    }

    if (!witness) {
      multiplicative.status = LemmaReport::Status::Skipped;
      multiplicative.notes =
          "no one-sided annihilator pair exists (commutative base); "
          "anti-multiplicative exclusion unavailable";
      continue;
    }

    try {
      BaseElement part = jordan_split(map, base, tol);
      const double dev = (part - BaseElement::unit(base)).norm();
      record_identity(multiplicative, dev, tol.eps_auto * 10.0,
                      "anti-multiplicative part present at " + slot_name(i, i));
    } catch (const NotJordan& e) {
      multiplicative.status = LemmaReport::Status::Fail;
      multiplicative.failure_kind = LemmaReport::FailureKind::IdentityCheck;
      multiplicative.witness = slot_name(i, i);
      multiplicative.notes = e.what();
    } catch (const UndecidableSplit& e) {
      multiplicative.status = LemmaReport::Status::Fail;
      multiplicative.failure_kind = LemmaReport::FailureKind::Undecidable;
      multiplicative.witness = slot_name(i, i);
      multiplicative.notes = e.what();
    }
    if (multiplicative.status != LemmaReport::Status::Pass)
      return {additivity, multiplicative};

    if (i == 0) {
      MatElem wx = MatElem::embed(witness->first, n, i, i);
      MatElem wy = MatElem::embed(witness->second, n, i, i);
      if (!demand_witness(multiplicative, normalized, wx, wy,
                          "annihilator pair at " + slot_name(i, i), tol, rng))
        return {additivity, multiplicative};
      // The reversed product must stay away from zero.
      BaseElement prod = slot_map(witness->second) * slot_map(witness->first);
      if (prod.norm() <= tol.delta_m) {
        multiplicative.status = LemmaReport::Status::Fail;
        multiplicative.failure_kind = LemmaReport::FailureKind::IdentityCheck;
        multiplicative.witness = "reversed annihilator product vanished";
        return {additivity, multiplicative};
      }
    }
  }
  return {additivity, multiplicative};
}

std::vector<LemmaReport> check_definition_consequences(const TwoLocalCandidate& delta,
                                                       int samples, const Tolerances& tol,
                                                       Rng& rng) {
  LemmaReport squares;
  squares.lemma = "square-preservation";
  LemmaReport homogeneity;
  homogeneity.lemma = "homogeneity";
  const int n = delta.n;
  const auto& base = delta.base;

  for (int s = 0; s < samples; ++s) {
    MatElem x = MatElem::random_gaussian(n, base, rng);
    MatElem x2 = x * x;
    CertifyResult square_pair = certify_pair(delta, x, x2, tol, rng);
    if (square_pair.witness) {
      ++squares.witnesses_found;
      MatElem dx = delta.eval(x);
      const double scale = std::max(1.0, dx.norm() * dx.norm());
      record_identity(squares, (delta.eval(x2) - dx * dx).norm() / scale,
                      10.0 * tol.eps_auto, "square sample");
    }
    const Complex lambda = gaussian(rng) * 2.0;
    MatElem lx = x * lambda;
    CertifyResult scale_pair = certify_pair(delta, x, lx, tol, rng);
    if (scale_pair.witness) {
      ++homogeneity.witnesses_found;
      MatElem dx = delta.eval(x);
      const double scale = std::max(1.0, dx.norm());
      record_identity(homogeneity, (delta.eval(lx) - dx * lambda).norm() / scale,
                      10.0 * tol.eps_auto, "scaling sample");
    }
  }
  return {squares, homogeneity};
}

// ---------------------------------------------------------------------------
// Identity phase: with units, scalar span and diagonals pinned, what remains
// must be the identity. Verified entry-by-entry at the top size, then through
// the 2 x 2 block split of each dyadic corner.

namespace {

MatElem block_of(const MatElem& x, int K, int S, int m) {
  MatElem out(m, x.base());
  for (int b = 0; b < x.base().block_count(); ++b) {
    const int k = x.base().simple_blocks()[b];
    out.mutable_block(b) = x.blocks()[b].block(K * m * k, S * m * k, m * k, m * k);
  }
  return out;
}

void set_block(MatElem& x, int K, int S, int m, const MatElem& val) {
  for (int b = 0; b < x.base().block_count(); ++b) {
    const int k = x.base().simple_blocks()[b];
    x.mutable_block(b).block(K * m * k, S * m * k, m * k, m * k) = val.blocks()[b];
  }
}

/// Scalar 2 x 2 block unit: identity pattern at block slot (K, S).
MatElem block_unit(int q, const AlgebraDescriptor& base, int K, int S) {
  const int m = q / 2;
  MatElem out(q, base);
  set_block(out, K, S, m, MatElem::identity(m, base));
  return out;
}

struct IdentityPhase {
  const TwoLocalCandidate& top;
  const PipelineOptions& opts;
  const Tolerances& tol;
  Rng& rng;
  std::vector<LemmaReport>& reports;

  TwoLocalCandidate corner_candidate(int q) const {
    if (q == top.n) return top;
    TwoLocalCandidate out;
    out.n = q;
    out.base = top.base;
    out.provenance = top.provenance;
    const int n = top.n;
    auto eval = top.eval;
    out.eval = [eval, n, q](const MatElem& xi) {
      return eval(MatElem::pad(xi, n)).corner(q);
    };
    return out;
  }

  bool fail(LemmaReport& report) {
    reports.push_back(report);
    return false;
  }

  /// Entry-level slot identities at the top size.
  bool top_entry_lemmas() {
    const int n = top.n;
    const auto& base = top.base;

    LemmaReport diag;
    diag.lemma = "diagonal-entries-fixed";
    for (int s = 0; s < opts.diagonal_samples; ++s) {
      MatElem x = MatElem::random_gaussian(n, base, rng);
      MatElem image = top.eval(x);
      const double scale = std::max(1.0, x.norm());
      for (int k = 0; k < n; ++k)
        record_identity(diag, (image.entry(k, k) - x.entry(k, k)).norm() / scale,
                        tol.eps_auto, slot_name(k, k));
      if (diag.status != LemmaReport::Status::Pass) return fail(diag);
      if (s < opts.demand_samples) {
        // Scale below unit norm, then pair with the shifted-unit diagonal.
        MatElem scaled = x * Complex(1.0 / (2.0 * std::max(1.0, x.norm())), 0.0);
        for (int k = 0; k < n; ++k) {
          MatElem y =
              MatElem::embed(BaseElement::unit(base) + scaled.entry(k, k), n, k, k);
          if (!demand_witness(diag, top, scaled, y,
                              "sample with shifted-unit diagonal at " + slot_name(k, k),
                              tol, rng))
            return fail(diag);
        }
      }
    }
    reports.push_back(diag);

    LemmaReport unit_slot;
    unit_slot.lemma = "scalar-slot-fixed";
    for (int s = 0; s < 2 * opts.demand_samples; ++s) {
      const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      const int off = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
      const int s2 = (k + off) % n;
      const Complex lambda = gaussian(rng);
      MatElem x = MatElem::random_gaussian(n, base, rng);
      x.set_entry(k, s2, BaseElement::unit(base) * lambda);
      if (!demand_witness(unit_slot, top, MatElem::matrix_unit(n, base, s2, k), x,
                          "unit at " + slot_name(s2, k) + " with sample", tol, rng))
        return fail(unit_slot);
      record_identity(
          unit_slot,
          (top.eval(x).entry(k, s2) - BaseElement::unit(base) * lambda).norm() /
              std::max(1.0, std::abs(lambda)),
          tol.eps_auto, slot_name(k, s2));
      if (unit_slot.status != LemmaReport::Status::Pass) return fail(unit_slot);
    }
    reports.push_back(unit_slot);

    LemmaReport opposite;
    opposite.lemma = "opposite-slot-fixed";
    for (int s = 0; s < 2 * opts.demand_samples; ++s) {
      const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      const int off = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
      const int s2 = (k + off) % n;
      const Complex lambda = gaussian(rng) + Complex(1.0, 0.0);
      MatElem x = MatElem::random_gaussian(n, base, rng);
      x.set_entry(k, s2, BaseElement::unit(base) * lambda);
      // Diagonal companion: the opposite entry at (k,k), separated scalars elsewhere.
      MatElem y(n, base);
      y.set_entry(k, k, x.entry(s2, k));
      const double floor = x.entry(s2, k).norm() + 1.0;
      for (int i = 0; i < n; ++i)
        if (i != k)
          y.set_entry(i, i, BaseElement::unit(base) * Complex(floor * (i + 2), 0.0));
      if (!demand_witness(opposite, top, x, y, "sample with separating diagonal", tol,
                          rng))
        return fail(opposite);
      const double scale = std::max(1.0, x.norm());
      record_identity(opposite,
                      (top.eval(x).entry(s2, k) - x.entry(s2, k)).norm() / scale,
                      tol.eps_auto, slot_name(s2, k));
      if (opposite.status != LemmaReport::Status::Pass) return fail(opposite);
    }
    reports.push_back(opposite);
    return true;
  }

  /// 2 x 2 block endgame at dyadic size q, recursing into the leading corner.
  bool level(int q) {
    const int m = q / 2;
    const auto& base = top.base;
    TwoLocalCandidate cand = corner_candidate(q);

    LemmaReport report;
    report.lemma = "two-by-two-identity";
    report.notes = "level size " + std::to_string(q);

    for (int s = 0; s < opts.demand_samples; ++s) {
      MatElem xi = MatElem::pad(MatElem::random_gaussian(m, base, rng), q);
      if (m >= 2) {
        MatElem p11 = block_unit(q, base, 0, 0);
        if (!demand_witness(report, cand, xi, p11, "corner sample with corner unit", tol,
                            rng))
          return fail(report);
      }
      // The leading corner must stay inside itself.
      MatElem image = cand.eval(xi);
      MatElem compressed(q, base);
      set_block(compressed, 0, 0, m, block_of(image, 0, 0, m));
      record_identity(report, rel_residual(compressed, image), tol.eps_auto,
                      "corner leakage at level " + std::to_string(q));
      if (report.status != LemmaReport::Status::Pass) return fail(report);

      // Transfer the corner to the complementary block.
      MatElem p12 = block_unit(q, base, 0, 1);
      MatElem p21 = block_unit(q, base, 1, 0);
      MatElem moved = p21 * xi * p12;
      record_identity(report, rel_residual(cand.eval(moved), moved), tol.eps_auto,
                      "transferred corner at level " + std::to_string(q));
      if (report.status != LemmaReport::Status::Pass) return fail(report);
      if (!demand_witness(report, cand, xi + moved, p12,
                          "two-block diagonal with block shift", tol, rng))
        return fail(report);

      // Both diagonal blocks at once, with an invertibility nudge demanded.
      MatElem other(q, base);
      set_block(other, 1, 1, m, MatElem::random_gaussian(m, base, rng));
      MatElem zeta = xi + other;
      record_identity(report, rel_residual(cand.eval(zeta), zeta), tol.eps_auto,
                      "block diagonal at level " + std::to_string(q));
      if (report.status != LemmaReport::Status::Pass) return fail(report);
      if (s == 0) {
        const double lambda = block_of(xi, 0, 0, m).norm() + 1.0;
        MatElem nudged = zeta + block_unit(q, base, 0, 0) * Complex(lambda, 0.0);
        MatElem slot(q, base);
        set_block(slot, 0, 0, m, block_of(nudged, 0, 0, m));
        if (!demand_witness(report, cand, nudged, slot,
                            "nudged block diagonal with its corner", tol, rng))
          return fail(report);
      }
    }

    // Off-diagonal blocks via the opposite-slot/transfer argument over the
    // half-size corner algebra.
    for (int s = 0; s < opts.demand_samples; ++s) {
      MatElem x = MatElem::random_gaussian(q, base, rng);
      MatElem image = cand.eval(x);
      for (const auto& [K, S] : {std::pair{0, 1}, std::pair{1, 0}}) {
        record_identity(report,
                        (block_of(image, K, S, m) - block_of(x, K, S, m)).norm() /
                            std::max(1.0, x.norm()),
                        tol.eps_auto,
                        "block " + slot_name(K, S) + " at level " + std::to_string(q));
        if (report.status != LemmaReport::Status::Pass) return fail(report);

        const double lambda = 2.0 * (block_of(image, S, K, m).norm() + 1.0);
        MatElem y = x;
        set_block(y, S, K, m, MatElem::identity(m, base) * Complex(lambda, 0.0));
        // Opposite-slot companion: the moved block plus separated block scalars.
        MatElem y2(q, base);
        set_block(y2, S, S, m, block_of(x, K, S, m));
        const double floor = block_of(x, K, S, m).norm() + 1.0;
        set_block(y2, K, K, m, MatElem::identity(m, base) * Complex(2.0 * floor, 0.0));
        if (!demand_witness(report, cand, y, y2, "block opposite-slot companion", tol,
                            rng))
          return fail(report);
        if (!demand_witness(report, cand, y, x, "block transfer pair", tol, rng))
          return fail(report);
      }
    }

    reports.push_back(report);
    if (m >= 2) return level(m);
    return true;
  }
};

}  // namespace

ReconstructResult reconstruct_automorphism(const TwoLocalCandidate& delta,
                                           const Tolerances& tol, Rng& rng,
                                           const PipelineOptions& opts) {
  const int n = delta.n;
  if (n < 4 || n > 16 || (n & (n - 1)) != 0)
    throw PreconditionError("supported sizes are 4, 8 and 16");

  ReconstructResult result;
  auto conclude_failure = [&](const LemmaReport& r) {
    result.failing_lemma = r.lemma;
    switch (r.failure_kind) {
      case LemmaReport::FailureKind::WitnessSearch:
        result.status = r.search_exhausted ? CandidateStatus::Refuted
                                           : CandidateStatus::Inconclusive;
        break;
      case LemmaReport::FailureKind::Undecidable:
        result.status = CandidateStatus::Inconclusive;
        break;
      default:
        result.status = CandidateStatus::Refuted;
        break;
    }
  };
  auto push = [&](LemmaReport r) -> bool {
    const bool ok = r.status != LemmaReport::Status::Fail;
    if (!ok) conclude_failure(r);
    result.reports.push_back(std::move(r));
    return ok;
  };
  auto sum_witnesses = [&] {
    result.witness_count = 0;
    for (const auto& r : result.reports) result.witness_count += r.witnesses_found;
  };

  ProbeContext ctx = ProbeContext::make(n, delta.base, tol);

  LemmaReport norm_failure;
  auto normalized = normalize_on_probes(delta, ctx, opts, tol, rng, &norm_failure);
  if (!normalized) {
    push(norm_failure);
    sum_witnesses();
    return result;
  }
  push(normalized->report);
  const TwoLocalCandidate& d1 = normalized->normalized;

  bool ok = push(check_matrix_units(d1, ctx, opts, tol, rng));
  if (ok) ok = push(check_block_preservation(d1, ctx, opts, tol, rng));
  if (ok)
    for (auto& r : check_diagonal_projection(d1, ctx, opts, tol, rng))
      if (!(ok = push(std::move(r)))) break;
  if (ok)
    for (auto& r : check_diagonal_block_maps(d1, ctx, opts, tol, rng))
      if (!(ok = push(std::move(r)))) break;
  if (!ok) {
    sum_witnesses();
    return result;
  }

  // Divide out the entrywise extension of the first diagonal slot map.
  LemmaReport extension;
  extension.lemma = "diagonal-extension";
  Eigen::MatrixXcd slot0 = slot_map_matrix(d1, 0);
  std::optional<Automorphism> lifted;
  try {
    BaseAutomorphism psi = BaseAutomorphism::verified(delta.base, slot0, tol);
    lifted = Automorphism::induced(psi, n);
  } catch (const NotAutomorphism& e) {
    extension.status = LemmaReport::Status::Fail;
    extension.failure_kind = LemmaReport::FailureKind::IdentityCheck;
    extension.notes = e.what();
    push(std::move(extension));
    sum_witnesses();
    return result;
  }
  for (int s = 0; s < opts.diagonal_samples; ++s) {
    MatElem x = random_diagonal(n, delta.base, rng);
    record_identity(extension, rel_residual(d1.eval(x), lifted->apply(x)), tol.eps_auto,
                    "diagonal sample");
  }
  if (!push(extension)) {
    sum_witnesses();
    return result;
  }

  TwoLocalCandidate d2 = compose_with_inverse(*lifted, d1);

  IdentityPhase phase{d2, opts, tol, rng, result.reports};
  if (!phase.top_entry_lemmas() || !phase.level(n)) {
    for (const auto& r : result.reports)
      if (r.status == LemmaReport::Status::Fail) {
        conclude_failure(r);
        break;
      }
    sum_witnesses();
    return result;
  }

  // Final direct comparison: the candidate against the reconstructed
  // automorphism over the whole test set.
  Automorphism reconstructed = Automorphism::composite({normalized->witness, *lifted});
  LemmaReport final_report;
  final_report.lemma = "identity-residual";
  std::vector<MatElem> test_set;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      test_set.push_back(MatElem::matrix_unit(n, delta.base, i, j));
  for (int k = 0; k < n; ++k)
    for (int t = 0; t < delta.base.dim(); ++t)
      test_set.push_back(MatElem::embed(BaseElement::basis(delta.base, t), n, k, k));
  for (int k = 0; k < n; ++k)
    for (int s = 1; s < n; ++s)
      test_set.push_back(MatElem::matrix_unit(n, delta.base, k, (k + s) % n));
  for (int s = 0; s < opts.random_test_elements; ++s)
    test_set.push_back(MatElem::random_gaussian(n, delta.base, rng));

  double residual = 0.0;
  for (const auto& x : test_set) {
    record_identity(final_report, rel_residual(d2.eval(x), x), tol.eps_auto,
                    "test element");
    residual = std::max(residual, (delta.eval(x) - reconstructed.apply(x)).norm());
  }
  const bool final_ok = push(final_report);
  sum_witnesses();
  if (!final_ok) return result;

  result.status = CandidateStatus::Certified;
  result.reconstructed = std::move(reconstructed);
  result.residual = residual;
  return result;
}

// ---------------------------------------------------------------------------
// Candidate generators and fuzzing

namespace {

MatElem blockwise_transpose(const MatElem& x) {
  MatElem out(x.size(), x.base());
  for (int b = 0; b < x.base().block_count(); ++b)
    out.mutable_block(b) = x.blocks()[b].transpose();
  return out;
}

}  // namespace

TwoLocalCandidate make_candidate(const std::string& kind, const AmbientSpec& ambient,
                                 Rng& rng, const Tolerances& tol) {
  TwoLocalCandidate out;
  out.n = ambient.n;
  out.base = ambient.base;
  const int n = ambient.n;
  const AlgebraDescriptor base = ambient.base;

  if (kind == "identity") {
    out.provenance = "identity";
    out.eval = [](const MatElem& x) { return x; };
    return out;
  }
  if (kind == "genuine") {
    out.provenance = "genuine-automorphism";
    Eigen::MatrixXcd map = random_automorphism(n, base, rng, tol).coordinate_matrix();
    out.eval = [map, n, base](const MatElem& x) {
      return MatElem::from_coords(n, base, map * x.coords());
    };
    return out;
  }
  if (kind == "twisted") {
    out.provenance = "pointwise-twisted";
    Eigen::MatrixXcd first = random_automorphism(n, base, rng, tol).coordinate_matrix();
    Eigen::MatrixXcd second = random_automorphism(n, base, rng, tol).coordinate_matrix();
    Eigen::VectorXcd selector(first.rows());
    for (Eigen::Index i = 0; i < selector.size(); ++i) selector[i] = gaussian(rng);
    out.eval = [first, second, selector, n, base](const MatElem& x) {
      const Eigen::VectorXcd c = x.coords();
      const bool pick_first = selector.dot(c).real() >= 0.0;
      return MatElem::from_coords(n, base, (pick_first ? first : second) * c);
    };
    return out;
  }
  if (kind == "anti" || kind == "transpose") {
    out.provenance = "anti-automorphism";
    if (kind == "transpose") {
      out.eval = [](const MatElem& x) { return blockwise_transpose(x); };
      return out;
    }
    Eigen::MatrixXcd map = random_automorphism(n, base, rng, tol).coordinate_matrix();
    out.eval = [map, n, base](const MatElem& x) {
      return MatElem::from_coords(n, base, map * blockwise_transpose(x).coords());
    };
    return out;
  }
  if (kind == "scaled") {
    out.provenance = "scaled";
    Eigen::MatrixXcd map = random_automorphism(n, base, rng, tol).coordinate_matrix();
    out.eval = [map, n, base](const MatElem& x) {
      return MatElem::from_coords(n, base, 2.0 * (map * x.coords()));
    };
    return out;
  }
  if (kind == "corrupted") {
    out.provenance = "corrupted";
    Eigen::MatrixXcd map = random_automorphism(n, base, rng, tol).coordinate_matrix();
    MatElem target = MatElem::matrix_unit(n, base, 0, 1);
    out.eval = [map, n, base, target](const MatElem& x) {
      MatElem image = MatElem::from_coords(n, base, map * x.coords());
      if ((x - target).norm() <= 1e-9) return image + target;
      return image;
    };
    return out;
  }
  throw ConfigError("unknown candidate kind: " + kind);
}

FuzzReport fuzz_candidates(const FuzzConfig& config) {
  struct Task {
    int id;
    AmbientSpec ambient;
    std::string kind;
  };
  std::vector<Task> tasks;
  int id = 0;
  for (const auto& ambient : config.ambients)
    for (const auto& gen : config.generators)
      for (int s = 0; s < gen.samples; ++s) tasks.push_back({id++, ambient, gen.kind});

  FuzzReport report;
  report.seed = config.seed;
  report.records.resize(tasks.size());

  const bool verbose = [] {
    const char* env = std::getenv("TWOLOC_LOG");
    return env && *env;
  }();

  auto run_task = [&](const Task& task) {
    CandidateRecord rec;
    rec.id = task.id;
    rec.ambient = task.ambient;
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(task.id)));
    TwoLocalCandidate candidate = make_candidate(task.kind, task.ambient, rng, config.tol);
    rec.provenance = candidate.provenance;
    ReconstructResult rr = reconstruct_automorphism(candidate, config.tol, rng);
    rec.status = rr.status;
    rec.failing_lemma = rr.failing_lemma;
    rec.residual = rr.residual;
    rec.witness_count = rr.witness_count;
    if (rr.status == CandidateStatus::Certified && rr.reconstructed) {
      Rng check_rng(mix_seed(config.seed, static_cast<std::uint64_t>(task.id)) ^
                    0x5ca1ab1eull);
      rec.soundness_violation =
          rr.reconstructed->multiplicativity_residual(check_rng, 50) > config.tol.eps_auto;
    }
    if (verbose)
      std::fprintf(stderr, "[twoloc] candidate %d (%s): %s\n", rec.id,
                   rec.provenance.c_str(), to_string(rec.status).c_str());
    report.records[static_cast<std::size_t>(task.id)] = std::move(rec);
  };

  int workers = config.workers > 0
                    ? config.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (!tasks.empty()) workers = std::min(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (const auto& t : tasks) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(tasks[i]);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (const auto& rec : report.records) {
    switch (rec.status) {
      case CandidateStatus::Certified: ++report.certified; break;
      case CandidateStatus::Refuted: ++report.refuted; break;
      case CandidateStatus::Inconclusive: ++report.inconclusive; break;
    }
    if (rec.soundness_violation) ++report.soundness_violations;
  }
  return report;
}

}  // namespace twoloc
