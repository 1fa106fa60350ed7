#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "twoloc/serialize.hpp"
#include "twoloc/two_local.hpp"

using namespace twoloc;

namespace {

TwoLocalCandidate wrap(const Automorphism& phi, const std::string& provenance) {
  TwoLocalCandidate out;
  out.n = phi.size();
  out.base = phi.base();
  out.provenance = provenance;
  out.eval = [phi](const MatElem& x) { return phi.apply(x); };
  return out;
}

TwoLocalCandidate identity_candidate(int n, const AlgebraDescriptor& base) {
  TwoLocalCandidate out;
  out.n = n;
  out.base = base;
  out.provenance = "identity";
  out.eval = [](const MatElem& x) { return x; };
  return out;
}

}  // namespace

TEST_CASE("pairwise certification") {
  Tolerances tol;
  auto scalars = AlgebraDescriptor::scalars();
  const int n = 4;
  Rng rng(1);

  SUBCASE("a genuine automorphism certifies every pair, with agreement") {
    Automorphism phi = random_automorphism(n, scalars, rng, tol);
    TwoLocalCandidate delta = wrap(phi, "genuine-automorphism");
    for (int s = 0; s < 5; ++s) {
      MatElem x = MatElem::random_gaussian(n, scalars, rng);
      MatElem y = MatElem::random_gaussian(n, scalars, rng);
      CertifyResult res = certify_pair(delta, x, y, tol, rng);
      REQUIRE(res.witness.has_value());
      // Witness soundness, checked directly on the returned automorphism.
      CHECK((res.witness->apply(x) - delta.eval(x)).norm() <=
            tol.eps_auto * std::max(1.0, delta.eval(x).norm()));
      CHECK((res.witness->apply(y) - delta.eval(y)).norm() <=
            tol.eps_auto * std::max(1.0, delta.eval(y).norm()));
    }
  }

  SUBCASE("the transposition obstructs shifted unit pairs") {
    TwoLocalCandidate delta = make_candidate("transpose", {n, scalars}, rng, tol);
    MatElem e01 = MatElem::matrix_unit(n, scalars, 0, 1);
    MatElem e12 = MatElem::matrix_unit(n, scalars, 1, 2);
    CertifyResult res = certify_pair(delta, e01, e12, tol, rng);
    CHECK(!res.witness.has_value());
    CHECK(res.exhausted);
  }

  SUBCASE("equal points collapse to a similarity requirement") {
    Automorphism phi = random_automorphism(n, scalars, rng, tol);
    TwoLocalCandidate delta = wrap(phi, "genuine-automorphism");
    MatElem x = MatElem::random_gaussian(n, scalars, rng);
    CertifyResult res = certify_pair(delta, x, x, tol, rng);
    CHECK(res.witness.has_value());
  }

  SUBCASE("witness hints are honored when they agree") {
    Automorphism phi = random_automorphism(n, scalars, rng, tol);
    TwoLocalCandidate delta = wrap(phi, "genuine-automorphism");
    MatElem x = MatElem::random_gaussian(n, scalars, rng);
    MatElem y = MatElem::random_gaussian(n, scalars, rng);
    delta.witness_hints.emplace(std::make_pair(element_digest(x), element_digest(y)), phi);
    CertifyResult res = certify_pair(delta, x, y, tol, rng);
    REQUIRE(res.witness.has_value());
    CHECK(res.agreement <= tol.eps_auto);
  }
}

TEST_CASE("probe normalization") {
  Tolerances tol;
  PipelineOptions opts;
  auto scalars = AlgebraDescriptor::scalars();
  const int n = 4;
  ProbeContext ctx = ProbeContext::make(n, scalars, tol);
  Rng rng(2);

  SUBCASE("identity needs no correction") {
    auto res = normalize_on_probes(identity_candidate(n, scalars), ctx, opts, tol, rng);
    REQUIRE(res.has_value());
    CHECK(res->report.max_residual < 1e-12);
  }

  SUBCASE("conjugations are normalized to fix both probes") {
    MatElem a = random_invertible(n, scalars, rng);
    auto res = normalize_on_probes(wrap(Automorphism::spatial(a, tol), "genuine"), ctx,
                                   opts, tol, rng);
    REQUIRE(res.has_value());
    CHECK((res->normalized.eval(ctx.sep) - ctx.sep).norm() <= 1e-8);
    CHECK((res->normalized.eval(ctx.shift) - ctx.shift).norm() <= 1e-8);
  }

  SUBCASE("the transposition has no probe witness") {
    TwoLocalCandidate delta = make_candidate("transpose", {n, scalars}, rng, tol);
    LemmaReport failure;
    auto res = normalize_on_probes(delta, ctx, opts, tol, rng, &failure);
    CHECK(!res.has_value());
    CHECK(failure.status == LemmaReport::Status::Fail);
    CHECK(failure.search_exhausted);
  }
}

TEST_CASE("normalized-candidate checks on a genuine pipeline") {
  Tolerances tol;
  PipelineOptions opts;
  auto block2 = AlgebraDescriptor::full_matrix_block(2);
  const int n = 4;
  ProbeContext ctx = ProbeContext::make(n, block2, tol);
  Rng rng(3);

  Automorphism phi = random_automorphism(n, block2, rng, tol);
  auto normalized = normalize_on_probes(wrap(phi, "genuine"), ctx, opts, tol, rng);
  REQUIRE(normalized.has_value());
  const TwoLocalCandidate& d1 = normalized->normalized;

  LemmaReport units = check_matrix_units(d1, ctx, opts, tol, rng);
  CHECK(units.status == LemmaReport::Status::Pass);
  CHECK(units.max_residual <= 1e-8);
  CHECK(units.witnesses_found == 2 * n * n);

  LemmaReport blocks = check_block_preservation(d1, ctx, opts, tol, rng);
  CHECK(blocks.status == LemmaReport::Status::Pass);
  CHECK(blocks.max_residual <= 1e-8);

  auto diag = check_diagonal_projection(d1, ctx, opts, tol, rng);
  REQUIRE(diag.size() == 2);
  CHECK(diag[0].status == LemmaReport::Status::Pass);
  CHECK(diag[0].max_residual <= 1e-8);
  CHECK(diag[1].status == LemmaReport::Status::Pass);
  CHECK(diag[1].max_residual <= 1e-8);

  auto maps = check_diagonal_block_maps(d1, ctx, opts, tol, rng);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].status == LemmaReport::Status::Pass);
  CHECK(maps[1].status == LemmaReport::Status::Pass);
}

TEST_CASE("checks catch a corrupted candidate with a named element") {
  Tolerances tol;
  PipelineOptions opts;
  auto scalars = AlgebraDescriptor::scalars();
  const int n = 4;
  ProbeContext ctx = ProbeContext::make(n, scalars, tol);
  Rng rng(4);

  // Identity except at the (0,1) unit: the fixed-units check must name it.
  TwoLocalCandidate delta = identity_candidate(n, scalars);
  MatElem target = MatElem::matrix_unit(n, scalars, 0, 1);
  delta.eval = [target](const MatElem& x) {
    if ((x - target).norm() <= 1e-12)
      return x + target;
    return x;
  };
  delta.provenance = "corrupted";

  auto normalized = normalize_on_probes(delta, ctx, opts, tol, rng);
  REQUIRE(normalized.has_value());
  LemmaReport units = check_matrix_units(normalized->normalized, ctx, opts, tol, rng);
  CHECK(units.status == LemmaReport::Status::Fail);
  CHECK(units.witness.find("(0,1)") != std::string::npos);
}

TEST_CASE("block-map checks are skipped on commutative bases") {
  Tolerances tol;
  PipelineOptions opts;
  auto f2 = AlgebraDescriptor::finite_functions(2);
  const int n = 4;
  ProbeContext ctx = ProbeContext::make(n, f2, tol);
  Rng rng(5);

  auto normalized =
      normalize_on_probes(identity_candidate(n, f2), ctx, opts, tol, rng);
  REQUIRE(normalized.has_value());
  auto maps = check_diagonal_block_maps(normalized->normalized, ctx, opts, tol, rng);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].status == LemmaReport::Status::Pass);     // additivity still checked
  CHECK(maps[1].status == LemmaReport::Status::Skipped);  // exclusion unavailable
}

TEST_CASE("full reconstruction") {
  Tolerances tol;
  Rng rng(6);

  SUBCASE("identity reconstructs at machine precision") {
    auto scalars = AlgebraDescriptor::scalars();
    ReconstructResult r =
        reconstruct_automorphism(identity_candidate(4, scalars), tol, rng);
    CHECK(r.status == CandidateStatus::Certified);
    CHECK(r.residual <= 1e-12);
  }

  SUBCASE("random automorphisms over a matrix-block base reconstruct") {
    auto block2 = AlgebraDescriptor::full_matrix_block(2);
    for (int s = 0; s < 3; ++s) {
      TwoLocalCandidate delta = make_candidate("genuine", {4, block2}, rng, tol);
      ReconstructResult r = reconstruct_automorphism(delta, tol, rng);
      CHECK(r.status == CandidateStatus::Certified);
      CHECK(r.residual <= 1e-7);
      REQUIRE(r.reconstructed.has_value());
      MatElem x = MatElem::random_gaussian(4, block2, rng);
      CHECK((delta.eval(x) - r.reconstructed->apply(x)).norm() <= 1e-7);
    }
  }

  SUBCASE("the transposition is refuted with a named stage") {
    auto scalars = AlgebraDescriptor::scalars();
    TwoLocalCandidate delta = make_candidate("transpose", {4, scalars}, rng, tol);
    ReconstructResult r = reconstruct_automorphism(delta, tol, rng);
    CHECK(r.status == CandidateStatus::Refuted);
    CHECK(!r.failing_lemma.empty());
  }

  SUBCASE("a corrupted automorphism is refuted at the units stage") {
    auto scalars = AlgebraDescriptor::scalars();
    TwoLocalCandidate delta = make_candidate("corrupted", {4, scalars}, rng, tol);
    ReconstructResult r = reconstruct_automorphism(delta, tol, rng);
    CHECK(r.status != CandidateStatus::Certified);
    CHECK(!r.failing_lemma.empty());
  }

  SUBCASE("a doubled automorphism is refuted") {
    auto scalars = AlgebraDescriptor::scalars();
    TwoLocalCandidate delta = make_candidate("scaled", {4, scalars}, rng, tol);
    ReconstructResult r = reconstruct_automorphism(delta, tol, rng);
    CHECK(r.status == CandidateStatus::Refuted);
  }

  SUBCASE("twisted nonlinear candidates never certify") {
    auto scalars = AlgebraDescriptor::scalars();
    for (int s = 0; s < 3; ++s) {
      TwoLocalCandidate delta = make_candidate("twisted", {4, scalars}, rng, tol);
      ReconstructResult r = reconstruct_automorphism(delta, tol, rng);
      CHECK(r.status != CandidateStatus::Certified);
    }
  }

  SUBCASE("unsupported sizes are rejected up front") {
    auto scalars = AlgebraDescriptor::scalars();
    CHECK_THROWS_AS(
        reconstruct_automorphism(identity_candidate(3, scalars), tol, rng),
        PreconditionError);
  }
}

TEST_CASE("definition-level consequences for certified candidates") {
  Tolerances tol;
  Rng rng(7);
  auto block2 = AlgebraDescriptor::full_matrix_block(2);
  TwoLocalCandidate delta = make_candidate("genuine", {4, block2}, rng, tol);
  auto reports = check_definition_consequences(delta, 10, tol, rng);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].status == LemmaReport::Status::Pass);
  CHECK(reports[0].witnesses_found == 10);
  CHECK(reports[0].max_residual <= 1e-7);
  CHECK(reports[1].status == LemmaReport::Status::Pass);
  CHECK(reports[1].witnesses_found == 10);
  CHECK(reports[1].max_residual <= 1e-7);
}

TEST_CASE("fuzzing is deterministic and tallies correctly") {
  FuzzConfig config;
  config.ambients.push_back({4, AlgebraDescriptor::scalars()});
  config.generators.push_back({"genuine", 3});
  config.generators.push_back({"twisted", 2});
  config.seed = 1234;
  config.workers = 2;

  FuzzReport first = fuzz_candidates(config);
  CHECK(first.records.size() == 5);
  CHECK(first.certified + first.refuted + first.inconclusive == 5);
  CHECK(first.certified >= 3);  // the genuine ones
  CHECK(first.soundness_violations == 0);

  FuzzReport second = fuzz_candidates(config);
  Tolerances tol;
  CHECK(report_to_jsonl(first, tol) == report_to_jsonl(second, tol));

  // Empty sample counts produce a summary-only report.
  FuzzConfig empty = config;
  empty.generators.clear();
  empty.generators.push_back({"genuine", 0});
  FuzzReport none = fuzz_candidates(empty);
  CHECK(none.records.empty());
  const std::string text = report_to_jsonl(none, tol);
  CHECK(text.find("summary") != std::string::npos);
}
