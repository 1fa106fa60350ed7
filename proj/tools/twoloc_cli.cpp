#include <CLI11.hpp>
#include <iostream>

#include "twoloc/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"twoloc: verification toolkit for 2-local automorphisms on matrix algebras"};
  app.require_subcommand(1);

  std::string candidate_path, config_path, targets_path, automorphism_path, report_path;
  std::string out_path;
  std::uint64_t seed = 0;
  double tolerance = 1e-7;
  int workers = 0;

  auto* verify = app.add_subcommand("verify", "run the full pipeline on one candidate");
  verify->add_option("candidate", candidate_path, "candidate JSON file")->required();
  verify->add_option("config", config_path, "optional run config JSON");
  auto* verify_seed = verify->add_option("--seed", seed, "pipeline sampling seed");
  verify->add_option("--tol", tolerance, "residual bound for a success exit");

  auto* fuzz = app.add_subcommand("fuzz", "generate and verify candidate batches");
  fuzz->add_option("--config", config_path, "scenario config JSON (default: bundled)");
  fuzz->add_option("--out", out_path, "report file (JSON lines; default stdout)");
  auto* fuzz_seed = fuzz->add_option("--seed", seed, "override the scenario seed");
  auto* fuzz_workers = fuzz->add_option("--workers", workers, "worker threads (default: cores)");

  auto* commutant = app.add_subcommand("commutant", "solve and classify a commutant");
  commutant->add_option("targets", targets_path, "target list JSON file")->required();

  auto* decomp = app.add_subcommand("decompose", "factor an automorphism");
  decomp->add_option("automorphism", automorphism_path, "automorphism JSON file")->required();
  decomp->add_option("--seed", seed, "search seed");

  auto* report = app.add_subcommand("report", "summarize a JSON-lines report");
  report->add_option("report", report_path, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  if (verify->parsed()) {
    twoloc::VerifyOptions opts;
    opts.seed = seed;
    opts.residual_tolerance = tolerance;
    opts.have_seed_override = verify_seed->count() > 0;
    return twoloc::run_verify(candidate_path, config_path, opts, std::cout, std::cerr);
  }
  if (fuzz->parsed()) {
    twoloc::FuzzOptions opts;
    opts.config_path = config_path;
    opts.out_path = out_path;
    opts.seed = seed;
    opts.have_seed_override = fuzz_seed->count() > 0;
    opts.workers = workers;
    opts.have_workers_override = fuzz_workers->count() > 0;
    return twoloc::run_fuzz(opts, std::cout, std::cerr);
  }
  if (commutant->parsed()) return twoloc::run_commutant(targets_path, std::cout, std::cerr);
  if (decomp->parsed())
    return twoloc::run_decompose(automorphism_path, seed, std::cout, std::cerr);
  if (report->parsed()) return twoloc::run_report(report_path, std::cout, std::cerr);
  return 3;
}
