#pragma once

#include <iosfwd>
#include <string>

#include "twoloc/serialize.hpp"

namespace twoloc {

/// Exit codes for `verify`: 0 certified, 1 refuted, 2 inconclusive, 3 input
/// error. The other runners return 0 on success and 3 on input error.
struct VerifyOptions {
  std::uint64_t seed = 0;
  double residual_tolerance = 1e-7;
  bool have_seed_override = false;
};

int run_verify(const std::string& candidate_path, const std::string& config_path,
               const VerifyOptions& opts, std::ostream& out, std::ostream& err);

struct FuzzOptions {
  std::string config_path;  ///< empty = bundled default scenario
  std::string out_path;     ///< empty = stdout
  std::uint64_t seed = 0;
  bool have_seed_override = false;
  int workers = 0;
  bool have_workers_override = false;
};

int run_fuzz(const FuzzOptions& opts, std::ostream& out, std::ostream& err);

int run_commutant(const std::string& targets_path, std::ostream& out, std::ostream& err);

int run_decompose(const std::string& automorphism_path, std::uint64_t seed,
                  std::ostream& out, std::ostream& err);

int run_report(const std::string& report_path, std::ostream& out, std::ostream& err);

/// The scenario used when `fuzz` is invoked without a config file.
FuzzConfig default_fuzz_config();

}  // namespace twoloc
