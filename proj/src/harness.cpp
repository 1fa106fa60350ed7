#include "twoloc/harness.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace twoloc {

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

FuzzConfig default_fuzz_config() {
  FuzzConfig c;
  c.ambients.push_back({4, AlgebraDescriptor::full_matrix_block(2)});
  c.generators.push_back({"genuine", 100});
  c.generators.push_back({"twisted", 100});
  c.seed = 42;
  return c;
}

int run_verify(const std::string& candidate_path, const std::string& config_path,
               const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  TwoLocalCandidate candidate;
  Tolerances tol;
  std::uint64_t seed = opts.seed;
  try {
    json cj = load_json_file(candidate_path);
    if (!config_path.empty()) {
      json cfg = load_json_file(config_path);
      if (cfg.contains("tolerances")) {
        const auto& t = cfg.at("tolerances");
        tol.eps = t.value("eps", tol.eps);
        tol.eps_auto = t.value("eps_auto", tol.eps_auto);
        tol.eps_inv = t.value("eps_inv", tol.eps_inv);
        tol.rank_cutoff = t.value("rank_cutoff", tol.rank_cutoff);
        tol.invertible_retries = t.value("invertible_retries", tol.invertible_retries);
      }
      if (!opts.have_seed_override) seed = cfg.value("seed", seed);
    }
    candidate = candidate_from_json(cj, tol);
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  }

  ReconstructResult result;
  try {
    Rng rng(mix_seed(seed, 0));
    result = reconstruct_automorphism(candidate, tol, rng);
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  }

  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(to_json(r));
  json doc{{"status", to_string(result.status)},
           {"witness_count", result.witness_count},
           {"reports", reports}};
  if (!result.failing_lemma.empty()) doc["failing_lemma"] = result.failing_lemma;
  if (std::isfinite(result.residual)) doc["residual"] = result.residual;
  out << doc.dump(2) << "\n";

  switch (result.status) {
    case CandidateStatus::Certified:
      // No success without the residual within tolerance.
      return result.residual <= opts.residual_tolerance ? 0 : 2;
    case CandidateStatus::Refuted:
      return 1;
    case CandidateStatus::Inconclusive:
      return 2;
  }
  return 2;
}

int run_fuzz(const FuzzOptions& opts, std::ostream& out, std::ostream& err) {
  FuzzConfig config;
  try {
    config = opts.config_path.empty() ? default_fuzz_config()
                                      : fuzz_config_from_json(load_json_file(opts.config_path));
    if (opts.have_seed_override) config.seed = opts.seed;
    if (opts.have_workers_override) config.workers = opts.workers;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  }

  FuzzReport report = fuzz_candidates(config);
  const std::string payload = report_to_jsonl(report, config.tol);
  if (opts.out_path.empty()) {
    out << payload;
  } else {
    std::ofstream file(opts.out_path, std::ios::binary);
    if (!file) {
      err << "input error: cannot write " << opts.out_path << "\n";
      return 3;
    }
    file << payload;
  }
  return 0;
}

int run_commutant(const std::string& targets_path, std::ostream& out, std::ostream& err) {
  try {
    json j = load_json_file(targets_path);
    const int n = j.at("n").get<int>();
    AlgebraDescriptor base = descriptor_from_json(j.at("base"));
    std::vector<MatElem> targets;
    for (const auto& t : j.at("targets")) {
      if (t.is_string()) {
        const std::string name = t.get<std::string>();
        if (name == "separating-diagonal")
          targets.push_back(separating_diagonal(n, base));
        else if (name == "upper-shift")
          targets.push_back(upper_shift(n, base));
        else if (name == "identity")
          targets.push_back(MatElem::identity(n, base));
        else
          throw ConfigError("unknown named target: " + name);
      } else {
        MatElem m = mat_elem_from_json(t);
        if (m.size() != n || m.base() != base)
          throw ConfigError("target ambient mismatch");
        targets.push_back(std::move(m));
      }
    }
    LinSubspace space = solve_commutant(targets);
    json doc{{"dimension", space.dim()},
             {"classification", to_string(classify_structure(space))},
             {"basis", to_json(space).at("basis")}};
    out << doc.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  }
}

int run_decompose(const std::string& automorphism_path, std::uint64_t seed,
                  std::ostream& out, std::ostream& err) {
  try {
    json j = load_json_file(automorphism_path);
    Automorphism phi = automorphism_from_json(j);
    Rng rng(mix_seed(seed, 0));
    Decomposition dec = decompose(phi, rng);
    json doc{{"a", to_json(dec.a)}, {"psi", to_json(dec.psi)}, {"residual", dec.residual}};
    out << doc.dump(2) << "\n";
    return 0;
  } catch (const DecompositionFailed& e) {
    err << "decomposition failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  }
}

int run_report(const std::string& report_path, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(report_path);
    if (!in) throw ConfigError("cannot open " + report_path);
    std::string line;
    int lines = 0;
    json summary;
    std::map<std::string, int> by_status;
    std::map<std::string, int> by_lemma;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      ++lines;
      if (j.contains("summary")) {
        summary = j.at("summary");
        continue;
      }
      by_status[j.value("status", "unknown")]++;
      if (j.contains("failing_lemma")) by_lemma[j.at("failing_lemma").get<std::string>()]++;
    }
    json doc{{"records", lines - (summary.is_null() ? 0 : 1)},
             {"by_status", by_status},
             {"by_failing_lemma", by_lemma}};
    if (!summary.is_null()) doc["summary"] = summary;
    out << doc.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace twoloc
