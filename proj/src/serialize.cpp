#include "twoloc/serialize.hpp"

#include <sstream>

namespace twoloc {

std::vector<double> interleave(const Eigen::VectorXcd& v) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(v.size()) * 2);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i].real());
    out.push_back(v[i].imag());
  }
  return out;
}

Eigen::VectorXcd deinterleave(const std::vector<double>& v) {
  if (v.size() % 2 != 0) throw ConfigError("interleaved array must have even length");
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size() / 2));
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = Complex(v[2 * i], v[2 * i + 1]);
  return out;
}

namespace {

Eigen::MatrixXcd matrix_from_interleaved(const std::vector<double>& v, Eigen::Index rows,
                                         Eigen::Index cols) {
  Eigen::VectorXcd flat = deinterleave(v);
  if (flat.size() != rows * cols) throw ConfigError("matrix data has the wrong length");
  Eigen::MatrixXcd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = flat[r * cols + c];
  return out;
}

std::vector<double> matrix_to_interleaved(const Eigen::MatrixXcd& m) {
  Eigen::VectorXcd flat(m.rows() * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat[r * m.cols() + c] = m(r, c);
  return interleave(flat);
}

}  // namespace

json to_json(const AlgebraDescriptor& a) {
  switch (a.kind()) {
    case AlgebraKind::Scalars:
      return json{{"kind", "scalars"}};
    case AlgebraKind::FullMatrixBlock:
      return json{{"kind", "full-matrix-block"}, {"params", {{"k", a.block_size()}}}};
    case AlgebraKind::FiniteFunctions:
      return json{{"kind", "finite-functions"}, {"params", {{"points", a.points()}}}};
    case AlgebraKind::DirectSum: {
      json summands = json::array();
      for (const auto& s : a.summands()) summands.push_back(to_json(s));
      return json{{"kind", "direct-sum"}, {"params", {{"summands", summands}}}};
    }
  }
  throw ConfigError("unknown descriptor kind");
}

AlgebraDescriptor descriptor_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("descriptor needs a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "scalars") return AlgebraDescriptor::scalars();
  if (kind == "full-matrix-block")
    return AlgebraDescriptor::full_matrix_block(j.at("params").at("k").get<int>());
  if (kind == "finite-functions")
    return AlgebraDescriptor::finite_functions(j.at("params").at("points").get<int>());
  if (kind == "direct-sum") {
    std::vector<AlgebraDescriptor> summands;
    for (const auto& s : j.at("params").at("summands"))
      summands.push_back(descriptor_from_json(s));
    return AlgebraDescriptor::direct_sum(std::move(summands));
  }
  throw ConfigError("unknown descriptor kind: " + kind);
}

json to_json(const BaseElement& x) {
  return json{{"descriptor", to_json(x.descriptor())}, {"coords", interleave(x.coords())}};
}

BaseElement base_element_from_json(const json& j) {
  AlgebraDescriptor a = descriptor_from_json(j.at("descriptor"));
  Eigen::VectorXcd coords = deinterleave(j.at("coords").get<std::vector<double>>());
  if (coords.size() != a.dim()) throw ConfigError("coordinate length mismatch");
  return BaseElement(a, std::move(coords));
}

json to_json(const MatElem& x) {
  json entries = json::array();
  for (int i = 0; i < x.size(); ++i)
    for (int j = 0; j < x.size(); ++j)
      entries.push_back(interleave(x.entry(i, j).coords()));
  return json{{"n", x.size()}, {"base", to_json(x.base())}, {"entries", entries}};
}

MatElem mat_elem_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  AlgebraDescriptor base = descriptor_from_json(j.at("base"));
  const auto& entries = j.at("entries");
  if (!entries.is_array() || static_cast<int>(entries.size()) != n * n)
    throw ConfigError("entry list must have n*n items");
  MatElem out(n, base);
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXcd coords = deinterleave(entries.at(idx++).get<std::vector<double>>());
      if (coords.size() != base.dim()) throw ConfigError("entry coordinate mismatch");
      out.set_entry(i, c, BaseElement(base, std::move(coords)));
    }
  return out;
}

json to_json(const LinSubspace& s) {
  json basis = json::array();
  for (int i = 0; i < s.dim(); ++i) basis.push_back(interleave(s.basis_matrix().col(i)));
  return json{{"ambient", {{"n", s.ambient_n()}, {"base", to_json(s.base())}}},
              {"basis", basis}};
}

LinSubspace subspace_from_json(const json& j) {
  const int n = j.at("ambient").at("n").get<int>();
  AlgebraDescriptor base = descriptor_from_json(j.at("ambient").at("base"));
  const auto& cols = j.at("basis");
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  Eigen::MatrixXcd basis(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Eigen::VectorXcd v = deinterleave(cols.at(c).get<std::vector<double>>());
    if (v.size() != dim) throw ConfigError("basis column has the wrong length");
    basis.col(static_cast<Eigen::Index>(c)) = v;
  }
  return LinSubspace(n, base, std::move(basis));
}

json to_json(const BaseAutomorphism& psi) {
  return json{{"base", to_json(psi.descriptor())},
              {"matrix", matrix_to_interleaved(psi.matrix())}};
}

BaseAutomorphism base_automorphism_from_json(const json& j, const Tolerances& tol) {
  AlgebraDescriptor a = descriptor_from_json(j.at("base"));
  Eigen::MatrixXcd map =
      matrix_from_interleaved(j.at("matrix").get<std::vector<double>>(), a.dim(), a.dim());
  return BaseAutomorphism::verified(a, map, tol);
}

json to_json(const Automorphism& phi) {
  json out{{"n", phi.size()}, {"base", to_json(phi.base())}};
  switch (phi.kind()) {
    case Automorphism::Kind::Spatial:
      out["variant"] = "spatial";
      out["a"] = to_json(phi.spatial_element());
      out["a_inv"] = to_json(phi.spatial_inverse());
      break;
    case Automorphism::Kind::Induced:
      out["variant"] = "induced";
      out["psi"] = to_json(phi.base_map());
      break;
    case Automorphism::Kind::Composite: {
      out["variant"] = "composite";
      json factors = json::array();
      for (const auto& f : phi.factors()) factors.push_back(to_json(f));
      out["factors"] = factors;
      break;
    }
    case Automorphism::Kind::Explicit:
      out["variant"] = "explicit";
      out["matrix"] = matrix_to_interleaved(phi.explicit_matrix());
      break;
  }
  return out;
}

Automorphism automorphism_from_json(const json& j, const Tolerances& tol) {
  const int n = j.at("n").get<int>();
  AlgebraDescriptor base = descriptor_from_json(j.at("base"));
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "spatial")
    return Automorphism::spatial(mat_elem_from_json(j.at("a")), tol);
  if (variant == "induced")
    return Automorphism::induced(base_automorphism_from_json(j.at("psi"), tol), n);
  if (variant == "composite") {
    std::vector<Automorphism> factors;
    for (const auto& f : j.at("factors")) factors.push_back(automorphism_from_json(f, tol));
    return Automorphism::composite(std::move(factors));
  }
  if (variant == "explicit") {
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
    Eigen::MatrixXcd map =
        matrix_from_interleaved(j.at("matrix").get<std::vector<double>>(), dim, dim);
    Rng rng(0);
    return verify_automorphism(n, base, map, rng, tol);
  }
  throw ConfigError("unknown automorphism variant: " + variant);
}

json to_json(const LemmaReport& r) {
  json out{{"lemma", r.lemma},
           {"status", to_string(r.status)},
           {"max_residual", r.max_residual},
           {"witnesses_found", r.witnesses_found}};
  if (!r.witness.empty()) out["witness"] = r.witness;
  if (!r.notes.empty()) out["notes"] = r.notes;
  if (r.search_exhausted) out["search_exhausted"] = true;
  return out;
}

json to_json(const CandidateRecord& r) {
  json out{{"id", r.id},
           {"provenance", r.provenance},
           {"ambient", {{"n", r.ambient.n}, {"base", to_json(r.ambient.base)}}},
           {"status", to_string(r.status)},
           {"witness_count", r.witness_count}};
  if (!r.failing_lemma.empty()) out["failing_lemma"] = r.failing_lemma;
  if (std::isfinite(r.residual)) out["residual"] = r.residual;
  if (r.soundness_violation) out["soundness_violation"] = true;
  return out;
}

FuzzConfig fuzz_config_from_json(const json& j) {
  FuzzConfig c;
  if (!j.is_object()) throw ConfigError("config must be an object");
  for (const auto& a : j.at("ambient")) {
    AmbientSpec spec;
    spec.n = a.at("n").get<int>();
    spec.base = descriptor_from_json(a.at("base"));
    c.ambients.push_back(std::move(spec));
  }
  for (const auto& g : j.at("generators")) {
    GeneratorSpec spec;
    spec.kind = g.at("kind").get<std::string>();
    spec.samples = g.at("samples").get<int>();
    if (spec.samples < 0) throw ConfigError("sample counts must be nonnegative");
    c.generators.push_back(std::move(spec));
  }
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    c.tol.eps = t.value("eps", c.tol.eps);
    c.tol.eps_inv = t.value("eps_inv", c.tol.eps_inv);
    c.tol.delta_m = t.value("delta_m", c.tol.delta_m);
    c.tol.eps_auto = t.value("eps_auto", c.tol.eps_auto);
    c.tol.rank_cutoff = t.value("rank_cutoff", c.tol.rank_cutoff);
    c.tol.invertible_retries = t.value("invertible_retries", c.tol.invertible_retries);
  }
  c.workers = j.value("workers", 0);
  return c;
}

json to_json(const FuzzConfig& c) {
  json ambients = json::array();
  for (const auto& a : c.ambients)
    ambients.push_back(json{{"n", a.n}, {"base", to_json(a.base)}});
  json generators = json::array();
  for (const auto& g : c.generators)
    generators.push_back(json{{"kind", g.kind}, {"samples", g.samples}});
  return json{{"ambient", ambients},
              {"generators", generators},
              {"seed", c.seed},
              {"workers", c.workers}};
}

std::string report_to_jsonl(const FuzzReport& report, const Tolerances& tol) {
  std::ostringstream out;
  for (const auto& rec : report.records) out << to_json(rec).dump() << '\n';
  json summary{{"summary",
                {{"certified", report.certified},
                 {"refuted", report.refuted},
                 {"inconclusive", report.inconclusive},
                 {"soundness_violations", report.soundness_violations},
                 {"candidates", report.records.size()},
                 {"seed", report.seed},
                 {"tolerances",
                  {{"eps", tol.eps},
                   {"eps_inv", tol.eps_inv},
                   {"delta_m", tol.delta_m},
                   {"eps_auto", tol.eps_auto},
                   {"rank_cutoff", tol.rank_cutoff}}},
                 {"version", "twoloc 0.1.0"}}}};
  out << summary.dump() << '\n';
  return out.str();
}

TwoLocalCandidate candidate_from_json(const json& j, const Tolerances& tol) {
  if (!j.is_object() || !j.contains("ambient") || !j.contains("kind"))
    throw ConfigError("candidate needs \"ambient\" and \"kind\" fields");
  AmbientSpec ambient;
  ambient.n = j.at("ambient").at("n").get<int>();
  ambient.base = descriptor_from_json(j.at("ambient").at("base"));

  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "automorphism") {
    Automorphism phi = automorphism_from_json(j.at("automorphism"), tol);
    if (phi.size() != ambient.n || phi.base() != ambient.base)
      throw ConfigError("automorphism ambient does not match candidate ambient");
    TwoLocalCandidate out;
    out.n = ambient.n;
    out.base = ambient.base;
    out.provenance = "genuine-automorphism";
    out.eval = [phi](const MatElem& x) { return phi.apply(x); };
    return out;
  }
  if (kind == "explicit-linear") {
    const Eigen::Index dim =
        static_cast<Eigen::Index>(ambient.n) * ambient.n * ambient.base.dim();
    Eigen::MatrixXcd map =
        matrix_from_interleaved(j.at("matrix").get<std::vector<double>>(), dim, dim);
    TwoLocalCandidate out;
    out.n = ambient.n;
    out.base = ambient.base;
    out.provenance = "user-supplied";
    const int n = ambient.n;
    const AlgebraDescriptor base = ambient.base;
    out.eval = [map, n, base](const MatElem& x) {
      return MatElem::from_coords(n, base, map * x.coords());
    };
    return out;
  }
  // Generated kinds share the fuzzing generators; the seed pins them.
  Rng rng(j.value("seed", std::uint64_t{0}));
  return make_candidate(kind, ambient, rng, tol);
}

}  // namespace twoloc
