#include "twoloc/automorphism.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <numeric>
#include <sstream>

namespace twoloc {

namespace {

BaseElement apply_coords(const Eigen::MatrixXcd& map, const BaseElement& x) {
  return BaseElement(x.descriptor(), map * x.coords());
}

void check_base_automorphism(const AlgebraDescriptor& a, const Eigen::MatrixXcd& map,
                             const Tolerances& tol) {
  const int d = a.dim();
  if (map.rows() != d || map.cols() != d)
    throw NotAutomorphism("coordinate matrix has the wrong shape");
  const BaseElement unit = BaseElement::unit(a);
  if ((apply_coords(map, unit) - unit).norm() > tol.eps_auto)
    throw NotAutomorphism("map is not unital");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(map);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= tol.rank_cutoff * std::max(1.0, sv(0)))
    throw NotAutomorphism("map is not bijective");
  for (int s = 0; s < d; ++s)
    for (int t = 0; t < d; ++t) {
      const BaseElement bs = BaseElement::basis(a, s);
      const BaseElement bt = BaseElement::basis(a, t);
      const BaseElement lhs = apply_coords(map, bs * bt);
      const BaseElement rhs = apply_coords(map, bs) * apply_coords(map, bt);
      if ((lhs - rhs).norm() > tol.eps_auto) {
        std::ostringstream msg;
        msg << "multiplicativity fails on basis pair (" << s << ", " << t << ")";
        throw NotAutomorphism(msg.str());
      }
    }
}

}  // namespace

BaseAutomorphism::BaseAutomorphism(AlgebraDescriptor a, Eigen::MatrixXcd map,
                                   Eigen::MatrixXcd inv)
    : descriptor_(std::move(a)), map_(std::move(map)), inv_(std::move(inv)) {}

BaseAutomorphism BaseAutomorphism::identity(const AlgebraDescriptor& a) {
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(a.dim(), a.dim());
  return BaseAutomorphism(a, id, id);
}

BaseAutomorphism BaseAutomorphism::verified(const AlgebraDescriptor& a,
                                            const Eigen::MatrixXcd& map,
                                            const Tolerances& tol) {
  check_base_automorphism(a, map, tol);
  return BaseAutomorphism(a, map, map.partialPivLu().inverse());
}

BaseAutomorphism BaseAutomorphism::inner(const BaseElement& c, const Tolerances& tol) {
  const auto& a = c.descriptor();
  const BaseElement c_inv = c.inverse(tol);
  const int d = a.dim();
  Eigen::MatrixXcd map(d, d), inv(d, d);
  for (int t = 0; t < d; ++t) {
    const BaseElement b = BaseElement::basis(a, t);
    map.col(t) = (c * b * c_inv).coords();
    inv.col(t) = (c_inv * b * c).coords();
  }
  return BaseAutomorphism(a, std::move(map), std::move(inv));
}

BaseAutomorphism BaseAutomorphism::block_permutation(const AlgebraDescriptor& a,
                                                     const std::vector<int>& perm) {
  const auto& blocks = a.simple_blocks();
  if (perm.size() != blocks.size())
    throw PreconditionError("permutation length does not match block count");
  const int d = a.dim();
  Eigen::MatrixXcd map = Eigen::MatrixXcd::Zero(d, d);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int target = perm[b];
    if (blocks[b] != blocks[target])
      throw PreconditionError("permutation mixes blocks of different sizes");
    const int k = blocks[b];
    for (int t = 0; t < k * k; ++t)
      map(a.block_offset(target) + t, a.block_offset(b) + t) = 1.0;
  }
  return BaseAutomorphism(a, map, map.adjoint());
}

BaseAutomorphism BaseAutomorphism::random(const AlgebraDescriptor& a, Rng& rng,
                                          const Tolerances& tol) {
  // Inner part from a conditioned random invertible element.
  BaseElement c = BaseElement::unit(a);
  for (int attempt = 0; attempt < 64; ++attempt) {
    BaseElement sample = BaseElement::random_gaussian(a, rng);
    bool good = true;
    for (int b = 0; b < a.block_count() && good; ++b) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sample.block(b));
      const auto& sv = svd.singularValues();
      if (sv(sv.size() - 1) <= 1e-3 || sv(0) / sv(sv.size() - 1) > 100.0) good = false;
    }
    if (good) {
      c = sample;
      break;
    }
  }
  BaseAutomorphism inner_part = inner(c, tol);

  // Random size-preserving block permutation.
  auto perms = block_permutation_candidates(a);
  std::uniform_int_distribution<std::size_t> pick(0, perms.size() - 1);
  BaseAutomorphism perm_part = block_permutation(a, perms[pick(rng)]);
  return BaseAutomorphism(a, inner_part.map_ * perm_part.map_,
                          perm_part.inv_ * inner_part.inv_);
}

BaseElement BaseAutomorphism::apply(const BaseElement& x) const {
  if (x.descriptor() != descriptor_) throw DescriptorMismatch("apply: descriptor mismatch");
  return BaseElement(descriptor_, map_ * x.coords());
}

BaseAutomorphism BaseAutomorphism::inverse() const {
  return BaseAutomorphism(descriptor_, inv_, map_);
}

std::vector<std::vector<int>> block_permutation_candidates(const AlgebraDescriptor& a) {
  const auto& blocks = a.simple_blocks();
  const int count = static_cast<int>(blocks.size());
  std::vector<int> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  // Enumerate all permutations, keep the size-preserving ones, identity first.
  std::vector<int> sorted = perm;
  do {
    bool ok = true;
    for (int b = 0; b < count; ++b)
      if (blocks[b] != blocks[sorted[b]]) {
        ok = false;
        break;
      }
    if (ok) out.push_back(sorted);
  } while (std::next_permutation(sorted.begin(), sorted.end()));
  std::sort(out.begin(), out.end());  // identity is lexicographically first
  return out;
}

Automorphism::Automorphism(int n, AlgebraDescriptor base, Repr repr)
    : n_(n), base_(std::move(base)), repr_(std::make_shared<const Repr>(std::move(repr))) {}

Automorphism Automorphism::identity(int n, const AlgebraDescriptor& base) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
  return Automorphism(n, base, ExplicitData{id, id});
}

Automorphism Automorphism::spatial(const MatElem& a, const Tolerances& tol) {
  MatElem a_inv = a.inverse(tol);  // throws SingularElement if not invertible
  return Automorphism(a.size(), a.base(), SpatialData{a, std::move(a_inv)});
}

Automorphism Automorphism::induced(const BaseAutomorphism& psi, int n) {
  return Automorphism(n, psi.descriptor(), InducedData{psi});
}

Automorphism Automorphism::composite(std::vector<Automorphism> factors) {
  if (factors.empty()) throw PreconditionError("composite needs at least one factor");
  const int n = factors.front().size();
  const AlgebraDescriptor base = factors.front().base();
  for (const auto& f : factors)
    if (f.size() != n || f.base() != base)
      throw DescriptorMismatch("composite factors must share the ambient algebra");
  return Automorphism(n, base, CompositeData{std::move(factors)});
}

Automorphism Automorphism::explicit_map(int n, const AlgebraDescriptor& base,
                                        const Eigen::MatrixXcd& map,
                                        const Eigen::MatrixXcd& inv) {
  return Automorphism(n, base, ExplicitData{map, inv});
}

MatElem Automorphism::apply(const MatElem& x) const {
  if (x.size() != n_ || x.base() != base_)
    throw DescriptorMismatch("apply: ambient mismatch");
  if (const auto* s = std::get_if<SpatialData>(repr_.get()))
    return s->a * x * s->a_inv;
  if (const auto* i = std::get_if<InducedData>(repr_.get())) {
    MatElem out(n_, base_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) out.set_entry(r, c, i->psi.apply(x.entry(r, c)));
    return out;
  }
  if (const auto* c = std::get_if<CompositeData>(repr_.get())) {
    MatElem out = x;
    for (auto it = c->factors.rbegin(); it != c->factors.rend(); ++it)
      out = it->apply(out);
    return out;
  }
  const auto& e = std::get<ExplicitData>(*repr_);
  return MatElem::from_coords(n_, base_, e.map * x.coords());
}

Automorphism Automorphism::inverse() const {
  if (const auto* s = std::get_if<SpatialData>(repr_.get()))
    return Automorphism(n_, base_, SpatialData{s->a_inv, s->a});
  if (const auto* i = std::get_if<InducedData>(repr_.get()))
    return Automorphism(n_, base_, InducedData{i->psi.inverse()});
  if (const auto* c = std::get_if<CompositeData>(repr_.get())) {
    std::vector<Automorphism> inv;
    inv.reserve(c->factors.size());
    for (auto it = c->factors.rbegin(); it != c->factors.rend(); ++it)
      inv.push_back(it->inverse());
    return Automorphism(n_, base_, CompositeData{std::move(inv)});
  }
  const auto& e = std::get<ExplicitData>(*repr_);
  return Automorphism(n_, base_, ExplicitData{e.inv, e.map});
}

Eigen::MatrixXcd Automorphism::coordinate_matrix() const {
  const Eigen::Index dim = static_cast<Eigen::Index>(n_) * n_ * base_.dim();
  if (const auto* e = std::get_if<ExplicitData>(repr_.get())) return e->map;
  Eigen::MatrixXcd out(dim, dim);
  for (Eigen::Index t = 0; t < dim; ++t) {
    Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(dim);
    unit[t] = 1.0;
    out.col(t) = apply(MatElem::from_coords(n_, base_, unit)).coords();
  }
  return out;
}

double Automorphism::multiplicativity_residual(Rng& rng, int random_pairs) const {
  double worst =
      (apply(MatElem::identity(n_, base_)) - MatElem::identity(n_, base_)).norm();
  std::vector<MatElem> units;
  units.reserve(static_cast<std::size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) units.push_back(MatElem::matrix_unit(n_, base_, i, j));
  std::vector<MatElem> images;
  images.reserve(units.size());
  for (const auto& u : units) images.push_back(apply(u));
  for (std::size_t p = 0; p < units.size(); ++p)
    for (std::size_t q = 0; q < units.size(); ++q)
      worst = std::max(worst, (apply(units[p] * units[q]) - images[p] * images[q]).norm());
  for (int s = 0; s < random_pairs; ++s) {
    MatElem x = MatElem::random_gaussian(n_, base_, rng);
    MatElem y = MatElem::random_gaussian(n_, base_, rng);
    const double scale = std::max(1.0, x.norm() * y.norm());
    worst = std::max(worst, (apply(x * y) - apply(x) * apply(y)).norm() / scale);
  }
  return worst;
}

Automorphism::Kind Automorphism::kind() const {
  if (std::holds_alternative<SpatialData>(*repr_)) return Kind::Spatial;
  if (std::holds_alternative<InducedData>(*repr_)) return Kind::Induced;
  if (std::holds_alternative<CompositeData>(*repr_)) return Kind::Composite;
  return Kind::Explicit;
}

const MatElem& Automorphism::spatial_element() const {
  return std::get<SpatialData>(*repr_).a;
}
const MatElem& Automorphism::spatial_inverse() const {
  return std::get<SpatialData>(*repr_).a_inv;
}
const BaseAutomorphism& Automorphism::base_map() const {
  return std::get<InducedData>(*repr_).psi;
}
const std::vector<Automorphism>& Automorphism::factors() const {
  return std::get<CompositeData>(*repr_).factors;
}
const Eigen::MatrixXcd& Automorphism::explicit_matrix() const {
  return std::get<ExplicitData>(*repr_).map;
}
const Eigen::MatrixXcd& Automorphism::explicit_inverse() const {
  return std::get<ExplicitData>(*repr_).inv;
}

Automorphism verify_automorphism(int n, const AlgebraDescriptor& base,
                                 const Eigen::MatrixXcd& map, Rng& rng,
                                 const Tolerances& tol) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  if (map.rows() != dim || map.cols() != dim)
    throw NotAutomorphism("coordinate matrix has the wrong shape");
  auto apply = [&](const MatElem& x) {
    return MatElem::from_coords(n, base, map * x.coords());
  };

  const MatElem one = MatElem::identity(n, base);
  if ((apply(one) - one).norm() > tol.eps_auto)
    throw NotAutomorphism("map is not unital");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(map);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= tol.rank_cutoff * std::max(1.0, sv(0)))
    throw NotAutomorphism("map is not bijective");

  std::vector<MatElem> units, images;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      units.push_back(MatElem::matrix_unit(n, base, i, j));
      images.push_back(apply(units.back()));
    }
  for (std::size_t p = 0; p < units.size(); ++p)
    for (std::size_t q = 0; q < units.size(); ++q)
      if ((apply(units[p] * units[q]) - images[p] * images[q]).norm() > tol.eps_auto) {
        std::ostringstream msg;
        msg << "multiplicativity fails on matrix-unit pair (" << p / units.size() << ")"
            << " indices " << p << "," << q;
        throw NotAutomorphism(msg.str());
      }
  for (int s = 0; s < 50; ++s) {
    MatElem x = MatElem::random_gaussian(n, base, rng);
    MatElem y = MatElem::random_gaussian(n, base, rng);
    const double scale = std::max(1.0, x.norm() * y.norm());
    if ((apply(x * y) - apply(x) * apply(y)).norm() / scale > tol.eps_auto)
      throw NotAutomorphism("multiplicativity fails on a random pair");
  }
  return Automorphism::explicit_map(n, base, map, map.partialPivLu().inverse());
}

namespace {

double pair_scale(std::span<const std::pair<MatElem, MatElem>> pairs) {
  double scale = 0.0;
  for (const auto& [x, y] : pairs) scale = std::max(scale, x.norm() + y.norm());
  return scale;
}

}  // namespace

LinSubspace joint_intertwiner(std::span<const std::pair<MatElem, MatElem>> pairs,
                              const Tolerances& tol) {
  if (pairs.empty()) throw PreconditionError("intertwiner needs at least one pair");
  const int n = pairs[0].first.size();
  const auto& base = pairs[0].first.base();
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * base.dim();
  Eigen::MatrixXcd op =
      stacked_sylvester(pairs, Eigen::MatrixXcd::Identity(dim, dim), n, base);
  return LinSubspace(n, base, nullspace_basis_gram(op, tol.rank_cutoff, pair_scale(pairs)));
}

LinSubspace joint_intertwiner_within(std::span<const std::pair<MatElem, MatElem>> pairs,
                                     const LinSubspace& within, const Tolerances& tol) {
  if (pairs.empty()) return within;
  const int n = within.ambient_n();
  const auto& base = within.base();
  Eigen::MatrixXcd op = stacked_sylvester(pairs, within.basis_matrix(), n, base);
  Eigen::MatrixXcd null_in = nullspace_basis_gram(op, tol.rank_cutoff, pair_scale(pairs));
  return LinSubspace(n, base, within.basis_matrix() * null_in);
}

InvertibleSearch find_invertible_in(const LinSubspace& s, int retries, Rng& rng,
                                    const Tolerances& tol) {
  InvertibleSearch out;
  if (s.dim() == 0) {
    out.exhausted = true;
    return out;
  }
  for (int attempt = 0; attempt < retries; ++attempt) {
    ++out.tries;
    MatElem candidate = s.random_element(rng);
    double rel = std::numeric_limits<double>::infinity();
    bool invertible = true;
    for (const auto& m : candidate.blocks()) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
      const auto& sv = svd.singularValues();
      const double hi = sv(0);
      const double lo = sv(sv.size() - 1);
      rel = std::min(rel, hi > 0 ? lo / hi : 0.0);
      if (lo <= tol.eps_inv) invertible = false;
    }
    out.best_rel_sigma = std::max(out.best_rel_sigma, rel);
    if (invertible && rel > 1e-3) {
      out.element = std::move(candidate);
      return out;
    }
    if (invertible && !out.element) out.element = std::move(candidate);
  }
  if (out.element) return out;
  out.exhausted = out.best_rel_sigma <= tol.singular_margin;
  return out;
}

Decomposition decompose(const Automorphism& phi, Rng& rng, const Tolerances& tol) {
  const int n = phi.size();
  const auto& base = phi.base();

  std::vector<std::pair<MatElem, MatElem>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MatElem unit = MatElem::matrix_unit(n, base, i, j);
      pairs.emplace_back(unit, phi.apply(unit));
    }
  LinSubspace space = joint_intertwiner(pairs, tol);
  InvertibleSearch search = find_invertible_in(space, tol.invertible_retries, rng, tol);
  if (!search.element)
    throw DecompositionFailed(search.exhausted
                                  ? "no invertible intertwiner exists for the matrix units"
                                  : "invertible intertwiner search gave up");
  MatElem a = *search.element;

  // Normalization: unit-norm (0,0) entry with positive-real leading coordinate.
  {
    const BaseElement t = a.entry(0, 0);
    const double tn = t.norm();
    if (tn > tol.eps) {
      Complex lead(0.0, 0.0);
      for (Eigen::Index i = 0; i < t.coords().size(); ++i)
        if (std::abs(t.coords()[i]) > tol.eps * tn) {
          lead = t.coords()[i];
          break;
        }
      if (std::abs(lead) > 0) a = a * (1.0 / (tn * (lead / std::abs(lead))));
    }
  }

  // Conjugating back by a fixes every matrix unit, which pins an entrywise map.
  Automorphism unconjugated = Automorphism::composite(
      {Automorphism::spatial(a, tol).inverse(), phi});
  const int d = base.dim();
  Eigen::MatrixXcd psi_map(d, d);
  for (int t = 0; t < d; ++t) {
    MatElem lifted = unconjugated.apply(MatElem::embed(BaseElement::basis(base, t), n, 0, 0));
    psi_map.col(t) = lifted.entry(0, 0).coords();
  }
  BaseAutomorphism psi = [&] {
    try {
      return BaseAutomorphism::verified(base, psi_map, tol);
    } catch (const NotAutomorphism& e) {
      throw DecompositionFailed(std::string("entry map is not a base automorphism: ") +
                                e.what());
    }
  }();

  Automorphism recomposed = Automorphism::composite(
      {Automorphism::spatial(a, tol), Automorphism::induced(psi, n)});
  double residual = 0.0;
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n * d;
  for (Eigen::Index t = 0; t < dim; ++t) {
    Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(dim);
    unit[t] = 1.0;
    MatElem b = MatElem::from_coords(n, base, unit);
    residual = std::max(residual, (phi.apply(b) - recomposed.apply(b)).norm());
  }
  (void)rng;
  return Decomposition{std::move(a), std::move(psi), residual};
}

MatElem random_invertible(int n, const AlgebraDescriptor& base, Rng& rng,
                          double max_condition) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    MatElem sample = MatElem::random_gaussian(n, base, rng);
    const double cond = sample.condition();
    if (std::isfinite(cond) && cond <= max_condition && sample.is_invertible())
      return sample;
  }
  // Extremely unlikely; shift toward the identity to force conditioning.
  return MatElem::random_gaussian(n, base, rng) + MatElem::identity(n, base) * 4.0;
}

Automorphism random_automorphism(int n, const AlgebraDescriptor& base, Rng& rng,
                                 const Tolerances& tol) {
  MatElem a = random_invertible(n, base, rng);
  BaseAutomorphism psi = BaseAutomorphism::random(base, rng, tol);
  return Automorphism::composite(
      {Automorphism::spatial(a, tol), Automorphism::induced(psi, n)});
}

}  // namespace twoloc
