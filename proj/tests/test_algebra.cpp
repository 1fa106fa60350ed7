#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "twoloc/algebra.hpp"

using namespace twoloc;

namespace {

BaseElement block2_matrix(const AlgebraDescriptor& a, Complex m00, Complex m01, Complex m10,
                          Complex m11) {
  BaseElement x = BaseElement::zero(a);
  Eigen::MatrixXcd m(2, 2);
  m << m00, m01, m10, m11;
  x.set_block(0, m);
  return x;
}

}  // namespace

TEST_CASE("descriptor dimensions and canonical flattening") {
  CHECK(AlgebraDescriptor::scalars().dim() == 1);
  CHECK(AlgebraDescriptor::full_matrix_block(3).dim() == 9);
  CHECK(AlgebraDescriptor::finite_functions(5).dim() == 5);
  auto sum = AlgebraDescriptor::direct_sum(
      {AlgebraDescriptor::scalars(), AlgebraDescriptor::full_matrix_block(2)});
  CHECK(sum.dim() == 5);
  CHECK(sum.simple_blocks() == std::vector<int>{1, 2});
  CHECK(sum.block_offset(1) == 1);
  CHECK(!sum.commutative());
  CHECK(AlgebraDescriptor::finite_functions(4).commutative());

  auto m2_of_sum = AlgebraDescriptor::matrix_over(sum, 2);
  CHECK(m2_of_sum.simple_blocks() == std::vector<int>{2, 4});
  CHECK(m2_of_sum.dim() == 20);

  CHECK_THROWS_AS(AlgebraDescriptor::full_matrix_block(0), PreconditionError);
  CHECK_THROWS_AS(AlgebraDescriptor::finite_functions(0), PreconditionError);
}

TEST_CASE("additive identities") {
  auto a = AlgebraDescriptor::full_matrix_block(2);
  Rng rng(1);
  BaseElement x = BaseElement::random_gaussian(a, rng);
  CHECK((x + BaseElement::zero(a) - x).norm() == 0.0);

  auto s = AlgebraDescriptor::scalars();
  BaseElement e = BaseElement::unit(s);
  CHECK(((e + e) - e * 2.0).norm() == 0.0);

  // Diagonal idempotents summing to the identity of the block.
  BaseElement e00 = BaseElement::basis(a, 0);
  BaseElement e11 = BaseElement::basis(a, 3);
  CHECK((e00 + e11 - BaseElement::unit(a)).norm() == 0.0);

  CHECK_THROWS_AS(BaseElement::unit(s) + BaseElement::unit(a), DescriptorMismatch);
}

TEST_CASE("multiplication matches the algebra structure") {
  auto a = AlgebraDescriptor::full_matrix_block(2);
  // Nilpotent/idempotent pair: x*y = 0 while y*x = x.
  BaseElement x = block2_matrix(a, 0, 1, 0, 0);
  BaseElement y = block2_matrix(a, 1, 0, 0, 0);
  CHECK((x * y).norm() == 0.0);
  CHECK((y * x - x).norm() == 0.0);
  CHECK((y * x).norm() > 0.5);

  Rng rng(2);
  BaseElement r = BaseElement::random_gaussian(a, rng);
  CHECK((BaseElement::unit(a) * r - r).norm() < 1e-14);

  auto f3 = AlgebraDescriptor::finite_functions(3);
  Eigen::VectorXcd u(3), v(3), expect(3);
  u << 1, 2, 3;
  v << 2, 0, 1;
  expect << 2, 0, 3;
  CHECK((BaseElement(f3, u) * BaseElement(f3, v)).coords() == expect);
}

TEST_CASE("inverse") {
  auto s = AlgebraDescriptor::scalars();
  CHECK((BaseElement::unit(s).inverse() - BaseElement::unit(s)).norm() == 0.0);
  CHECK(((BaseElement::unit(s) * 2.0).inverse() - BaseElement::unit(s) * 0.5).norm() ==
        0.0);

  auto a = AlgebraDescriptor::full_matrix_block(2);
  BaseElement d = block2_matrix(a, 2, 0, 0, 4);
  BaseElement d_inv = d.inverse();
  CHECK((d_inv - block2_matrix(a, 0.5, 0, 0, 0.25)).norm() < 1e-14);
  CHECK((oracle::slow_base_mul(d, d_inv) - BaseElement::unit(a)).norm() < 1e-14);

  BaseElement singular = block2_matrix(a, 1, 0, 0, 0);
  CHECK_THROWS_AS(singular.inverse(), SingularElement);
  CHECK(!singular.is_invertible());
}

TEST_CASE("operator norm") {
  auto a = AlgebraDescriptor::full_matrix_block(2);
  CHECK(BaseElement::zero(a).norm() == 0.0);
  CHECK(BaseElement::unit(a).norm() == doctest::Approx(1.0).epsilon(1e-12));

  auto f2 = AlgebraDescriptor::finite_functions(2);
  Eigen::VectorXcd v(2);
  v << Complex(3, 0), Complex(0, -4);
  CHECK(BaseElement(f2, v).norm() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("annihilator witness search") {
  Tolerances tol;
  auto a = AlgebraDescriptor::full_matrix_block(2);
  auto w = find_annihilator_witness(a, tol);
  REQUIRE(w.has_value());
  CHECK((w->first * w->second).norm() <= tol.eps);
  CHECK((w->second * w->first).norm() > tol.delta_m);

  // Commutative instances admit none; the product order never matters.
  for (int m = 1; m <= 4; ++m) {
    auto fm = AlgebraDescriptor::finite_functions(m);
    CHECK(!find_annihilator_witness(fm, tol).has_value());
    Rng rng(m);
    for (int s = 0; s < 500; ++s) {
      BaseElement p = BaseElement::random_gaussian(fm, rng);
      BaseElement q = BaseElement::random_gaussian(fm, rng);
      CHECK((p * q - q * p).norm() == 0.0);
    }
  }

  auto sum = AlgebraDescriptor::direct_sum(
      {AlgebraDescriptor::scalars(), AlgebraDescriptor::full_matrix_block(2)});
  auto w2 = find_annihilator_witness(sum, tol);
  REQUIRE(w2.has_value());
  CHECK((w2->first * w2->second).norm() <= tol.eps);
  CHECK((w2->second * w2->first).norm() > tol.delta_m);
  // Supported inside the matrix block: the scalar slot stays zero.
  CHECK(std::abs(w2->first.coords()[0]) == 0.0);
}

namespace {

Eigen::MatrixXcd map_of(const AlgebraDescriptor& a,
                        const std::function<BaseElement(const BaseElement&)>& f) {
  Eigen::MatrixXcd m(a.dim(), a.dim());
  for (int t = 0; t < a.dim(); ++t) m.col(t) = f(BaseElement::basis(a, t)).coords();
  return m;
}

}  // namespace

TEST_CASE("jordan split: identity, transpose, and a swapped direct sum") {
  Tolerances tol;
  auto a = AlgebraDescriptor::full_matrix_block(2);

  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(4, 4);
  CHECK((jordan_split(id, a, tol) - BaseElement::unit(a)).norm() < 1e-12);

  auto transpose = map_of(a, [&](const BaseElement& x) {
    BaseElement out = BaseElement::zero(a);
    out.set_block(0, x.block(0).transpose());
    return out;
  });
  CHECK(jordan_split(transpose, a, tol).norm() < 1e-12);

  // Two isomorphic blocks, swapped, transposing one side: exactly one block
  // lands multiplicatively.
  auto two = AlgebraDescriptor::direct_sum(
      {AlgebraDescriptor::full_matrix_block(2), AlgebraDescriptor::full_matrix_block(2)});
  auto swap_and_transpose = map_of(two, [&](const BaseElement& x) {
    BaseElement out = BaseElement::zero(two);
    out.set_block(1, x.block(0));              // block 0 -> block 1, straight
    out.set_block(0, x.block(1).transpose());  // block 1 -> block 0, reversed
    return out;
  });
  BaseElement z = jordan_split(swap_and_transpose, two, tol);
  // The multiplicative part is the image of block 0, i.e. the unit of block 1.
  BaseElement block1_unit = BaseElement::zero(two);
  block1_unit.set_block(1, Eigen::MatrixXcd::Identity(2, 2));
  CHECK((z - block1_unit).norm() < 1e-12);
  CHECK((z * z - z).norm() < 1e-12);

  // Exhaustive restricted-map verification: multiplicative on the kept part,
  // anti-multiplicative on the complement, over all basis pairs.
  BaseElement anti = BaseElement::unit(two) - z;
  auto apply = [&](const BaseElement& x) { return BaseElement(two, swap_and_transpose * x.coords()); };
  for (int s = 0; s < two.dim(); ++s)
    for (int t = 0; t < two.dim(); ++t) {
      BaseElement bs = BaseElement::basis(two, s);
      BaseElement bt = BaseElement::basis(two, t);
      CHECK((apply(bs * bt) * z - (apply(bs) * z) * (apply(bt) * z)).norm() < 1e-12);
      CHECK((apply(bs * bt) * anti - (apply(bt) * anti) * (apply(bs) * anti)).norm() <
            1e-12);
    }

  // A non-Jordan map is rejected.
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(4, 4);
  bad(1, 2) = 0.7;
  CHECK_THROWS_AS(jordan_split(bad, a, tol), NotJordan);
}

TEST_CASE("ring axioms hold on random triples for every instance kind") {
  Tolerances tol;
  std::vector<AlgebraDescriptor> kinds = {
      AlgebraDescriptor::scalars(), AlgebraDescriptor::full_matrix_block(2),
      AlgebraDescriptor::finite_functions(3),
      AlgebraDescriptor::direct_sum(
          {AlgebraDescriptor::scalars(), AlgebraDescriptor::full_matrix_block(2)})};
  Rng rng(42);
  for (const auto& a : kinds) {
    for (int s = 0; s < 1000; ++s) {
      BaseElement x = BaseElement::random_gaussian(a, rng);
      BaseElement y = BaseElement::random_gaussian(a, rng);
      BaseElement z = BaseElement::random_gaussian(a, rng);
      const double scale =
          std::max(1.0, x.norm() * std::max(y.norm(), 1.0) * std::max(z.norm(), 1.0));
      CHECK(((x * y) * z - x * (y * z)).norm() / scale < tol.eps);
      CHECK((x * (y + z) - (x * y + x * z)).norm() / scale < tol.eps);
      CHECK(((x + y) * z - (x * z + y * z)).norm() / scale < tol.eps);
      // Against the structure-constant product.
      CHECK((x * y - oracle::slow_base_mul(x, y)).norm() / scale < tol.eps);
    }
  }
}

TEST_CASE("inverse is two-sided and the norm is submultiplicative") {
  Tolerances tol;
  auto a = AlgebraDescriptor::direct_sum(
      {AlgebraDescriptor::full_matrix_block(2), AlgebraDescriptor::scalars()});
  Rng rng(7);
  int tested = 0;
  for (int s = 0; s < 400 && tested < 200; ++s) {
    BaseElement x = BaseElement::random_gaussian(a, rng);
    if (!x.is_invertible(tol)) continue;
    ++tested;
    BaseElement xi = x.inverse(tol);
    CHECK((x * xi - BaseElement::unit(a)).norm() <= 10 * tol.eps * std::max(1.0, x.norm() * xi.norm()));
    CHECK((xi * x - BaseElement::unit(a)).norm() <= 10 * tol.eps * std::max(1.0, x.norm() * xi.norm()));
    BaseElement y = BaseElement::random_gaussian(a, rng);
    CHECK((x * y).norm() <= x.norm() * y.norm() + tol.eps);
  }
  CHECK(tested >= 100);
}

TEST_CASE("adjoint is an involutive anti-homomorphism") {
  auto a = AlgebraDescriptor::direct_sum(
      {AlgebraDescriptor::full_matrix_block(2), AlgebraDescriptor::finite_functions(2)});
  Rng rng(9);
  for (int s = 0; s < 100; ++s) {
    BaseElement x = BaseElement::random_gaussian(a, rng);
    BaseElement y = BaseElement::random_gaussian(a, rng);
    CHECK((x.adjoint().adjoint() - x).norm() == 0.0);
    CHECK(((x * y).adjoint() - y.adjoint() * x.adjoint()).norm() < 1e-12);
  }
}
