#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "twoloc/automorphism.hpp"

using namespace twoloc;

TEST_CASE("conjugation automorphisms") {
  auto scalars = AlgebraDescriptor::scalars();
  Tolerances tol;

  SUBCASE("identity element gives the identity map") {
    Automorphism phi = Automorphism::spatial(MatElem::identity(2, scalars), tol);
    Rng rng(1);
    MatElem x = MatElem::random_gaussian(2, scalars, rng);
    CHECK((phi.apply(x) - x).norm() < 1e-13);
  }

  SUBCASE("a permutation swaps diagonal units") {
    MatElem swap = MatElem::matrix_unit(2, scalars, 0, 1) +
                   MatElem::matrix_unit(2, scalars, 1, 0);
    Automorphism phi = Automorphism::spatial(swap, tol);
    CHECK((phi.apply(MatElem::matrix_unit(2, scalars, 0, 0)) -
           MatElem::matrix_unit(2, scalars, 1, 1))
              .norm() < 1e-13);
  }

  SUBCASE("diagonal conjugation rescales off-diagonal slots") {
    Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(2, 2);
    coeffs(0, 0) = 2.0;
    coeffs(1, 1) = 1.0;
    MatElem a = MatElem::scalar_matrix(2, scalars, coeffs);
    Automorphism phi = Automorphism::spatial(a, tol);
    MatElem e01 = MatElem::matrix_unit(2, scalars, 0, 1);
    // Direct computation: a * e01 * a^-1.
    MatElem expect = oracle::slow_mat_mul(oracle::slow_mat_mul(a, e01), a.inverse());
    CHECK((phi.apply(e01) - expect).norm() < 1e-13);
    CHECK((phi.apply(e01) - e01 * Complex(2.0, 0.0)).norm() < 1e-13);
  }

  SUBCASE("singular elements are rejected") {
    CHECK_THROWS_AS(Automorphism::spatial(MatElem(2, scalars), tol), SingularElement);
  }
}

TEST_CASE("entrywise-extended base automorphisms") {
  Tolerances tol;
  auto block2 = AlgebraDescriptor::full_matrix_block(2);
  const int n = 3;

  BaseElement c = BaseElement::zero(block2);
  Eigen::MatrixXcd cm(2, 2);
  cm << 1, 0, 0, -1;
  c.set_block(0, cm);
  BaseAutomorphism psi = BaseAutomorphism::inner(c, tol);
  Automorphism lifted = Automorphism::induced(psi, n);

  // Oracle: the extension equals conjugation by diag(c, ..., c).
  MatElem chat(n, block2);
  for (int i = 0; i < n; ++i) chat.set_entry(i, i, c);
  Automorphism conj = Automorphism::spatial(chat, tol);
  Rng rng(2);
  for (int s = 0; s < 20; ++s) {
    MatElem x = MatElem::random_gaussian(n, block2, rng);
    CHECK((lifted.apply(x) - conj.apply(x)).norm() < 1e-12);
  }

  // Every matrix unit is fixed, whatever the base map.
  BaseAutomorphism random_psi = BaseAutomorphism::random(block2, rng, tol);
  Automorphism lifted2 = Automorphism::induced(random_psi, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MatElem unit = MatElem::matrix_unit(n, block2, i, j);
      CHECK((lifted2.apply(unit) - unit).norm() < 1e-12);
    }
}

TEST_CASE("composition and inversion") {
  Tolerances tol;
  auto scalars = AlgebraDescriptor::scalars();
  const int n = 3;
  Rng rng(3);

  Automorphism phi = random_automorphism(n, scalars, rng, tol);
  Automorphism round = Automorphism::composite({phi, phi.inverse()});
  const Eigen::Index dim = n * n;
  for (Eigen::Index t = 0; t < dim; ++t) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e[t] = 1.0;
    MatElem b = MatElem::from_coords(n, scalars, e);
    CHECK((round.apply(b) - b).norm() <= 1e-8);
  }

  MatElem a = random_invertible(n, scalars, rng);
  MatElem b = random_invertible(n, scalars, rng);
  Automorphism lhs = Automorphism::composite(
      {Automorphism::spatial(a, tol), Automorphism::spatial(b, tol)});
  Automorphism rhs = Automorphism::spatial(a * b, tol);
  for (int s = 0; s < 10; ++s) {
    MatElem x = MatElem::random_gaussian(n, scalars, rng);
    CHECK((lhs.apply(x) - rhs.apply(x)).norm() < 1e-9 * std::max(1.0, x.norm()));
  }

  auto block2 = AlgebraDescriptor::full_matrix_block(2);
  BaseAutomorphism psi = BaseAutomorphism::random(block2, rng, tol);
  Automorphism inv_of_lift = Automorphism::induced(psi, n).inverse();
  Automorphism lift_of_inv = Automorphism::induced(psi.inverse(), n);
  for (int s = 0; s < 10; ++s) {
    MatElem x = MatElem::random_gaussian(n, block2, rng);
    CHECK((inv_of_lift.apply(x) - lift_of_inv.apply(x)).norm() < 1e-11);
  }
}

TEST_CASE("constructed automorphisms are multiplicative on random pairs") {
  Tolerances tol;
  Rng rng(5);
  auto block2 = AlgebraDescriptor::full_matrix_block(2);
  Automorphism phi = random_automorphism(4, block2, rng, tol);
  CHECK(phi.multiplicativity_residual(rng, 200) <= tol.eps_auto);

  auto scalars = AlgebraDescriptor::scalars();
  Automorphism identity = Automorphism::identity(4, scalars);
  CHECK(identity.multiplicativity_residual(rng, 200) == 0.0);
}

TEST_CASE("coordinate-map verification") {
  Tolerances tol;
  auto scalars = AlgebraDescriptor::scalars();
  const int n = 2;
  Rng rng(7);

  SUBCASE("a transposition map is anti-multiplicative, not multiplicative") {
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(4, 4);
    // coords order: (0,0), (0,1), (1,0), (1,1)
    t(0, 0) = t(3, 3) = 1.0;
    t(1, 2) = t(2, 1) = 1.0;
    CHECK_THROWS_AS(verify_automorphism(n, scalars, t, rng, tol), NotAutomorphism);
  }

  SUBCASE("a conjugation coordinate matrix verifies") {
    MatElem a = random_invertible(n, scalars, rng);
    Eigen::MatrixXcd map = Automorphism::spatial(a, tol).coordinate_matrix();
    Automorphism phi = verify_automorphism(n, scalars, map, rng, tol);
    MatElem x = MatElem::random_gaussian(n, scalars, rng);
    CHECK((phi.apply(x) - a * x * a.inverse()).norm() < 1e-10);
  }

  SUBCASE("the diagonal projection map is not bijective") {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(4, 4);
    p(0, 0) = p(3, 3) = 1.0;
    CHECK_THROWS_AS(verify_automorphism(n, scalars, p, rng, tol), NotAutomorphism);
  }
}

TEST_CASE("joint intertwiner spaces") {
  Tolerances tol;
  auto scalars = AlgebraDescriptor::scalars();

  SUBCASE("a single self-pair is the commutant") {
    MatElem u = separating_diagonal(3, scalars);
    std::pair<MatElem, MatElem> pairs[] = {{u, u}};
    LinSubspace s = joint_intertwiner(pairs, tol);
    CHECK(s.dim() == 3);
    CHECK(classify_structure(s, tol) == SubspacePattern::Diagonal);
  }

  SUBCASE("unit pairs of a conjugation recover the conjugator") {
    const int n = 3;
    Rng rng(11);
    MatElem b = random_invertible(n, scalars, rng);
    Automorphism phi = Automorphism::spatial(b, tol);
    std::vector<std::pair<MatElem, MatElem>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        MatElem unit = MatElem::matrix_unit(n, scalars, i, j);
        pairs.emplace_back(unit, phi.apply(unit));
      }
    LinSubspace s = joint_intertwiner(pairs, tol);
    CHECK(s.membership_residual(b) < 1e-9);
    CHECK(s.dim() == oracle::slow_intertwiner_dim(pairs));
  }

  SUBCASE("two diagonal units intertwine through two off-diagonal slots") {
    MatElem e00 = MatElem::matrix_unit(2, scalars, 0, 0);
    MatElem e11 = MatElem::matrix_unit(2, scalars, 1, 1);
    std::pair<MatElem, MatElem> pairs[] = {{e00, e11}};
    LinSubspace s = joint_intertwiner(pairs, tol);
    CHECK(s.dim() == 2);
    CHECK(s.dim() == oracle::slow_intertwiner_dim({{e00, e11}}));
    CHECK(s.membership_residual(MatElem::matrix_unit(2, scalars, 1, 0)) < 1e-10);
    CHECK(s.membership_residual(MatElem::matrix_unit(2, scalars, 0, 1)) < 1e-10);
  }

  SUBCASE("dimensions agree with the elimination oracle on random pairs") {
    auto block2 = AlgebraDescriptor::full_matrix_block(2);
    Rng rng(13);
    for (int s = 0; s < 5; ++s) {
      std::vector<std::pair<MatElem, MatElem>> pairs;
      pairs.emplace_back(MatElem::random_gaussian(2, block2, rng),
                         MatElem::random_gaussian(2, block2, rng));
      MatElem x = MatElem::random_gaussian(2, block2, rng);
      MatElem b = random_invertible(2, block2, rng);
      pairs.emplace_back(x, b * x * b.inverse());
      LinSubspace space = joint_intertwiner(pairs, tol);
      CHECK(space.dim() == oracle::slow_intertwiner_dim(pairs));
    }
  }
}

TEST_CASE("invertible element search") {
  Tolerances tol;
  auto scalars = AlgebraDescriptor::scalars();
  Rng rng(17);

  MatElem u = separating_diagonal(3, scalars);
  MatElem targets[] = {u};
  LinSubspace cu = solve_commutant(targets, tol);
  auto found = find_invertible_in(cu, tol.invertible_retries, rng, tol);
  REQUIRE(found.element.has_value());
  CHECK(found.element->is_invertible(tol));
  CHECK(cu.membership_residual(*found.element) < 1e-10);

  // A nilpotent line has no invertible elements and the search knows it.
  Eigen::VectorXcd col = MatElem::matrix_unit(2, scalars, 0, 1).coords();
  LinSubspace nil(2, scalars, col);
  auto missing = find_invertible_in(nil, tol.invertible_retries, rng, tol);
  CHECK(!missing.element.has_value());
  CHECK(missing.exhausted);

  // Two diagonal units span invertible elements almost surely.
  Eigen::MatrixXcd two(4, 2);
  two.col(0) = MatElem::matrix_unit(2, scalars, 0, 0).coords();
  two.col(1) = MatElem::matrix_unit(2, scalars, 1, 1).coords();
  LinSubspace diag(2, scalars, two);
  auto ok = find_invertible_in(diag, tol.invertible_retries, rng, tol);
  CHECK(ok.element.has_value());
}

TEST_CASE("factorization into conjugation and entrywise parts") {
  Tolerances tol;
  auto block2 = AlgebraDescriptor::full_matrix_block(2);
  const int n = 4;

  SUBCASE("identity decomposes with zero residual") {
    Rng rng(19);
    Decomposition dec = decompose(Automorphism::identity(n, block2), rng, tol);
    CHECK(dec.residual < 1e-12);
  }

  SUBCASE("pure conjugations and pure entrywise maps round-trip") {
    Rng rng(23);
    MatElem b = random_invertible(n, block2, rng);
    Decomposition dec = decompose(Automorphism::spatial(b, tol), rng, tol);
    CHECK(dec.residual <= 1e-8);

    BaseAutomorphism psi0 = BaseAutomorphism::random(block2, rng, tol);
    Decomposition dec2 = decompose(Automorphism::induced(psi0, n), rng, tol);
    CHECK(dec2.residual <= 1e-8);
  }

  SUBCASE("random products round-trip within tolerance") {
    Rng rng(29);
    for (int s = 0; s < 20; ++s) {
      Automorphism phi = random_automorphism(n, block2, rng, tol);
      Decomposition dec = decompose(phi, rng, tol);
      CHECK(dec.residual <= 1e-8);
      // The recomposition agrees with the input on random elements too.
      Automorphism recomposed = Automorphism::composite(
          {Automorphism::spatial(dec.a, tol), Automorphism::induced(dec.psi, n)});
      MatElem x = MatElem::random_gaussian(n, block2, rng);
      CHECK((phi.apply(x) - recomposed.apply(x)).norm() <= 1e-8 * std::max(1.0, x.norm()));
    }
  }

  SUBCASE("base-block permutations are absorbed") {
    auto two_blocks = AlgebraDescriptor::direct_sum(
        {AlgebraDescriptor::full_matrix_block(2), AlgebraDescriptor::full_matrix_block(2)});
    Rng rng(31);
    BaseAutomorphism swap = BaseAutomorphism::block_permutation(two_blocks, {1, 0});
    Automorphism phi = Automorphism::composite(
        {Automorphism::spatial(random_invertible(2, two_blocks, rng), tol),
         Automorphism::induced(swap, 2)});
    Decomposition dec = decompose(phi, rng, tol);
    CHECK(dec.residual <= 1e-8);
  }
}
