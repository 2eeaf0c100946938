#include <doctest.h>

#include <cmath>

#include "epsdf/jet.hpp"
#include "support/shapes.hpp"

using namespace epsdf;

TEST_SUITE_BEGIN("jet");

TEST_CASE("packed layout covers the upper triangle") {
  CHECK(packed_size(2) == 3);
  CHECK(packed_size(3) == 6);
  CHECK(packed_index(0, 0, 3) == 0);
  CHECK(packed_index(0, 2, 3) == 2);
  CHECK(packed_index(1, 1, 3) == 3);
  CHECK(packed_index(2, 2, 3) == 5);
  CHECK(packed_index_sym(2, 0, 3) == packed_index(0, 2, 3));
}

TEST_CASE("hess_matrix is symmetric by construction") {
  Rng rng(11);
  Jet2 jet = Jet2::constant(0.0, 3);
  for (Index k = 0; k < jet.hess.size(); ++k) jet.hess[k] = rng.normal();
  const Mat h = jet.hess_matrix();
  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("softplus_jet at zero with unit seed") {
  // sigma(0) = 1/2, sigma'(0) = 1/4
  const Jet2 a = Jet2::seed(0.0, 0, 3);
  const Jet2 out = softplus_jet(a, 1.0);
  CHECK(out.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(out.grad[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out.grad[1] == 0.0);
  CHECK(out.hess_at(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(out.hess_at(0, 1) == 0.0);
  CHECK(out.hess_at(1, 1) == 0.0);
}

TEST_CASE("softplus_jet on a constant jet") {
  for (double beta : {0.5, 1.0, 100.0}) {
    const Jet2 out = softplus_jet(Jet2::constant(0.0, 2), beta);
    CHECK(out.value == doctest::Approx(std::log(2.0) / beta).epsilon(1e-15));
    CHECK(out.grad.isZero(0.0));
    CHECK(out.hess.isZero(0.0));
  }
}

TEST_CASE("softplus_jet matches finite differences at beta = 100") {
  const double beta = 100.0;
  const double v = 0.3;
  Jet2 a = Jet2::constant(v, 3);
  a.grad << 1.0, 2.0, 0.0;
  const Jet2 out = softplus_jet(a, beta);

  // central differences of softplus_beta along the input value
  const double eps = 1e-4;
  auto sp = [beta](double t) { return softplus(t, beta); };
  const double d1 = (sp(v + eps) - sp(v - eps)) / (2.0 * eps);
  const double d2 = (sp(v + eps) - 2.0 * sp(v) + sp(v - eps)) / (eps * eps);
  for (int k = 0; k < 3; ++k) {
    const double expected = d1 * a.grad[k];
    if (expected != 0.0)
      CHECK(std::abs(out.grad[k] - expected) / std::abs(expected) < 1e-6);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double expected = d2 * a.grad[i] * a.grad[j];
      if (expected != 0.0)
        CHECK(std::abs(out.hess_at(i, j) - expected) / std::abs(expected) < 1e-6);
    }
  }
}

TEST_CASE("softplus stays finite for huge scaled inputs") {
  for (double v : {-100.0, -1.0, 0.0, 1.0, 100.0}) {
    const Jet2 out = softplus_jet(Jet2::seed(v, 0, 2), 100.0);
    CHECK(std::isfinite(out.value));
    CHECK(out.grad.allFinite());
    CHECK(out.hess.allFinite());
  }
  CHECK(softplus(100.0, 100.0) == doctest::Approx(100.0));
  CHECK(softplus(-100.0, 100.0) == 0.0);
}

TEST_CASE("affine_jet identity passes jets through") {
  Rng rng(3);
  JetVec in(4, 3);
  for (Index i = 0; i < in.data.rows(); ++i)
    for (Index j = 0; j < in.data.cols(); ++j) in.data(i, j) = rng.normal();
  const RowMat identity = RowMat::Identity(4, 4);
  const JetVec out = affine_jet(identity, Vec::Zero(4), in);
  CHECK((out.data - in.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("affine_jet keeps constant jets constant") {
  Rng rng(4);
  JetVec in(3, 3);
  in.val() << 1.0, -2.0, 0.5;
  RowMat w(4, 3);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  Vec b(4);
  b << 0.1, 0.2, 0.3, 0.4;
  const JetVec out = affine_jet(w, b, in);
  CHECK(out.grad().isZero(0.0));
  CHECK(out.hess().isZero(0.0));
  CHECK((out.val() - (w * in.val() + b)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("affine_jet gradient rows equal weight rows on seed jets") {
  Rng rng(5);
  Vec x(3);
  x << 0.3, -0.7, 1.1;
  const JetVec seeds = JetVec::seed_point(x);
  RowMat w(4, 3);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  const JetVec out = affine_jet(w, Vec::Zero(4), seeds);
  CHECK((out.grad() - Mat(w)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(out.hess().isZero(0.0));
}

TEST_CASE("affine_jet rejects mismatched shapes") {
  JetVec in(3, 3);
  CHECK_THROWS_AS(affine_jet(RowMat::Identity(2, 4), Vec::Zero(2), in), ConfigError);
  CHECK_THROWS_AS(affine_jet(RowMat::Identity(3, 3), Vec::Zero(2), in), ConfigError);
}

TEST_CASE("laplacian of analytic fixtures") {
  Rng rng(6);
  SUBCASE("plane field has zero laplacian") {
    const Vec n = testing::random_direction(3, rng);
    Vec x(3);
    x << 0.2, 0.1, -0.4;
    CHECK(laplacian(testing::plane_jet(n, 0.3, x)) == 0.0);
  }
  SUBCASE("3d sphere field at |x| = 0.5") {
    const Vec x = 0.5 * testing::random_direction(3, rng);
    CHECK(laplacian(testing::sphere_jet(x, 0.2)) == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("2d circle field at |x| = 0.25") {
    const Vec x = 0.25 * testing::random_direction(2, rng);
    CHECK(laplacian(testing::sphere_jet(x, 0.2)) == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("JetVec rows round-trip through Jet2") {
  Rng rng(7);
  JetVec jets(5, 2);
  for (Index i = 0; i < jets.data.rows(); ++i)
    for (Index j = 0; j < jets.data.cols(); ++j) jets.data(i, j) = rng.normal();
  const Jet2 row = jets.row(3);
  JetVec copy(5, 2);
  copy.data = jets.data;
  copy.set_row(3, row);
  CHECK((copy.data - jets.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
