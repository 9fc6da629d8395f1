#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>
#include <set>

#include "widenet/numerics.hpp"

using namespace widenet;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ChildrenAreIndependentOfDrawOrder) {
  Rng parent(7);
  const Rng c1 = parent.child(3);
  parent.normal();
  const Rng c2 = parent.child(3);
  Rng x = c1, y = c2;
  EXPECT_EQ(x.next_u64(), y.next_u64());
  EXPECT_NE(Rng::mix_seed(7, 3), Rng::mix_seed(7, 4));
  EXPECT_NE(Rng::mix_seed(7, 3), Rng::mix_seed(8, 3));
}

TEST(Rng, NormalMoments) {
  Rng rng(1);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, UniformRangesAndIndex) {
  Rng rng(2);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = rng.uniform_open_left();
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
    const double r = rng.rademacher();
    EXPECT_TRUE(r == 1.0 || r == -1.0);
    seen.insert(rng.index(5));
  }
  EXPECT_EQ(seen, (std::set<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(SphereSample, NormIsExactlyTheRadius) {
  Rng rng(3);
  for (double r : {0.1, 1.0, 7.5}) {
    for (std::size_t dim : {1u, 2u, 50u, 1000u}) {
      EXPECT_NEAR(sphere_sample(dim, r, rng).norm(), r, 1e-12 * r);
    }
  }
  EXPECT_EQ(sphere_sample(5, 0.0, rng).norm(), 0.0);
  EXPECT_THROW(sphere_sample(0, 1.0, rng), Error);
  EXPECT_THROW(sphere_sample(3, -1.0, rng), Error);
}

TEST(SpectralNorm, MatchesDenseSvdOn20x20) {
  Rng rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const DenseMatrix a = gaussian_matrix(20, 20, rng);
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
    const SpectralEstimate est = spectral_norm(a);
    EXPECT_NEAR(est.value, exact, 1e-6 * exact);
    EXPECT_LE(est.iterations, 500u);
  }
}

TEST(SpectralNorm, RectangularBothOrientations) {
  Rng rng(5);
  for (auto [r, c] : {std::pair{30, 7}, std::pair{7, 30}}) {
    const DenseMatrix a = gaussian_matrix(r, c, rng);
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
    EXPECT_NEAR(spectral_norm(a).value, exact, 1e-6 * exact);
  }
}

TEST(SpectralNorm, TopTripletSatisfiesDefinition) {
  Rng rng(6);
  const DenseMatrix a = gaussian_matrix(12, 9, rng);
  const SingularTriplet t = top_singular_triplet(
      [&](const Vector& v) -> Vector { return a * v; },
      [&](const Vector& u) -> Vector { return a.transpose() * u; }, 9, 12);
  EXPECT_NEAR(t.left.norm(), 1.0, 1e-12);
  EXPECT_NEAR(t.right.norm(), 1.0, 1e-12);
  EXPECT_NEAR((a * t.right - t.sigma * t.left).norm(), 0.0, 1e-3 * t.sigma);
}

TEST(SpectralNorm, ZeroOperatorIsZero) {
  const DenseMatrix z = DenseMatrix::Zero(4, 4);
  EXPECT_EQ(spectral_norm(z).value, 0.0);
}

TEST(SpectralNorm, ExhaustedIterationsThrowWithLastEstimate) {
  Rng rng(7);
  const DenseMatrix a = gaussian_matrix(40, 40, rng);
  PowerIterationOptions opt;
  opt.max_iter = 2;
  opt.tol = 1e-15;
  try {
    spectral_norm(a, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::convergence_failure);
    EXPECT_GT(e.last_estimate(), 0.0);
    EXPECT_EQ(e.iterations(), 2u);
  }
}

TEST(CentralDiff, SecondOrderAccurate) {
  const ScalarFunction f = [](const Vector& v) { return std::sin(v(0)) * std::exp(v(1)); };
  Vector x(2);
  x << 0.3, -0.2;
  EXPECT_NEAR(central_diff(f, x, 0), std::cos(0.3) * std::exp(-0.2), 1e-9);
  EXPECT_NEAR(central_diff(f, x, 1), std::sin(0.3) * std::exp(-0.2), 1e-9);
}

TEST(CentralDiff, NonFiniteValueIsNumericFailure) {
  const ScalarFunction f = [](const Vector& v) { return std::sqrt(v(0)); };
  Vector x = Vector::Zero(1);
  try {
    central_diff(f, x, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric_failure);
  }
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), Error);
}

TEST(SymmetricEigenvalues, AscendingAndCorrect) {
  DenseMatrix a(2, 2);
  a << 2, 1, 1, 2;
  const Vector e = symmetric_eigenvalues(a);
  EXPECT_NEAR(e(0), 1.0, 1e-14);
  EXPECT_NEAR(e(1), 3.0, 1e-14);
}
