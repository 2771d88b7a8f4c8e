#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "smstat/numkit.hpp"
#include "smstat/table2.hpp"

using namespace smstat;
using namespace smstat::numkit;

namespace {

Matrix random_spd(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Matrix q = a * a.transposed();
  for (std::size_t i = 0; i < n; ++i) q(i, i) += static_cast<double>(n);
  return q;
}

}  // namespace

TEST(CenteringProjection, TwoByTwo) {
  const Matrix p = centering_projection(2);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(p(1, 0), -0.5);
  EXPECT_DOUBLE_EQ(p(1, 1), 0.5);
}

TEST(CenteringProjection, RowSumsVanish) {
  for (std::size_t t : {3u, 7u, 27u}) {
    const Matrix p = centering_projection(t);
    for (std::size_t i = 0; i < t; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < t; ++j) s += p(i, j);
      EXPECT_LT(std::abs(s), 1e-12);
    }
  }
}

TEST(CenteringProjection, IdempotentAndSymmetric) {
  const Matrix p = centering_projection(27);
  EXPECT_LT((p * p - p).max_abs(), 1e-12);
  EXPECT_LT((p.transposed() - p).max_abs(), 1e-15);
}

TEST(CenteringProjection, RejectsTooSmall) {
  EXPECT_THROW(centering_projection(1), InvalidDimension);
  EXPECT_THROW(centering_projection(0), InvalidDimension);
}

TEST(Cholesky, Scalar) {
  const Matrix l = cholesky_lower(Matrix(1, 1, std::vector<double>{4.0}));
  EXPECT_DOUBLE_EQ(l(0, 0), 2.0);
}

TEST(Cholesky, Identity) {
  const Matrix l = cholesky_lower(Matrix::identity(6));
  EXPECT_EQ((l - Matrix::identity(6)).max_abs(), 0.0);
}

TEST(Cholesky, ReconstructsRandomSpd) {
  Rng rng(11);
  for (std::size_t n : {1u, 2u, 5u, 13u, 50u}) {
    const Matrix q = random_spd(n, rng);
    const Matrix l = cholesky_lower(q);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) ASSERT_EQ(l(i, j), 0.0);
    EXPECT_LT((l * l.transposed() - q).max_abs(), 1e-10 * q.max_abs()) << "n=" << n;
  }
}

TEST(Cholesky, SingularAndIndefinite) {
  // rank one
  EXPECT_THROW(cholesky_lower(Matrix(2, 2, std::vector<double>{1, 1, 1, 1})), SingularCovariance);
  EXPECT_THROW(cholesky_lower(Matrix(2, 2, std::vector<double>{1, 2, 2, 1})), SingularCovariance);
  // P itself is singular
  EXPECT_THROW(cholesky_lower(centering_projection(4)), SingularCovariance);
}

TEST(Cholesky, RejectsAsymmetric) {
  EXPECT_THROW(cholesky_lower(Matrix(2, 2, std::vector<double>{2, 1, 0, 2})), DomainError);
  EXPECT_THROW(cholesky_lower(Matrix(2, 3)), InvalidDimension);
}

TEST(ForwardSubstitution, SolvesLowerSystem) {
  const Matrix l(3, 3, std::vector<double>{2, 0, 0, 1, 3, 0, -1, 2, 4});
  const Vector x{1.0, -2.0, 0.5};
  const Vector b = l * x;
  const Vector y = forward_substitute(l, b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y[i], x[i], 1e-15);
}

TEST(ChiSquare, ZeroGivesOne) {
  for (double df : {1.0, 2.0, 5.0, 26.0}) EXPECT_EQ(chisq_sf(0.0, df), 1.0);
}

TEST(ChiSquare, CriticalValueDf2) {
  // independent quadrature, then the frozen value
  EXPECT_NEAR(oracle::chisq_sf_quadrature(5.991, 2.0), 0.05, 1e-3);
  EXPECT_NEAR(chisq_sf(5.991, 2.0), 0.05, 1e-3);
}

TEST(ChiSquare, ErfcRelationDf1) {
  const double expected = std::erfc(std::sqrt(2.0 / 2.0));
  EXPECT_NEAR(expected, 0.1573, 1e-4);
  EXPECT_NEAR(chisq_sf(2.0, 1.0), expected, 1e-12);
}

TEST(ChiSquare, MatchesQuadrature) {
  for (double df : {1.0, 2.0, 3.0, 10.0, 26.0, 60.0})
    for (double x : {0.01, 0.5, 1.0, 2.5, 7.0, 15.0, 26.0, 38.8, 55.0, 80.0})
      EXPECT_NEAR(chisq_sf(x, df), oracle::chisq_sf_quadrature(x, df), 1e-9) << "df=" << df << " x=" << x;
}

TEST(ChiSquare, ComplementAndMonotone) {
  for (double df : {1.0, 4.0, 26.0}) {
    double prev = 1.0;
    for (double x = 0.0; x <= 120.0; x += 0.37) {
      const double sf = chisq_sf(x, df);
      EXPECT_NEAR(sf + chisq_cdf(x, df), 1.0, 1e-12);
      EXPECT_LE(sf, prev + 1e-15);
      prev = sf;
    }
  }
}

TEST(ChiSquare, DensityMomentMatchesDf) {
  // trapezoid on a fine grid; mean of chi2_df is df
  for (double df : {2.0, 5.0, 26.0}) {
    double mass = 0.0, mean = 0.0;
    const double h = 1e-3;
    for (double x = h; x < 400.0; x += h) {
      const double w = chisq_pdf(x, df) * h;
      mass += w;
      mean += x * w;
    }
    EXPECT_NEAR(mass, 1.0, 1e-3);
    EXPECT_NEAR(mean / df, 1.0, 1e-3) << "df=" << df;
  }
}

TEST(ChiSquare, QuantileInvertsTail) {
  for (double df : {1.0, 2.0, 26.0}) {
    const double q = chisq_upper_quantile(0.05, df);
    EXPECT_NEAR(chisq_sf(q, df), 0.05, 1e-12);
  }
  EXPECT_NEAR(chisq_upper_quantile(0.05, 2.0), 5.991464547, 1e-8);
}

TEST(ChiSquare, DomainErrors) {
  EXPECT_THROW(chisq_sf(-1.0, 3.0), DomainError);
  EXPECT_THROW(chisq_sf(1.0, 0.0), DomainError);
  EXPECT_THROW(chisq_upper_quantile(0.0, 3.0), DomainError);
}

TEST(Pearson, IdentityAndNegation) {
  const std::vector<double> a{1.0, 4.0, 2.0, 8.0, 5.0};
  std::vector<double> neg(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
  EXPECT_NEAR(pearson_correlation(a, a), 1.0, 1e-15);
  EXPECT_NEAR(pearson_correlation(a, neg), -1.0, 1e-15);
}

TEST(Pearson, AffineInvariance) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(20), b(20), a2(20), b2(20);
    for (std::size_t i = 0; i < 20; ++i) {
      a[i] = rng.standard_normal();
      b[i] = a[i] + rng.standard_normal();
    }
    const double scale = rng.uniform(0.1, 50.0), shift = rng.uniform(-100.0, 100.0);
    for (std::size_t i = 0; i < 20; ++i) {
      a2[i] = scale * a[i] + shift;
      b2[i] = b[i] / scale - shift;
    }
    EXPECT_NEAR(pearson_correlation(a, b), pearson_correlation(a2, b2), 1e-12);
  }
}

TEST(Pearson, Table2) {
  const double r = pearson_correlation(fixtures::table2_cci, fixtures::table2_smi);
  // value implied by the bundled series; the published two-digit figure is 0.88
  EXPECT_NEAR(r, 0.887231, 1e-6);
  EXPECT_EQ(std::floor(r * 100.0) / 100.0, 0.88);
}

TEST(Pearson, Errors) {
  const std::vector<double> flat{2.0, 2.0, 2.0}, x{1.0, 2.0, 3.0};
  EXPECT_THROW(pearson_correlation(flat, x), DegenerateSeries);
  EXPECT_THROW(pearson_correlation(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidDimension);
  EXPECT_THROW(pearson_correlation(x, std::vector<double>{1.0, 2.0}), InvalidDimension);
}

TEST(SampleNormal, ZeroSdIsExact) {
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_normal(rng, 3.25, 0.0), 3.25);
}

TEST(SampleNormal, Deterministic) {
  Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_normal(a, 0.0, 1.0), sample_normal(b, 0.0, 1.0));
}

TEST(SampleNormal, Moments) {
  Rng rng(2024);
  const int n = 100000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_normal(rng, 0.0, 1.0);
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  const double sd = std::sqrt(ss / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(sd, 1.0, 0.02);
}

TEST(SampleNormal, NegativeSd) {
  Rng rng(1);
  EXPECT_THROW(sample_normal(rng, 0.0, -1.0), DomainError);
}
