#pragma once

// Small dense numerical kernel: matrices, Cholesky, chi-square tail,
// correlation and a seeded normal sampler. Sizes here stay in the low
// hundreds, so everything is plain O(n^3) and allocation-happy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "smstat/error.hpp"

namespace smstat::numkit {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_)
      throw InvalidDimension("matrix entry count does not match rows*cols");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  std::span<const double> entries() const noexcept { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool symmetric() const {
    if (!square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) {
        const double a = (*this)(i, j);
        const double b = (*this)(j, i);
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) return false;
      }
    return true;
  }

  /// Copy with row and column `k` removed.
  Matrix without(std::size_t k) const {
    if (!square() || k >= rows_) throw InvalidDimension("without(): index out of range");
    Matrix m(rows_ - 1, cols_ - 1);
    for (std::size_t r = 0, rr = 0; r < rows_; ++r) {
      if (r == k) continue;
      for (std::size_t c = 0, cc = 0; c < cols_; ++c) {
        if (c == k) continue;
        m(rr, cc++) = (*this)(r, c);
      }
      ++rr;
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw InvalidDimension("matrix product: inner dimensions differ");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw InvalidDimension("matrix-vector product: size mismatch");
    Vector out(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      out[i] = s;
    }
    return out;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw InvalidDimension("matrix difference: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] -= b.data_[i];
    return out;
  }

  friend Matrix operator*(double s, Matrix m) {
    for (double& v : m.data_) v *= s;
    return m;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// I - 11'/T. Annihilates constant vectors; symmetric and idempotent.
inline Matrix centering_projection(std::size_t t) {
  if (t < 2) throw InvalidDimension("centering projection needs T >= 2, got " + std::to_string(t));
  const double off = -1.0 / static_cast<double>(t);
  Matrix p(t, t, off);
  for (std::size_t i = 0; i < t; ++i) p(i, i) = 1.0 + off;
  return p;
}

/// Lower-triangular L with L L' = q. Throws SingularCovariance when a pivot
/// drops to 1e-12 * trace(q) / dim or below.
inline Matrix cholesky_lower(const Matrix& q) {
  if (!q.square() || q.rows() == 0) throw InvalidDimension("cholesky needs a non-empty square matrix");
  if (!q.symmetric()) throw DomainError("cholesky input is not symmetric");
  const std::size_t n = q.rows();
  const double tol = 1e-12 * std::abs(q.trace()) / static_cast<double>(n);
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = q(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > tol)) {
      std::ostringstream msg;
      msg << "non-positive pivot " << pivot << " at index " << j;
      throw SingularCovariance(msg.str());
    }
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = q(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / d;
    }
  }
  return l;
}

/// Solves L y = b for lower-triangular L.
inline Vector forward_substitute(const Matrix& lower, std::span<const double> b) {
  if (!lower.square() || lower.rows() != b.size()) throw InvalidDimension("forward substitution: size mismatch");
  const std::size_t n = b.size();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
    y[i] = s / lower(i, i);
  }
  return y;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x) by its power series; converges
// fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (modified
// Lentz); used for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline void check_chisq_args(double x, double df) {
  if (!(df > 0.0)) throw DomainError("chi-square degrees of freedom must be positive");
  if (!(x >= 0.0)) throw DomainError("chi-square argument must be non-negative");
}

}  // namespace detail

/// P(chi2_df > x).
inline double chisq_sf(double x, double df) {
  detail::check_chisq_args(x, df);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double a = 0.5 * df;
  const double h = 0.5 * x;
  if (h < a + 1.0) return 1.0 - detail::gamma_p_series(a, h);
  return detail::gamma_q_cf(a, h);
}

/// P(chi2_df <= x).
inline double chisq_cdf(double x, double df) {
  detail::check_chisq_args(x, df);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double a = 0.5 * df;
  const double h = 0.5 * x;
  if (h < a + 1.0) return detail::gamma_p_series(a, h);
  return 1.0 - detail::gamma_q_cf(a, h);
}

inline double chisq_pdf(double x, double df) {
  detail::check_chisq_args(x, df);
  const double a = 0.5 * df;
  if (x == 0.0) return df < 2.0 ? std::numeric_limits<double>::infinity() : (df == 2.0 ? 0.5 : 0.0);
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

/// x such that chisq_sf(x, df) = upper_tail, by bracketing bisection.
inline double chisq_upper_quantile(double upper_tail, double df) {
  if (!(upper_tail > 0.0 && upper_tail < 1.0)) throw DomainError("upper tail probability must lie in (0, 1)");
  if (!(df > 0.0)) throw DomainError("chi-square degrees of freedom must be positive");
  double lo = 0.0;
  double hi = std::max(1.0, df);
  while (chisq_sf(hi, df) > upper_tail) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chisq_sf(mid, df) > upper_tail)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Sample Pearson correlation.
inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidDimension("correlation: series lengths differ");
  if (a.size() < 2) throw InvalidDimension("correlation needs at least two observations");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateSeries("correlation: a series has zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Seeded generator owned by the caller. Streams are reproducible for a fixed
/// seed and call sequence within one build (mt19937_64 + the standard
/// library's distributions).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  double standard_normal() { return normal_(engine_); }

  /// Independent child seed, for batch-parallel work.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser over (seed, stream)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double sample_normal(Rng& rng, double mean, double sd) {
  if (!(sd >= 0.0)) throw DomainError("normal standard deviation must be non-negative");
  return mean + sd * rng.standard_normal();
}

}  // namespace smstat::numkit
