#pragma once

// One-phase analysis: a monthly sentiment index computed directly from
// classified posts, and a chi-square test of whether it tracks a survey
// benchmark up to a constant offset.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "smstat/error.hpp"
#include "smstat/numkit.hpp"
#include "smstat/population.hpp"
#include "smstat/timeutil.hpp"

namespace smstat {

struct SentimentPost {
  PostId post_id;
  AccountId account_id;
  Instant timestamp = 0.0;
  int sentiment = 0;  // -1, 0 or +1
};

inline bool valid_sentiment(int z) { return z == -1 || z == 0 || z == 1; }

namespace detail {

inline std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Period labels compare numerically when both are integers ("1" < "10"),
/// otherwise lexicographically, which orders "YYYY-MM" labels correctly.
inline bool period_less(const std::string& a, const std::string& b) {
  auto ia = detail::as_integer(a);
  auto ib = detail::as_integer(b);
  if (ia && ib) return *ia < *ib;
  return a < b;
}

struct IndexSeries {
  std::vector<std::string> periods;
  std::vector<double> values;
  std::vector<std::size_t> post_counts;  // m_t; empty for survey series

  std::size_t size() const noexcept { return periods.size(); }

  void validate() const {
    if (values.size() != periods.size())
      throw MisalignedSeries("index series: periods and values differ in length");
    if (!post_counts.empty() && post_counts.size() != periods.size())
      throw MisalignedSeries("index series: periods and post counts differ in length");
    for (std::size_t i = 1; i < periods.size(); ++i)
      if (!period_less(periods[i - 1], periods[i]))
        throw MisalignedSeries("index series: periods not strictly increasing at '" + periods[i] + "'");
  }
};

/// Benchmark and social-media series over the same periods, optionally with
/// the benchmark's per-period standard errors.
struct PairedSeries {
  IndexSeries cci;
  IndexSeries smi;
  std::optional<std::vector<double>> sigma;
};

struct SmiValue {
  double smi = 0.0;
  std::size_t m = 0;
};

/// 100 * (#positive - #negative) / m over the posts falling in `period`
/// ("YYYY-MM", UTC).
inline SmiValue compute_smi(std::span<const SentimentPost> posts, const std::string& period) {
  long long sum = 0;
  std::size_t m = 0;
  for (const auto& p : posts) {
    if (month_label(p.timestamp) != period) continue;
    if (!valid_sentiment(p.sentiment))
      throw DomainError("post '" + p.post_id.str() + "' has sentiment outside {-1,0,1}");
    sum += p.sentiment;
    ++m;
  }
  if (m == 0) throw EmptyPeriod("no posts in period " + period);
  return {100.0 * static_cast<double>(sum) / static_cast<double>(m), m};
}

/// SMI for every UTC month that has at least one post, in calendar order.
inline IndexSeries monthly_smi(std::span<const SentimentPost> posts) {
  std::map<std::string, std::pair<long long, std::size_t>> buckets;
  for (const auto& p : posts) {
    if (!valid_sentiment(p.sentiment))
      throw DomainError("post '" + p.post_id.str() + "' has sentiment outside {-1,0,1}");
    auto& [sum, m] = buckets[month_label(p.timestamp)];
    sum += p.sentiment;
    ++m;
  }
  IndexSeries s;
  for (const auto& [period, acc] : buckets) {
    s.periods.push_back(period);
    s.values.push_back(100.0 * static_cast<double>(acc.first) / static_cast<double>(acc.second));
    s.post_counts.push_back(acc.second);
  }
  return s;
}

struct TestResult {
  double statistic = 0.0;       // D
  std::size_t df = 0;           // T - 1
  double p_value = 1.0;
  std::size_t deleted_index = 0;  // 1-based position removed from PX

  /// Rejection convention: p <= alpha.
  bool reject(double alpha) const { return p_value <= alpha; }
};

/// The constant-offset test with its covariance factorisation done once, so
/// repeated evaluation (Monte Carlo) costs one projection and one triangular
/// solve.
///
/// Under H0, X_t = CCI_t - SMI_t = mu + e_t with e ~ N(0, Sigma). PX removes
/// mu; dropping one (redundant) component leaves X' ~ N(0, Q) with Q the
/// matching submatrix of P Sigma P. With Q = L L', R = L^-1 X' is standard
/// normal and D = R'R ~ chi2_{T-1}.
class OffsetTest {
public:
  /// `deleted_index` is 1-based; 0 selects the last component.
  OffsetTest(const numkit::Matrix& sigma, std::size_t deleted_index = 0) {
    if (!sigma.square()) throw InvalidDimension("covariance must be square");
    const std::size_t t = sigma.rows();
    if (t < 2) throw InvalidDimension("offset test needs T >= 2, got " + std::to_string(t));
    deleted_ = deleted_index == 0 ? t : deleted_index;
    if (deleted_ > t) throw InvalidDimension("deleted index " + std::to_string(deleted_) + " exceeds T");
    for (std::size_t i = 0; i < t; ++i)
      if (!(sigma(i, i) > 0.0))
        throw SingularCovariance("benchmark variance is zero at period " + std::to_string(i + 1));
    projection_ = numkit::centering_projection(t);
    const numkit::Matrix full = projection_ * sigma * projection_;
    numkit::Matrix q = full.without(deleted_ - 1);
    // symmetrise away rounding noise from the triple product
    for (std::size_t i = 0; i < q.rows(); ++i)
      for (std::size_t j = 0; j < i; ++j) q(i, j) = q(j, i) = 0.5 * (q(i, j) + q(j, i));
    lower_ = numkit::cholesky_lower(q);
  }

  static OffsetTest diagonal(std::span<const double> sd, std::size_t deleted_index = 0) {
    std::vector<double> var(sd.size());
    for (std::size_t i = 0; i < sd.size(); ++i) {
      if (!(sd[i] > 0.0)) throw SingularCovariance("sigma must be positive at period " + std::to_string(i + 1));
      var[i] = sd[i] * sd[i];
    }
    return OffsetTest(numkit::Matrix::diagonal(var), deleted_index);
  }

  std::size_t periods() const noexcept { return projection_.rows(); }
  std::size_t deleted_index() const noexcept { return deleted_; }

  double statistic(std::span<const double> x) const {
    if (x.size() != periods()) throw MisalignedSeries("difference series length does not match covariance");
    const numkit::Vector px = projection_ * x;
    numkit::Vector reduced;
    reduced.reserve(px.size() - 1);
    for (std::size_t i = 0; i < px.size(); ++i)
      if (i + 1 != deleted_) reduced.push_back(px[i]);
    const numkit::Vector r = numkit::forward_substitute(lower_, reduced);
    double d = 0.0;
    for (double v : r) d += v * v;
    return d;
  }

  TestResult run(std::span<const double> x) const {
    TestResult res;
    res.statistic = statistic(x);
    res.df = periods() - 1;
    res.p_value = numkit::chisq_sf(res.statistic, static_cast<double>(res.df));
    res.deleted_index = deleted_;
    return res;
  }

private:
  numkit::Matrix projection_;
  numkit::Matrix lower_;
  std::size_t deleted_ = 0;
};

namespace detail {

inline std::vector<double> differences(const IndexSeries& cci, const IndexSeries& smi) {
  cci.validate();
  smi.validate();
  if (cci.periods != smi.periods) throw MisalignedSeries("benchmark and index series cover different periods");
  std::vector<double> x(cci.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = cci.values[i] - smi.values[i];
  return x;
}

}  // namespace detail

/// Diagonal-covariance test; sigma holds the benchmark standard errors.
inline TestResult validation_test(const IndexSeries& cci, const IndexSeries& smi, std::span<const double> sigma,
                                  std::size_t deleted_index = 0) {
  const auto x = detail::differences(cci, smi);
  if (sigma.size() != x.size()) throw MisalignedSeries("sigma length does not match the series");
  return OffsetTest::diagonal(sigma, deleted_index).run(x);
}

/// Full-covariance variant for autocorrelated benchmarks.
inline TestResult validation_test(const IndexSeries& cci, const IndexSeries& smi, const numkit::Matrix& covariance,
                                  std::size_t deleted_index = 0) {
  const auto x = detail::differences(cci, smi);
  return OffsetTest(covariance, deleted_index).run(x);
}

/// sigma_t = eta * |CCI_t|.
inline std::vector<double> sigma_from_cv(const IndexSeries& cci, double eta) {
  if (!(eta > 0.0)) throw ParameterError("coefficient of variation must be positive");
  std::vector<double> s(cci.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (cci.values[i] == 0.0) throw ZeroBenchmark("benchmark is zero at period '" + cci.periods[i] + "'");
    s[i] = eta * std::abs(cci.values[i]);
  }
  return s;
}

struct SensitivityCurve {
  std::vector<double> etas;
  std::vector<double> statistics;
  std::vector<double> p_values;
  double alpha = 0.05;
  std::optional<double> threshold_eta;       // closed form via D(eta) = D(1)/eta^2
  std::optional<double> grid_threshold_eta;  // grid bracket refined by direct tests
};

inline std::vector<double> linear_grid(double lo, double hi, std::size_t steps) {
  if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("grid needs 0 < min < max");
  if (steps < 2) throw ParameterError("grid needs at least two steps");
  std::vector<double> g(steps);
  for (std::size_t i = 0; i < steps; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  g.back() = hi;
  return g;
}

/// p-value of the offset test as the benchmark CV varies, and the CV above
/// which H0 is no longer rejected at `alpha`.
inline SensitivityCurve sensitivity_sweep(const IndexSeries& cci, const IndexSeries& smi,
                                          std::span<const double> eta_grid, double alpha) {
  if (eta_grid.empty()) throw ParameterError("empty CV grid");
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] > 0.0)) throw ParameterError("CV grid values must be positive");
    if (i > 0 && !(eta_grid[i] > eta_grid[i - 1])) throw ParameterError("CV grid must be strictly increasing");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");

  const auto x = detail::differences(cci, smi);
  const std::size_t df = x.size() - 1;
  auto test_at = [&](double eta) { return OffsetTest::diagonal(sigma_from_cv(cci, eta)).run(x); };

  SensitivityCurve curve;
  curve.alpha = alpha;
  for (double eta : eta_grid) {
    const TestResult r = test_at(eta);
    curve.etas.push_back(eta);
    curve.statistics.push_back(r.statistic);
    curve.p_values.push_back(r.p_value);
  }

  const double d1 = test_at(1.0).statistic;
  const double q = numkit::chisq_upper_quantile(alpha, static_cast<double>(df));
  if (d1 > 0.0) curve.threshold_eta = std::sqrt(d1 / q);

  // Grid route: bracket the crossing p = alpha on the grid, then bisect with
  // full test evaluations (no use of the scale law).
  for (std::size_t i = 1; i < curve.p_values.size(); ++i) {
    if (curve.p_values[i - 1] <= alpha && curve.p_values[i] > alpha) {
      double lo = curve.etas[i - 1];
      double hi = curve.etas[i];
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (test_at(mid).p_value <= alpha ? lo : hi) = mid;
      }
      curve.grid_threshold_eta = 0.5 * (lo + hi);
      break;
    }
  }
  return curve;
}

struct CalibrationResult {
  std::size_t n_sims = 0;
  double rejection_rate = 0.0;
  double mean_statistic = 0.0;
  double var_statistic = 0.0;  // unbiased sample variance of D
};

/// Monte Carlo check of the test's null distribution: draws
/// X_t = mu + e_t, e_t ~ N(0, sigma_t^2), and reports how often p <= alpha.
/// Work is split into fixed-size batches with seeds derived from `seed`, so
/// results do not depend on how batches are scheduled.
inline CalibrationResult calibrate_null(std::span<const double> sigma, double mu, std::size_t n_sims, double alpha,
                                        std::uint64_t seed, unsigned threads = 0) {
  if (n_sims < 1000) throw ParameterError("calibration needs at least 1000 simulations");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  const OffsetTest test = OffsetTest::diagonal(sigma);
  const std::vector<double> sd(sigma.begin(), sigma.end());

  constexpr std::size_t batch_size = 1000;
  const std::size_t n_batches = (n_sims + batch_size - 1) / batch_size;
  std::vector<double> stats(n_sims);
  std::vector<std::size_t> rejections(n_batches, 0);

  auto run_batch = [&](std::size_t b) {
    numkit::Rng rng(numkit::Rng::derive_seed(seed, b));
    std::vector<double> x(sd.size());
    const std::size_t end = std::min(n_sims, (b + 1) * batch_size);
    for (std::size_t s = b * batch_size; s < end; ++s) {
      for (std::size_t t = 0; t < x.size(); ++t) x[t] = numkit::sample_normal(rng, mu, sd[t]);
      const TestResult r = test.run(x);
      stats[s] = r.statistic;
      if (r.reject(alpha)) ++rejections[b];
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_batches));
  if (threads <= 1) {
    for (std::size_t b = 0; b < n_batches; ++b) run_batch(b);
  } else {
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < threads; ++w)
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t b = w; b < n_batches; b += threads) run_batch(b);
      }));
    for (auto& f : workers) f.get();
  }

  CalibrationResult out;
  out.n_sims = n_sims;
  std::size_t rejected = 0;
  for (auto r : rejections) rejected += r;
  out.rejection_rate = static_cast<double>(rejected) / static_cast<double>(n_sims);
  double mean = 0.0;
  for (double d : stats) mean += d;
  mean /= static_cast<double>(n_sims);
  double ss = 0.0;
  for (double d : stats) ss += (d - mean) * (d - mean);
  out.mean_statistic = mean;
  out.var_statistic = ss / static_cast<double>(n_sims - 1);
  return out;
}

}  // namespace smstat
