#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "summation.hpp"

namespace record_collector {

inline constexpr double kNormalizationTolerance = 1e-12;

/// Finite probability mass function p_1..p_m on {1, ..., m}.
///
/// Every entry is strictly positive and the entries sum to one. Inputs whose
/// sum is within kNormalizationTolerance of one are renormalized by dividing
/// through the computed sum; anything else is rejected.
class ProbabilityVector {
 public:
  static ProbabilityVector from_probabilities(std::vector<double> probs,
                                              std::string descriptor = "custom") {
    if (probs.empty()) throw invalid_support("probability vector must have at least one entry");
    compensated_sum total;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double p = probs[i];
      if (!std::isfinite(p) || p <= 0.0) {
        throw invalid_support("probability p_" + std::to_string(i + 1) +
                              " must be finite and strictly positive, got " + std::to_string(p));
      }
      total += p;
    }
    const long double sum = total.value();
    if (std::fabs(sum - 1.0L) > kNormalizationTolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "probabilities sum to " << static_cast<double>(sum) << ", not 1 within "
          << kNormalizationTolerance;
      throw invalid_support(msg.str());
    }
    for (double& p : probs) p = static_cast<double>(p / sum);
    return ProbabilityVector(std::move(probs), std::move(descriptor));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::string& descriptor() const noexcept { return descriptor_; }

  /// 1 - p_{i_1} - ... - p_{i_j}: probability that a draw lands outside the
  /// given (zero-based, pairwise distinct) indices.
  /// Entries renormalized in long double so that they sum to one to
  /// extended precision (the double entries can miss by an ulp or two).
  std::vector<long double> extended() const {
    compensated_sum total;
    for (double p : probs_) total += p;
    const long double sum = total.value();
    std::vector<long double> out(probs_.size());
    for (std::size_t i = 0; i < probs_.size(); ++i) out[i] = probs_[i] / sum;
    return out;
  }

  long double escape_probability(std::span<const std::size_t> indices) const {
    long double q = 1.0L;
    for (std::size_t i : indices) q -= probs_[i];
    return q;
  }

  friend bool operator==(const ProbabilityVector& a, const ProbabilityVector& b) {
    return a.probs_ == b.probs_;
  }

 private:
  ProbabilityVector(std::vector<double> probs, std::string descriptor)
      : probs_(std::move(probs)), descriptor_(std::move(descriptor)) {}

  std::vector<double> probs_;
  std::string descriptor_;
};

/// Mandelbrot (Zipf-Mandelbrot) parameters with the cached normalization
/// a_m = (sum_{i=1..m} (c+i)^-theta)^-1.
class MandelbrotParams {
 public:
  MandelbrotParams(std::size_t m, double theta, double c) : m_(m), theta_(theta), c_(c) {
    if (m == 0) throw invalid_support("Mandelbrot support size m must be >= 1");
    if (!(theta >= 1.0 && theta <= 2.0)) {
      throw invalid_support("Mandelbrot exponent theta must lie in [1, 2], got " +
                            std::to_string(theta));
    }
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw invalid_support("Mandelbrot shift c must be finite and >= 0, got " +
                            std::to_string(c));
    }
    a_m_ = static_cast<double>(1.0L / power_sum(m, theta, c));
  }

  std::size_t m() const noexcept { return m_; }
  double theta() const noexcept { return theta_; }
  double c() const noexcept { return c_; }
  double a_m() const noexcept { return a_m_; }

  /// sum_{i=1..m} (c+i)^-theta, smallest terms first.
  static long double power_sum(std::size_t m, double theta, double c) {
    compensated_sum s;
    for (std::size_t i = m; i >= 1; --i) {
      s += std::pow(static_cast<long double>(c) + static_cast<long double>(i),
                    -static_cast<long double>(theta));
    }
    return s.value();
  }

 private:
  std::size_t m_;
  double theta_;
  double c_;
  double a_m_;
};

inline ProbabilityVector uniform_pmf(std::size_t m) {
  if (m == 0) throw invalid_support("uniform distribution needs m >= 1");
  return ProbabilityVector::from_probabilities(std::vector<double>(m, 1.0 / static_cast<double>(m)),
                                               "uniform(m=" + std::to_string(m) + ")");
}

inline ProbabilityVector mandelbrot_pmf(const MandelbrotParams& params) {
  std::vector<double> probs(params.m());
  const long double a = 1.0L / MandelbrotParams::power_sum(params.m(), params.theta(), params.c());
  for (std::size_t i = 0; i < params.m(); ++i) {
    probs[i] = static_cast<double>(
        a * std::pow(static_cast<long double>(params.c()) + static_cast<long double>(i + 1),
                     -static_cast<long double>(params.theta())));
  }
  std::ostringstream desc;
  desc << "mandelbrot(m=" << params.m() << ",theta=" << params.theta() << ",c=" << params.c() << ")";
  return ProbabilityVector::from_probabilities(std::move(probs), desc.str());
}

/// Two-sided enclosure of sum_{i>=1} (c+i)^-theta.
struct HurwitzSumBracket {
  long double lower;
  long double upper;
  std::size_t terms;  // number of explicitly summed terms N

  long double midpoint() const { return (lower + upper) / 2; }
  long double width() const { return upper - lower; }
};

inline constexpr std::size_t kMaxNormalizationTerms = 200'000'000;

namespace detail {

// Bounds on sum_{i>N} f(i), f(x) = (c+x)^-theta, which is convex and
// decreasing for theta > 0:
//   integral test:  F(N+1)            <= tail <= F(N)
//   convexity:      F(N) - f(N)/2     <= tail <= F(N+1/2)
// where F(x) = int_x^inf f = (c+x)^(1-theta)/(theta-1).
inline std::pair<long double, long double> tail_bounds(std::size_t n, long double theta,
                                                       long double c) {
  const long double x = c + static_cast<long double>(n);
  auto F = [&](long double y) { return std::pow(y, 1.0L - theta) / (theta - 1.0L); };
  const long double f_n = std::pow(x, -theta);
  const long double lower = std::max(F(x + 1.0L), F(x) - f_n / 2);
  const long double upper = std::min(F(x), F(x + 0.5L));
  return {lower, upper};
}

}  // namespace detail

/// Encloses sum_{i>=1} (c+i)^-theta in an interval no wider than 2*tol by
/// summing the first N terms and bracketing the tail with integrals.
inline HurwitzSumBracket hurwitz_sum_bracket(double theta, double c, double tol) {
  if (!(theta > 1.0)) {
    throw divergent_series("sum of (c+i)^-theta diverges for theta <= 1 (theta=" +
                           std::to_string(theta) + ")");
  }
  if (!(c >= 0.0)) throw domain_error("shift c must be >= 0");
  if (!(tol > 0.0)) throw domain_error("tolerance must be > 0");

  const long double th = theta;
  const long double cc = c;
  // The enclosure width is at most (f(N) - f(N+1/2))/2 <= theta (c+N)^(-theta-1) / 4;
  // choosing N from this bound avoids differencing nearly equal integrals.
  auto width_bound = [&](std::size_t n) {
    return th * std::pow(cc + static_cast<long double>(n), -th - 1.0L) / 4.0L;
  };
  std::size_t n = 16;
  while (width_bound(n) > 2.0L * tol) {
    if (n >= kMaxNormalizationTerms) {
      throw resource_limit("normalization terms", static_cast<double>(n) * 2,
                           static_cast<double>(kMaxNormalizationTerms));
    }
    n = std::min(n * 2, kMaxNormalizationTerms);
  }
  // The sum exceeds the integral of f over [1, inf); refuse tolerances below
  // what long double can resolve at that size before paying for the loop.
  const long double magnitude = std::pow(cc + 1.0L, 1.0L - th) / (th - 1.0L);
  const long double resolution = 16 * std::numeric_limits<long double>::epsilon() * magnitude;
  if (tol < resolution) {
    std::ostringstream msg;
    msg << "tolerance " << tol << " is below the resolvable " << static_cast<double>(resolution)
        << " for a sum of this size";
    throw domain_error(msg.str());
  }
  compensated_sum head;
  for (std::size_t i = n; i >= 1; --i) head += std::pow(cc + static_cast<long double>(i), -th);
  auto [lo, hi] = detail::tail_bounds(n, th, cc);
  return {head.value() + lo, head.value() + hi, n};
}

/// a_inf = 1 / sum_{i>=1} (c+i)^-theta, with the reciprocal sum known to
/// absolute error <= tol.
inline double normalization_limit(double theta, double c, double tol = 1e-12) {
  return static_cast<double>(1.0L / hurwitz_sum_bracket(theta, c, tol).midpoint());
}

/// Reads one probability per line; blank lines and lines starting with '#'
/// are skipped. Errors carry the 1-based line number.
inline ProbabilityVector read_pmf(std::istream& in, std::string descriptor = "file") {
  std::vector<double> probs;
  std::string line;
  std::size_t line_no = 0;
  std::size_t last_data_line = 0;
  auto fail = [&](std::size_t at, const std::string& what) {
    throw invalid_support("line " + std::to_string(at) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text(line);
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ' || text.back() == '\t'))
      text.remove_suffix(1);
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    if (text.empty() || text.front() == '#') continue;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      fail(line_no, "not a decimal number: '" + std::string(text) + "'");
    }
    if (!std::isfinite(value) || value <= 0.0) {
      fail(line_no, "probability must be finite and strictly positive, got " + std::string(text));
    }
    probs.push_back(value);
    last_data_line = line_no;
  }
  if (probs.empty()) fail(line_no, "no probabilities found");
  try {
    return ProbabilityVector::from_probabilities(std::move(probs), std::move(descriptor));
  } catch (const invalid_support& e) {
    fail(last_data_line, e.what());
  }
  throw invalid_support("unreachable");
}

inline ProbabilityVector read_pmf_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_support("cannot open PMF file '" + path + "'");
  return read_pmf(in, "file(" + path + ")");
}

}  // namespace record_collector
