#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "distribution.hpp"
#include "errors.hpp"
#include "montecarlo.hpp"

namespace record_collector {

/// Gamma function for x > 0, Lanczos approximation (g = 7, 9 terms).
/// Relative error is around 1e-15 on (0, 2]; arguments below 1 are shifted
/// up with Gamma(x) = Gamma(x+1)/x.
inline double gamma_fn(double x) {
  if (!(x > 0.0)) throw domain_error("gamma_fn requires x > 0, got " + std::to_string(x));
  static constexpr double g = 7.0;
  static constexpr std::array<long double, 9> coeffs = {
      0.99999999999980993L,  676.5203681218851L,     -1259.1392167224028L,
      771.32342877765313L,   -176.61502916214059L,   12.507343278686905L,
      -0.13857109526572012L, 9.9843695780195716e-6L, 1.5056327351493116e-7L};
  const bool shifted = x < 1.0;
  // Gamma(z + 1) for z = x - 1, or z = x when shifted.
  const long double z = shifted ? static_cast<long double>(x) : static_cast<long double>(x) - 1.0L;
  long double series = coeffs[0];
  for (std::size_t i = 1; i < coeffs.size(); ++i) series += coeffs[i] / (z + static_cast<long double>(i));
  const long double t = z + g + 0.5L;
  const long double value = std::sqrt(2.0L * std::numbers::pi_v<long double>) *
                            std::pow(t, z + 0.5L) * std::exp(-t) * series;
  return static_cast<double>(shifted ? value / static_cast<long double>(x) : value);
}

/// Coefficients of the Heaps-type growth law E[R_m(n)] ~ alpha n^beta for
/// a Mandelbrot source with exponent theta and shift c.
struct HeapsApprox {
  double theta = 0.0;
  double c = 0.0;
  double beta = 0.0;   // 1/theta
  double a_inf = 0.0;  // lim a_m
  double alpha = 0.0;  // a_inf^beta Gamma(1 - beta); plays the role of Heaps' K
  std::optional<std::size_t> m;
  std::optional<double> tau;  // validity threshold for the given m
};

inline HeapsApprox alpha_coefficient(double theta, double c, double tol = 1e-12) {
  if (!(theta > 1.0)) {
    throw divergent_series("Heaps coefficients need theta > 1 (Gamma(1-1/theta) has a pole at 1)");
  }
  if (theta > 2.0) throw domain_error("theta must lie in (1, 2], got " + std::to_string(theta));
  if (!(c >= 0.0)) throw domain_error("shift c must be >= 0");
  HeapsApprox h;
  h.theta = theta;
  h.c = c;
  h.beta = 1.0 / theta;
  h.a_inf = normalization_limit(theta, c, tol);
  h.alpha = std::pow(h.a_inf, h.beta) * gamma_fn(1.0 - h.beta);
  return h;
}

/// alpha n^beta. Meaningful only for n << m^(theta-1).
inline double approx_expected_records(double n, const HeapsApprox& h) {
  if (!(n > 0.0)) throw domain_error("n must be > 0");
  return h.alpha * std::pow(n, h.beta);
}

/// (k/alpha)^theta, the inverse of approx_expected_records.
inline double approx_expected_draws(double k, const HeapsApprox& h) {
  if (!(k > 0.0)) throw domain_error("k must be > 0");
  return std::pow(k / h.alpha, h.theta);
}

/// k at which (k/alpha)^theta reaches m^(theta-1): alpha m^((theta-1)/theta).
inline double validity_threshold(std::size_t m, const HeapsApprox& h) {
  if (m < 2) throw domain_error("validity threshold needs m >= 2");
  if (!(h.theta > 1.0)) throw divergent_series("validity threshold needs theta > 1");
  return h.alpha * std::pow(static_cast<double>(m), (h.theta - 1.0) / h.theta);
}

inline HeapsApprox with_validity_threshold(HeapsApprox h, std::size_t m) {
  h.m = m;
  h.tau = validity_threshold(m, h);
  return h;
}

/// Alternative threshold: bisection over integer k on simulated E[X_m(k)]
/// against m^(theta-1), then linear interpolation between the bracketing k.
/// Every k reuses the same replicate streams, so the simulated means are
/// nondecreasing in k. Returns m when even E[X_m(m)] stays below the target.
inline double simulated_validity_threshold(const ProbabilityVector& p, double theta,
                                           std::uint64_t replicates, std::uint64_t seed,
                                           const SimulationOptions& options = {}) {
  const std::size_t m = p.size();
  if (m < 2) throw domain_error("validity threshold needs m >= 2");
  if (!(theta > 1.0)) throw divergent_series("validity threshold needs theta > 1");
  const double target = std::pow(static_cast<double>(m), theta - 1.0);
  auto mean_at = [&](std::size_t k) {
    return estimate_expected_draws(p, k, replicates, seed, options).mean;
  };
  std::size_t lo = 1;  // E[X_m(1)] = 1 <= target
  std::size_t hi = m;
  double mean_hi = mean_at(hi);
  if (mean_hi < target) return static_cast<double>(m);
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double v = mean_at(mid);
    if (v < target) {
      lo = mid;
    } else {
      hi = mid;
      mean_hi = v;
    }
  }
  const double mean_lo = mean_at(lo);
  if (mean_hi == mean_lo) return static_cast<double>(lo);
  return static_cast<double>(lo) + (target - mean_lo) / (mean_hi - mean_lo);
}

}  // namespace record_collector
