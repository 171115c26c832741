#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "summation.hpp"

namespace record_collector {

inline constexpr std::uint64_t kMaxDrawsPerPath = 1'000'000'000;

/// Random stream for one replicate. The state is a pure function of
/// (seed, replicate), so replicates can run in any order on any thread.
class ReplicateStream {
 public:
  ReplicateStream(std::uint64_t seed, std::uint64_t replicate) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replicate),
                      static_cast<std::uint32_t>(replicate >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

enum class SamplingMethod { inverse_cdf, alias };

/// Draws zero-based support indices from a ProbabilityVector.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const ProbabilityVector& p,
                           SamplingMethod method = SamplingMethod::inverse_cdf)
      : method_(method) {
    const auto probs = p.probs();
    const std::size_t m = probs.size();
    if (method == SamplingMethod::inverse_cdf) {
      cdf_.resize(m);
      compensated_sum running;
      for (std::size_t i = 0; i < m; ++i) {
        running += probs[i];
        cdf_[i] = static_cast<double>(running.value());
      }
      cdf_.back() = 1.0;
    } else {
      build_alias(probs);
    }
  }

  std::size_t size() const noexcept {
    return method_ == SamplingMethod::inverse_cdf ? cdf_.size() : alias_.size();
  }

  std::size_t operator()(ReplicateStream& rng) const {
    const double u = rng.uniform();
    if (method_ == SamplingMethod::inverse_cdf) {
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }
    const double scaled = u * static_cast<double>(alias_.size());
    const std::size_t column = std::min(static_cast<std::size_t>(scaled), alias_.size() - 1);
    return scaled - static_cast<double>(column) < keep_[column] ? column : alias_[column];
  }

 private:
  // Vose's alias table.
  void build_alias(std::span<const double> probs) {
    const std::size_t m = probs.size();
    keep_.assign(m, 1.0);
    alias_.resize(m);
    std::vector<double> scaled(m);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < m; ++i) {
      scaled[i] = probs[i] * static_cast<double>(m);
      alias_[i] = i;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      keep_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) keep_[i] = 1.0;
    for (std::size_t i : small) keep_[i] = 1.0;
  }

  SamplingMethod method_;
  std::vector<double> cdf_;
  std::vector<double> keep_;
  std::vector<std::size_t> alias_;
};

enum class SimulatedQuantity { draws_until_k, records_in_n };

struct SimulationEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
  SimulatedQuantity quantity = SimulatedQuantity::draws_until_k;
  std::uint64_t target = 0;  // k or n
  std::size_t m = 0;
  std::string distribution;
};

struct SimulationOptions {
  SamplingMethod sampling = SamplingMethod::inverse_cdf;
};

namespace detail {

/// Exact integer moments of integer-valued replicate outcomes. Sums are
/// order-independent, which makes the reduction deterministic under any
/// partitioning of replicates.
struct IntegerMoments {
  unsigned __int128 sum = 0;
  unsigned __int128 sum_sq = 0;
  std::uint64_t count = 0;

  void add(std::uint64_t x) {
    sum += x;
    sum_sq += static_cast<unsigned __int128>(x) * x;
    ++count;
  }

  IntegerMoments& operator+=(const IntegerMoments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
    return *this;
  }

  double mean() const {
    return static_cast<double>(static_cast<long double>(sum) / static_cast<long double>(count));
  }

  /// Standard error of the mean with the n-1 variance divisor; exactly zero
  /// iff every outcome was equal.
  double std_error() const {
    const unsigned __int128 n = count;
    const unsigned __int128 numerator = n * sum_sq - sum * sum;  // n^2 (n-1) var
    if (numerator == 0) return 0.0;
    const long double denom = static_cast<long double>(n) * static_cast<long double>(n) *
                              static_cast<long double>(n - 1);
    return static_cast<double>(std::sqrt(static_cast<long double>(numerator) / denom));
  }
};

inline void check_replicates(std::uint64_t replicates) {
  if (replicates < 2) throw insufficient_replicates(replicates);
}

/// Draws until `k_last` distinct values have appeared; on reaching each
/// k in [k_first, k_last] reports (k, draws so far) to `on_record`.
template <class OnRecord>
void run_path(const DiscreteSampler& sampler, std::size_t k_first, std::size_t k_last,
              ReplicateStream& rng, std::vector<unsigned char>& seen, OnRecord&& on_record) {
  std::fill(seen.begin(), seen.end(), 0);
  std::size_t distinct = 0;
  std::uint64_t draws = 0;
  while (distinct < k_last) {
    if (draws >= kMaxDrawsPerPath) {
      throw runaway_simulation("path exceeded " + std::to_string(kMaxDrawsPerPath) +
                               " draws before observing " + std::to_string(k_last) +
                               " distinct values");
    }
    ++draws;
    const std::size_t i = sampler(rng);
    if (!seen[i]) {
      seen[i] = 1;
      ++distinct;
      if (distinct >= k_first) on_record(distinct, draws);
    }
  }
}

inline void check_target_k(std::size_t m, std::size_t k) {
  if (k == 0) throw domain_error("target k must be >= 1");
  if (k > m) throw infeasible_target(k, m);
}

}  // namespace detail

/// One realization of X_m(k): draws until k distinct values are seen.
inline std::uint64_t draw_until_k_distinct(const DiscreteSampler& sampler, std::size_t k,
                                           ReplicateStream& rng) {
  detail::check_target_k(sampler.size(), k);
  std::vector<unsigned char> seen(sampler.size());
  std::uint64_t result = 0;
  detail::run_path(sampler, k, k, rng, seen, [&](std::size_t, std::uint64_t d) { result = d; });
  return result;
}

inline std::uint64_t draw_until_k_distinct(const ProbabilityVector& p, std::size_t k,
                                           ReplicateStream& rng) {
  return draw_until_k_distinct(DiscreteSampler(p), k, rng);
}

/// Monte-Carlo estimates of E[X_m(k)] for every k in [k_first, k_last], all
/// from the same replicate paths. Each entry equals what
/// estimate_expected_draws would return for that k alone.
inline std::vector<SimulationEstimate> estimate_expected_draws_range(
    const ProbabilityVector& p, std::size_t k_first, std::size_t k_last, std::uint64_t replicates,
    std::uint64_t seed, const SimulationOptions& options = {}) {
  detail::check_target_k(p.size(), k_first);
  detail::check_target_k(p.size(), k_last);
  if (k_first > k_last) throw domain_error("empty k range");
  detail::check_replicates(replicates);
  const DiscreteSampler sampler(p, options.sampling);
  const std::size_t span = k_last - k_first + 1;
  const unsigned workers = worker_count();
  const auto bounds = block_bounds(replicates, workers);
  std::vector<std::vector<detail::IntegerMoments>> partial(
      bounds.size() - 1, std::vector<detail::IntegerMoments>(span));

  parallel_blocks(replicates, workers, [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::vector<unsigned char> seen(p.size());
    auto& moments = partial[block];
    for (std::size_t r = begin; r < end; ++r) {
      ReplicateStream rng(seed, r);
      detail::run_path(sampler, k_first, k_last, rng, seen,
                       [&](std::size_t k, std::uint64_t d) { moments[k - k_first].add(d); });
    }
  });

  std::vector<SimulationEstimate> out(span);
  for (std::size_t i = 0; i < span; ++i) {
    detail::IntegerMoments total;
    for (const auto& part : partial) total += part[i];
    out[i] = {total.mean(), total.std_error(), replicates, seed,
              SimulatedQuantity::draws_until_k, k_first + i, p.size(), p.descriptor()};
  }
  return out;
}

inline SimulationEstimate estimate_expected_draws(const ProbabilityVector& p, std::size_t k,
                                                  std::uint64_t replicates, std::uint64_t seed,
                                                  const SimulationOptions& options = {}) {
  return estimate_expected_draws_range(p, k, k, replicates, seed, options).front();
}

/// Monte-Carlo estimate of E[R_m(n)], the distinct values seen in n draws.
inline SimulationEstimate estimate_expected_records(const ProbabilityVector& p, std::uint64_t n,
                                                    std::uint64_t replicates, std::uint64_t seed,
                                                    const SimulationOptions& options = {}) {
  if (n == 0) throw domain_error("number of draws n must be >= 1");
  if (n > kMaxDrawsPerPath) {
    throw runaway_simulation("n=" + std::to_string(n) + " exceeds the per-path draw ceiling");
  }
  detail::check_replicates(replicates);
  const DiscreteSampler sampler(p, options.sampling);
  const unsigned workers = worker_count();
  const auto bounds = block_bounds(replicates, workers);
  std::vector<detail::IntegerMoments> partial(bounds.size() - 1);

  parallel_blocks(replicates, workers, [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::vector<unsigned char> seen(p.size());
    for (std::size_t r = begin; r < end; ++r) {
      ReplicateStream rng(seed, r);
      std::fill(seen.begin(), seen.end(), 0);
      std::uint64_t distinct = 0;
      for (std::uint64_t d = 0; d < n; ++d) {
        const std::size_t i = sampler(rng);
        if (!seen[i]) {
          seen[i] = 1;
          ++distinct;
        }
      }
      partial[block].add(distinct);
    }
  });
  detail::IntegerMoments total;
  for (const auto& part : partial) total += part;
  return {total.mean(), total.std_error(), replicates, seed, SimulatedQuantity::records_in_n, n,
          p.size(), p.descriptor()};
}

}  // namespace record_collector
