#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "summation.hpp"

namespace record_collector {

enum class Method { naive, dp, maxmin, uniform_closed_form, montecarlo, approx };

inline std::string_view to_string(Method method) {
  switch (method) {
    case Method::naive: return "naive";
    case Method::dp: return "dp";
    case Method::maxmin: return "maxmin";
    case Method::uniform_closed_form: return "uniform";
    case Method::montecarlo: return "montecarlo";
    case Method::approx: return "approx";
  }
  return "unknown";
}

struct ExpectationRow {
  std::size_t k;
  double value;  // E[X_m(k)]
  Method method;
  std::optional<double> std_error;
};

/// Expected draw counts E[X_m(k)] for increasing k over one distribution.
struct ExpectationTable {
  std::size_t m = 0;
  std::string distribution;
  std::vector<ExpectationRow> rows;

  void append(ExpectationRow row) {
    if (!rows.empty() && row.k <= rows.back().k) {
      throw domain_error("expectation table rows must have strictly increasing k");
    }
    rows.push_back(row);
  }

  const ExpectationRow& back() const { return rows.back(); }
};

/// Work caps for the exact algorithms. Exceeding a cap raises resource_limit.
struct ExactLimits {
  double naive_extensions = 1e8;  // ordered-prefix extensions visited
  double dp_states = 1e7;         // subsets of size < k
  std::size_t maxmin_support = 25;
};

namespace detail {

inline void check_target(const ProbabilityVector& p, std::size_t k) {
  if (k == 0) throw domain_error("target k must be >= 1");
  if (k > p.size()) throw infeasible_target(k, p.size());
}

/// m (m-1) ... (m-d+1) summed over d = 1..depth; the node count of the
/// ordered distinct-index prefix tree.
inline double naive_work(std::size_t m, std::size_t depth) {
  double total = 0.0;
  double level = 1.0;
  for (std::size_t d = 1; d <= depth; ++d) {
    level *= static_cast<double>(m - d + 1);
    total += level;
  }
  return total;
}

inline double dp_state_count(std::size_t m, std::size_t k) {
  double total = 0.0;
  double binom = 1.0;  // C(m, j)
  for (std::size_t j = 0; j < k; ++j) {
    total += binom;
    binom = binom * static_cast<double>(m - j) / static_cast<double>(j + 1);
  }
  return total;
}

// Depth-first walk over ordered prefixes (i_1, ..., i_d) of pairwise distinct
// indices. At depth d the prefix contributes
//   p_{i_1} ... p_{i_d} / (p(i_1) p(i_1,i_2) ... p(i_1,...,i_d))
// to E[X_{d+1}].
class PrefixWalker {
 public:
  PrefixWalker(std::span<const long double> probs, std::size_t max_depth,
               std::vector<compensated_sum>& acc)
      : probs_(probs), max_depth_(max_depth), used_(probs.size(), 0), acc_(acc) {}

  void descend(std::size_t depth, long double num, long double den, long double escape) {
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (used_[i]) continue;
      visit(i, depth, num, den, escape);
    }
  }

  void visit(std::size_t i, std::size_t depth, long double num, long double den,
             long double escape) {
    const long double q = escape - probs_[i];
    const long double n = num * probs_[i];
    const long double d = den * q;
    acc_[depth + 1] += n / d;
    if (depth + 1 < max_depth_) {
      used_[i] = 1;
      descend(depth + 1, n, d, q);
      used_[i] = 0;
    }
  }

 private:
  std::span<const long double> probs_;
  std::size_t max_depth_;
  std::vector<unsigned char> used_;
  std::vector<compensated_sum>& acc_;
};

/// E[X_1], ..., E[X_k] from the ordered-tuple formula (index 0 holds E[X_1]=1).
inline std::vector<long double> naive_increments(const ProbabilityVector& p, std::size_t k,
                                                 const ExactLimits& limits) {
  check_target(p, k);
  const std::size_t m = p.size();
  const std::size_t depth = k - 1;
  const double work = naive_work(m, depth);
  if (work > limits.naive_extensions) {
    throw resource_limit("naive tuple-extension cap", work, limits.naive_extensions);
  }
  std::vector<long double> increments(k, 0.0L);
  increments[0] = 1.0L;
  if (depth == 0) return increments;

  // One accumulator set per first index, merged in index order, so the result
  // does not depend on how first indices are spread over workers.
  std::vector<std::vector<compensated_sum>> per_first(m, std::vector<compensated_sum>(k));
  const auto probs = p.extended();
  const unsigned workers = worker_count();
  parallel_blocks(m, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t first = begin; first < end; ++first) {
      PrefixWalker walker(probs, depth, per_first[first]);
      walker.visit(first, 0, 1.0L, 1.0L, 1.0L);
    }
  });
  for (std::size_t d = 1; d < k; ++d) {
    compensated_sum total;
    for (std::size_t first = 0; first < m; ++first) total += per_first[first][d];
    increments[d] = total.value();
  }
  return increments;
}

}  // namespace detail

/// Expected number of distinct values in n draws: m - sum_i (1-p_i)^n.
/// Real n is accepted.
inline double expected_distinct_records(const ProbabilityVector& p, double n) {
  if (!(n >= 0.0)) throw domain_error("number of draws n must be >= 0");
  if (n == 0.0) return 0.0;
  // Sum of 1 - (1-p_i)^n, written to avoid cancellation for small p_i.
  compensated_sum total;
  for (double pi : p.probs()) {
    total += -std::expm1(static_cast<long double>(n) * std::log1p(-static_cast<long double>(pi)));
  }
  return static_cast<double>(total.value());
}

/// Uniform closed form 1 + m/(m-1) + ... + m/(m-k+1).
inline double expected_draws_uniform(std::size_t m, std::size_t k) {
  if (m == 0) throw invalid_support("support size m must be >= 1");
  if (k == 0) throw domain_error("target k must be >= 1");
  if (k > m) throw infeasible_target(k, m);
  compensated_sum total;
  for (std::size_t i = 0; i < k; ++i) {
    total += static_cast<long double>(m) / static_cast<long double>(m - i);
  }
  return static_cast<double>(total.value());
}

/// Full-collection expectation via the maximum-minimums identity:
/// sum over nonempty T of (-1)^(|T|+1) / sum_{i in T} p_i.
inline double expected_completion_maxmin(const ProbabilityVector& p,
                                         const ExactLimits& limits = {}) {
  const std::size_t m = p.size();
  if (m > limits.maxmin_support) {
    throw resource_limit("maxmin support-size cap (2^m - 1 subsets)", static_cast<double>(m),
                         static_cast<double>(limits.maxmin_support));
  }
  const auto probs = p.extended();
  // The membership of the first `split` elements selects a block; blocks are
  // summed independently and merged in block order.
  const std::size_t split = std::min<std::size_t>(m, 6);
  const std::size_t blocks = std::size_t{1} << split;
  std::vector<compensated_sum> acc(blocks);

  auto walk = [&](auto&& self, compensated_sum& out, std::size_t idx, long double sum,
                  std::size_t size) -> void {
    if (idx == m) {
      if (size > 0) out += (size % 2 == 1 ? 1.0L : -1.0L) / sum;
      return;
    }
    self(self, out, idx + 1, sum, size);
    self(self, out, idx + 1, sum + probs[idx], size + 1);
  };

  parallel_blocks(blocks, worker_count(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      long double sum = 0.0L;
      std::size_t size = 0;
      for (std::size_t i = 0; i < split; ++i) {
        if (b >> i & 1U) {
          sum += probs[i];
          ++size;
        }
      }
      walk(walk, acc[b], split, sum, size);
    }
  });
  compensated_sum total;
  for (const auto& a : acc) total += a;
  return static_cast<double>(total.value());
}

/// E[X_k] = sum over ordered (k-1)-tuples of distinct indices of
/// p_{i_1}...p_{i_{k-1}} / (p(i_1) p(i_1,i_2) ... p(i_1,...,i_{k-1})).
inline double expected_increment_naive(const ProbabilityVector& p, std::size_t k,
                                       const ExactLimits& limits = {}) {
  if (k < 2) throw domain_error("increment index k must be >= 2");
  return static_cast<double>(detail::naive_increments(p, k, limits)[k - 1]);
}

/// Rows s = 1..k of E[X_m(s)] = 1 + E[X_2] + ... + E[X_s], from one
/// depth-first pass over distinct-index prefixes.
inline ExpectationTable expected_draws_naive(const ProbabilityVector& p, std::size_t k,
                                             const ExactLimits& limits = {}) {
  const auto increments = detail::naive_increments(p, k, limits);
  ExpectationTable table{p.size(), p.descriptor(), {}};
  compensated_sum running;
  for (std::size_t s = 1; s <= k; ++s) {
    running += increments[s - 1];
    table.append({s, static_cast<double>(running.value()), Method::naive, std::nullopt});
  }
  return table;
}

namespace detail {

/// Binomial coefficients C(n, r) for n <= max_n, r <= max_r.
class BinomialTable {
 public:
  BinomialTable(std::size_t max_n, std::size_t max_r)
      : cols_(max_r + 1), values_((max_n + 1) * (max_r + 1), 0) {
    for (std::size_t n = 0; n <= max_n; ++n) {
      at(n, 0) = 1;
      for (std::size_t r = 1; r <= std::min(n, max_r); ++r) {
        at(n, r) = at(n - 1, r - 1) + (r <= n - 1 ? at(n - 1, r) : 0);
      }
    }
  }

  std::uint64_t operator()(std::size_t n, std::size_t r) const {
    return r > n ? 0 : values_[n * cols_ + r];
  }

 private:
  std::uint64_t& at(std::size_t n, std::size_t r) { return values_[n * cols_ + r]; }

  std::size_t cols_;
  std::vector<std::uint64_t> values_;
};

// Colex unranking: the combination of size j with combinatorial-number-system
// rank `rank`, ascending.
inline void unrank_combination(std::uint64_t rank, std::size_t j, std::size_t m,
                               const BinomialTable& binom, std::vector<std::size_t>& out) {
  out.resize(j);
  std::size_t upper = m;
  for (std::size_t t = j; t >= 1; --t) {
    std::size_t c = t - 1;
    while (c + 1 < upper && binom(c + 1, t) <= rank) ++c;
    out[t - 1] = c;
    rank -= binom(c, t);
    upper = c;
  }
}

inline void next_combination(std::vector<std::size_t>& comb) {
  const std::size_t j = comb.size();
  for (std::size_t t = 0; t < j; ++t) {
    if (t + 1 == j || comb[t] + 1 < comb[t + 1]) {
      ++comb[t];
      for (std::size_t u = 0; u < t; ++u) comb[u] = u;
      return;
    }
  }
}

}  // namespace detail

/// Exact E[X_m(s)], s = 1..k, from the absorbing chain on observed sets:
///   f(S) = 1/q(S) + sum_{j not in S} (p_j / q(S)) f(S + {j}),  q(S) = 1 - sum_{i in S} p_i,
/// with f(S) = 0 once |S| reaches the target. Layers are solved from |S| = k-1
/// down to the empty set, carrying one value per remaining target.
inline ExpectationTable expected_draws_dp(const ProbabilityVector& p, std::size_t k,
                                          const ExactLimits& limits = {}) {
  detail::check_target(p, k);
  const std::size_t m = p.size();
  const double states = detail::dp_state_count(m, k);
  if (states > limits.dp_states) {
    throw resource_limit("dp state cap (subsets of size < k)", states, limits.dp_states);
  }
  const auto probs = p.extended();
  const detail::BinomialTable binom(m, k);
  const unsigned workers = worker_count();

  // next_layer holds, for every subset of size j+1, the values f_s for
  // s = j+2..k (k-j-1 values per subset).
  std::vector<double> next_layer;
  for (std::size_t j = k; j-- > 0;) {
    const std::size_t layer_size = binom(m, j);
    const std::size_t width = k - j;          // targets s = j+1..k
    const std::size_t next_width = width - 1;  // targets s = j+2..k
    std::vector<double> layer(layer_size * width);

    parallel_blocks(layer_size, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
      std::vector<std::size_t> comb;
      detail::unrank_combination(begin, j, m, binom, comb);
      std::vector<std::uint64_t> prefix(j + 1), suffix(j + 1);
      std::vector<long double> sums(next_width);
      for (std::size_t r = begin; r < end; ++r) {
        long double q = 1.0L;
        for (std::size_t c : comb) q -= probs[c];

        // rank(S + {x}) with x inserted at position pos:
        //   sum_{t<pos} C(c_t, t+1) + C(x, pos+1) + sum_{t>=pos} C(c_t, t+2)
        prefix[0] = 0;
        for (std::size_t t = 0; t < j; ++t) prefix[t + 1] = prefix[t] + binom(comb[t], t + 1);
        suffix[j] = 0;
        for (std::size_t t = j; t-- > 0;) suffix[t] = suffix[t + 1] + binom(comb[t], t + 2);

        std::fill(sums.begin(), sums.end(), 0.0L);
        if (next_width > 0) {
          std::size_t pos = 0;
          for (std::size_t x = 0; x < m; ++x) {
            if (pos < j && comb[pos] == x) {
              ++pos;
              continue;
            }
            const std::uint64_t child = prefix[pos] + binom(x, pos + 1) + suffix[pos];
            const double* f = &next_layer[child * next_width];
            for (std::size_t s = 0; s < next_width; ++s) sums[s] += probs[x] * f[s];
          }
        }
        double* out = &layer[r * width];
        out[0] = static_cast<double>(1.0L / q);  // target s = j+1: next draw must be new
        for (std::size_t s = 0; s < next_width; ++s) {
          out[s + 1] = static_cast<double>((1.0L + sums[s]) / q);
        }
        if (r + 1 < end) detail::next_combination(comb);
      }
    });
    next_layer = std::move(layer);
  }

  ExpectationTable table{m, p.descriptor(), {}};
  for (std::size_t s = 1; s <= k; ++s) {
    table.append({s, next_layer[s - 1], Method::dp, std::nullopt});
  }
  return table;
}

}  // namespace record_collector
