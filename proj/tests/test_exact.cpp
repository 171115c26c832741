#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <random>

#include "oracles.hpp"
#include "record_collector/exact.hpp"

namespace rc = record_collector;

namespace {

rc::ProbabilityVector pmf(std::vector<double> p) {
  return rc::ProbabilityVector::from_probabilities(std::move(p));
}

rc::ProbabilityVector mandelbrot(std::size_t m) {
  return rc::mandelbrot_pmf(rc::MandelbrotParams(m, 1.75, 0.3));
}

}  // namespace

// --- expected_distinct_records ---------------------------------------------

TEST(ExpectedDistinctRecords, ZeroAndOneDraw) {
  std::mt19937_64 rng(1);
  for (std::size_t m : {1u, 2u, 7u, 50u}) {
    const auto p = pmf(oracle::random_pmf(m, rng));
    EXPECT_EQ(rc::expected_distinct_records(p, 0.0), 0.0);
    EXPECT_NEAR(rc::expected_distinct_records(p, 1.0), 1.0, 1e-15);
  }
}

TEST(ExpectedDistinctRecords, TwoFairCoinsEnumerated) {
  EXPECT_NEAR(rc::expected_distinct_records(pmf({0.5, 0.5}), 2.0), 1.5, 1e-15);
  EXPECT_NEAR(oracle::enumerate_expected_records({0.5, 0.5}, 2), 1.5, 1e-15);
}

TEST(ExpectedDistinctRecords, MatchesSequenceEnumeration) {
  std::mt19937_64 rng(2);
  for (std::size_t m : {2u, 3u, 4u}) {
    const auto raw = oracle::random_pmf(m, rng);
    const auto p = pmf(raw);
    for (std::size_t n : {1u, 2u, 3u, 5u, 7u}) {
      EXPECT_NEAR(rc::expected_distinct_records(p, static_cast<double>(n)),
                  oracle::enumerate_expected_records(raw, n), 1e-12);
    }
  }
}

TEST(ExpectedDistinctRecords, MandelbrotTableParenthetical) {
  const auto p = mandelbrot(5);
  EXPECT_NEAR(rc::expected_distinct_records(p, 2.80), oracle::kRecordsM5At280, 1e-13);
  EXPECT_NEAR(rc::expected_distinct_records(p, 2.80), 1.97, 0.005);
  EXPECT_NEAR(rc::expected_distinct_records(mandelbrot(100), 50.0), oracle::kRecordsM100N50, 1e-12);
}

TEST(ExpectedDistinctRecords, NegativeRejected) {
  EXPECT_THROW(rc::expected_distinct_records(pmf({1.0}), -0.5), rc::domain_error);
  EXPECT_THROW(rc::expected_distinct_records(pmf({1.0}), NAN), rc::domain_error);
}

TEST(ExpectedDistinctRecords, NondecreasingBoundedConcave) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng() % 40;
    const auto p = pmf(oracle::random_pmf(m, rng));
    double prev2 = 0.0, prev1 = rc::expected_distinct_records(p, 0.0);
    for (int n = 1; n <= 400; ++n) {
      const double cur = rc::expected_distinct_records(p, n);
      EXPECT_GE(cur, prev1 - 1e-12);
      EXPECT_LE(cur, static_cast<double>(m) + 1e-12);
      if (n >= 2) {
        EXPECT_LE(cur - 2 * prev1 + prev2, 1e-12);
      }
      prev2 = prev1;
      prev1 = cur;
    }
  }
}

// --- uniform closed form ------------------------------------------------------

TEST(ExpectedDrawsUniform, Examples) {
  EXPECT_EQ(rc::expected_draws_uniform(10, 1), 1.0);
  EXPECT_DOUBLE_EQ(rc::expected_draws_uniform(2, 2), 3.0);
  EXPECT_DOUBLE_EQ(rc::expected_draws_uniform(3, 3), 5.5);
  EXPECT_NEAR(rc::expected_draws_uniform(3, 3), oracle::time_stepped_expected_draws({1. / 3, 1. / 3, 1. / 3}, 3),
              1e-12);
}

TEST(ExpectedDrawsUniform, Errors) {
  EXPECT_THROW(rc::expected_draws_uniform(3, 4), rc::infeasible_target);
  EXPECT_THROW(rc::expected_draws_uniform(3, 0), rc::domain_error);
  EXPECT_THROW(rc::expected_draws_uniform(0, 1), rc::invalid_support);
}

// --- max-min identity ---------------------------------------------------------

TEST(ExpectedCompletionMaxmin, Examples) {
  EXPECT_DOUBLE_EQ(rc::expected_completion_maxmin(pmf({1.0})), 1.0);
  EXPECT_NEAR(rc::expected_completion_maxmin(pmf({0.5, 0.5})), 3.0, 1e-15);
  EXPECT_NEAR(rc::expected_completion_maxmin(pmf({2.0 / 3, 1.0 / 3})), 3.5, 1e-15);
}

TEST(ExpectedCompletionMaxmin, MatchesTimeSteppedChain) {
  std::mt19937_64 rng(4);
  for (std::size_t m = 1; m <= 8; ++m) {
    const auto raw = oracle::random_pmf(m, rng);
    EXPECT_LT(oracle::rel_diff(rc::expected_completion_maxmin(pmf(raw)),
                               oracle::time_stepped_expected_draws(raw, m)),
              1e-10);
  }
}

TEST(ExpectedCompletionMaxmin, CapIsEnforcedAndNamed) {
  const auto p = rc::uniform_pmf(26);
  try {
    rc::expected_completion_maxmin(p);
    FAIL() << "expected resource_limit";
  } catch (const rc::resource_limit& e) {
    EXPECT_NE(std::string(e.what()).find("maxmin"), std::string::npos);
    EXPECT_EQ(e.cap(), 25.0);
  }
  rc::ExactLimits small;
  small.maxmin_support = 3;
  EXPECT_THROW(rc::expected_completion_maxmin(rc::uniform_pmf(4), small), rc::resource_limit);
}

TEST(ExpectedCompletionMaxmin, UniformAtCapMatchesClosedForm) {
  EXPECT_LT(oracle::rel_diff(rc::expected_completion_maxmin(rc::uniform_pmf(20)),
                             rc::expected_draws_uniform(20, 20)),
            1e-9);
}

// --- naive ordered-tuple formula ----------------------------------------------

TEST(ExpectedIncrementNaive, UniformReducesToGeometricMean) {
  for (std::size_t m = 2; m <= 9; ++m) {
    EXPECT_NEAR(rc::expected_increment_naive(rc::uniform_pmf(m), 2),
                static_cast<double>(m) / static_cast<double>(m - 1), 1e-14);
  }
}

TEST(ExpectedIncrementNaive, TwoPointHandComputation) {
  EXPECT_NEAR(rc::expected_increment_naive(pmf({2.0 / 3, 1.0 / 3}), 2), 2.5, 1e-15);
}

TEST(ExpectedIncrementNaive, MandelbrotSecondIncrement) {
  const double inc = rc::expected_increment_naive(mandelbrot(5), 2);
  EXPECT_NEAR(1.0 + inc, oracle::kTableM5[1], 1e-13);
  EXPECT_NEAR(1.0 + inc, 2.80, 0.01);
}

TEST(ExpectedIncrementNaive, Errors) {
  EXPECT_THROW(rc::expected_increment_naive(rc::uniform_pmf(3), 1), rc::domain_error);
  EXPECT_THROW(rc::expected_increment_naive(rc::uniform_pmf(3), 4), rc::infeasible_target);
  rc::ExactLimits tight;
  tight.naive_extensions = 100;
  try {
    rc::expected_increment_naive(rc::uniform_pmf(10), 4, tight);
    FAIL() << "expected resource_limit";
  } catch (const rc::resource_limit& e) {
    EXPECT_EQ(e.estimated(), 10.0 + 90.0 + 720.0);
  }
}

TEST(ExpectedDrawsNaive, FirstRowIsOne) {
  const auto table = rc::expected_draws_naive(mandelbrot(7), 1);
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].k, 1u);
  EXPECT_EQ(table.rows[0].value, 1.0);
  EXPECT_EQ(table.rows[0].method, rc::Method::naive);
}

TEST(ExpectedDrawsNaive, MandelbrotColumnsMatchReference) {
  const std::pair<std::size_t, const std::vector<double>*> cases[] = {
      {5, &oracle::kTableM5}, {8, &oracle::kTableM8}, {10, &oracle::kTableM10}};
  for (const auto& [m, expected] : cases) {
    const auto table = rc::expected_draws_naive(mandelbrot(m), expected->size());
    ASSERT_EQ(table.rows.size(), expected->size());
    for (std::size_t i = 0; i < expected->size(); ++i) {
      EXPECT_LT(oracle::rel_diff(table.rows[i].value, (*expected)[i]), 1e-13)
          << "m=" << m << " k=" << i + 1;
    }
  }
  const auto t10 = rc::expected_draws_naive(mandelbrot(10), 8);
  EXPECT_NEAR(t10.back().value, 43.66, 0.005);
}

TEST(ExpectedDrawsNaive, MatchesTimeSteppedChain) {
  std::mt19937_64 rng(5);
  for (std::size_t m = 1; m <= 7; ++m) {
    const auto raw = oracle::random_pmf(m, rng);
    const auto table = rc::expected_draws_naive(pmf(raw), m);
    for (std::size_t k = 1; k <= m; ++k) {
      EXPECT_LT(oracle::rel_diff(table.rows[k - 1].value, oracle::time_stepped_expected_draws(raw, k)),
                1e-10);
    }
  }
}

// --- subset DP ----------------------------------------------------------------

TEST(ExpectedDrawsDp, Examples) {
  EXPECT_NEAR(rc::expected_draws_dp(pmf({2.0 / 3, 1.0 / 3}), 2).back().value, 3.5, 1e-15);
  EXPECT_NEAR(rc::expected_draws_dp(rc::uniform_pmf(3), 3).back().value, 5.5, 1e-15);
  EXPECT_NEAR(rc::expected_draws_dp(mandelbrot(10), 8).back().value, 43.66, 0.005);
}

TEST(ExpectedDrawsDp, MandelbrotColumnsMatchReference) {
  const std::pair<std::size_t, const std::vector<double>*> cases[] = {
      {5, &oracle::kTableM5}, {8, &oracle::kTableM8}, {10, &oracle::kTableM10},
      {12, &oracle::kTableM12}};
  for (const auto& [m, expected] : cases) {
    const auto table = rc::expected_draws_dp(mandelbrot(m), expected->size());
    for (std::size_t i = 0; i < expected->size(); ++i) {
      EXPECT_LT(oracle::rel_diff(table.rows[i].value, (*expected)[i]), 1e-13)
          << "m=" << m << " k=" << i + 1;
    }
  }
}

TEST(ExpectedDrawsDp, LargeSupportSmallTarget) {
  // m = 300 exceeds any bitmask width; k = 3 has 1 + 300 + 44850 states.
  const auto p = rc::uniform_pmf(300);
  const auto table = rc::expected_draws_dp(p, 3);
  for (std::size_t k = 1; k <= 3; ++k) {
    EXPECT_LT(oracle::rel_diff(table.rows[k - 1].value, rc::expected_draws_uniform(300, k)), 1e-14);
  }
}

TEST(ExpectedDrawsDp, StateCapReportsCount) {
  rc::ExactLimits tight;
  tight.dp_states = 50;
  try {
    rc::expected_draws_dp(rc::uniform_pmf(10), 3, tight);
    FAIL() << "expected resource_limit";
  } catch (const rc::resource_limit& e) {
    EXPECT_EQ(e.estimated(), 1.0 + 10.0 + 45.0);
    EXPECT_NE(std::string(e.what()).find("56"), std::string::npos);
  }
  EXPECT_THROW(rc::expected_draws_dp(rc::uniform_pmf(3), 4), rc::infeasible_target);
  EXPECT_THROW(rc::expected_draws_dp(rc::uniform_pmf(3), 0), rc::domain_error);
}

// --- cross-method properties --------------------------------------------------

TEST(ExactProperties, DpAgreesWithNaiveOnRandomPmfs) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + rng() % 8;
    const auto p = pmf(oracle::random_pmf(m, rng));
    const auto naive = rc::expected_draws_naive(p, m);
    const auto dp = rc::expected_draws_dp(p, m);
    for (std::size_t k = 0; k < m; ++k) {
      EXPECT_LT(oracle::rel_diff(dp.rows[k].value, naive.rows[k].value), 1e-10);
    }
  }
}

TEST(ExactProperties, MonotoneAndBoundedBelowByK) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + rng() % 9;
    const auto p = pmf(oracle::random_pmf(m, rng));
    for (const auto& table : {rc::expected_draws_naive(p, m), rc::expected_draws_dp(p, m)}) {
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.k == 1) {
          EXPECT_EQ(row.value, 1.0);
        } else {
          EXPECT_GT(row.value, static_cast<double>(row.k));
          EXPECT_GT(row.value, table.rows[i - 1].value);
        }
      }
    }
  }
}

TEST(ExactProperties, PermutationInvariance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 2 + rng() % 6;
    auto raw = oracle::random_pmf(m, rng);
    const auto base_naive = rc::expected_draws_naive(pmf(raw), m);
    const auto base_dp = rc::expected_draws_dp(pmf(raw), m);
    std::shuffle(raw.begin(), raw.end(), rng);
    const auto perm_naive = rc::expected_draws_naive(pmf(raw), m);
    const auto perm_dp = rc::expected_draws_dp(pmf(raw), m);
    for (std::size_t k = 0; k < m; ++k) {
      EXPECT_LT(oracle::rel_diff(perm_naive.rows[k].value, base_naive.rows[k].value), 1e-12);
      EXPECT_LT(oracle::rel_diff(perm_dp.rows[k].value, base_dp.rows[k].value), 1e-12);
    }
  }
}

TEST(ExactProperties, ResultsIndependentOfWorkerCount) {
  const auto p = mandelbrot(9);
  setenv(rc::kThreadsEnvVar, "1", 1);
  const auto naive1 = rc::expected_draws_naive(p, 9);
  const auto dp1 = rc::expected_draws_dp(p, 9);
  const double mm1 = rc::expected_completion_maxmin(p);
  setenv(rc::kThreadsEnvVar, "5", 1);
  const auto naive5 = rc::expected_draws_naive(p, 9);
  const auto dp5 = rc::expected_draws_dp(p, 9);
  const double mm5 = rc::expected_completion_maxmin(p);
  unsetenv(rc::kThreadsEnvVar);
  for (std::size_t k = 0; k < 9; ++k) {
    EXPECT_EQ(naive1.rows[k].value, naive5.rows[k].value);
    EXPECT_EQ(dp1.rows[k].value, dp5.rows[k].value);
  }
  EXPECT_EQ(mm1, mm5);
}

TEST(ExpectationTable, RejectsNonIncreasingK) {
  rc::ExpectationTable table;
  table.append({1, 1.0, rc::Method::dp, std::nullopt});
  EXPECT_THROW(table.append({1, 2.0, rc::Method::dp, std::nullopt}), rc::domain_error);
}

TEST(WorkerCount, ValidatesEnvironment) {
  setenv(rc::kThreadsEnvVar, "3", 1);
  EXPECT_EQ(rc::worker_count(), 3u);
  setenv(rc::kThreadsEnvVar, "0", 1);
  EXPECT_THROW(rc::worker_count(), rc::domain_error);
  setenv(rc::kThreadsEnvVar, "two", 1);
  EXPECT_THROW(rc::worker_count(), rc::domain_error);
  unsetenv(rc::kThreadsEnvVar);
  EXPECT_GE(rc::worker_count(), 1u);
}
