#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace record_collector {

/// Base class of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A probability vector or distribution parameter violates its invariants.
class invalid_support : public error {
 public:
  using error::error;
};

/// Argument outside the domain of a function (negative n, x <= 0, ...).
class domain_error : public error {
 public:
  using error::error;
};

/// Asked for more distinct records than the support holds.
class infeasible_target : public error {
 public:
  infeasible_target(std::uint64_t k, std::uint64_t m)
      : error("infeasible target: k=" + std::to_string(k) +
              " exceeds support size m=" + std::to_string(m)),
        k_(k),
        m_(m) {}

  std::uint64_t k() const noexcept { return k_; }
  std::uint64_t m() const noexcept { return m_; }

 private:
  std::uint64_t k_;
  std::uint64_t m_;
};

/// A computation would exceed a configured work or memory cap.
class resource_limit : public error {
 public:
  resource_limit(std::string cap_name, double estimated, double cap)
      : error("resource limit: " + cap_name + " would need " + fmt_count(estimated) +
              " but the cap is " + fmt_count(cap)),
        cap_name_(std::move(cap_name)),
        estimated_(estimated),
        cap_(cap) {}

  const std::string& cap_name() const noexcept { return cap_name_; }
  double estimated() const noexcept { return estimated_; }
  double cap() const noexcept { return cap_; }

 private:
  static std::string fmt_count(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  std::string cap_name_;
  double estimated_;
  double cap_;
};

/// The series defining a normalization limit does not converge.
class divergent_series : public error {
 public:
  using error::error;
};

class insufficient_replicates : public error {
 public:
  explicit insufficient_replicates(std::uint64_t replicates)
      : error("insufficient replicates: " + std::to_string(replicates) +
              " given, at least 2 are needed for a standard error") {}
};

/// A simulated path exceeded the hard draw ceiling.
class runaway_simulation : public error {
 public:
  using error::error;
};

}  // namespace record_collector
