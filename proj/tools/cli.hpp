#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "record_collector/record_collector.hpp"

namespace record_collector::cli {

using ordered_json = nlohmann::ordered_json;

/// Bad flags or flag combinations; exit code 2.
class usage_error : public error {
 public:
  using error::error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Inclusive integer range written `lo:hi`, or a single value.
struct Range {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  bool single = true;
};

inline Range parse_range(std::string_view text) {
  auto parse_int = [&](std::string_view part) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      throw usage_error("expected a nonnegative integer or lo:hi range, got '" +
                        std::string(text) + "'");
    }
    return v;
  };
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    const auto v = parse_int(text);
    return {v, v, true};
  }
  Range r{parse_int(text.substr(0, colon)), parse_int(text.substr(colon + 1)), false};
  if (r.lo > r.hi) throw usage_error("range '" + std::string(text) + "' has lo > hi");
  return r;
}

enum class Command { exact, table, curve, simulate };

struct RunConfig {
  Command command = Command::exact;
  std::string dist = "mandelbrot";  // uniform | mandelbrot | file
  std::optional<std::size_t> m;
  double theta = 1.75;
  double c = 0.30;
  std::string pmf_file;
  std::optional<std::string> k;
  std::optional<std::string> n;
  std::string method = "dp";
  std::uint64_t replicates = 10000;
  std::uint64_t seed = 0;
  std::optional<std::string> format;
  std::string output;
  std::string figure;
  std::string tau_method = "analytic";
  bool alias = false;
};

// ---------------------------------------------------------------------------
// Formatting

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Two decimals, rounding halves away from zero.
inline std::string format_fixed2(double v) {
  const double rounded = std::floor(std::fabs(v) * 100.0 + 0.5) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", std::copysign(rounded, v));
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

inline void write_json(std::ostream& out, const ordered_json& doc) { out << doc.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Distribution selection

inline ProbabilityVector make_distribution(const RunConfig& cfg) {
  if (cfg.dist == "file") {
    if (cfg.pmf_file.empty()) throw usage_error("--dist file requires --pmf-file");
    auto p = read_pmf_file(cfg.pmf_file);
    if (cfg.m && *cfg.m != p.size()) {
      throw usage_error("--m " + std::to_string(*cfg.m) + " disagrees with the " +
                        std::to_string(p.size()) + " entries of " + cfg.pmf_file);
    }
    return p;
  }
  if (!cfg.m) throw usage_error("--m is required for --dist " + cfg.dist);
  if (cfg.dist == "uniform") return uniform_pmf(*cfg.m);
  if (cfg.dist == "mandelbrot") return mandelbrot_pmf(MandelbrotParams(*cfg.m, cfg.theta, cfg.c));
  throw usage_error("unknown --dist '" + cfg.dist + "' (expected uniform, mandelbrot or file)");
}

inline std::string output_format(const RunConfig& cfg, std::string_view fallback) {
  const std::string f = cfg.format.value_or(std::string(fallback));
  if (f != "csv" && f != "json" && !(f == "text" && cfg.command == Command::table)) {
    throw usage_error("unsupported --format '" + f + "'");
  }
  return f;
}

// ---------------------------------------------------------------------------
// exact

inline ExpectationTable compute_exact(const RunConfig& cfg) {
  const auto p = make_distribution(cfg);
  const std::size_t m = p.size();
  Range rows = cfg.k ? parse_range(*cfg.k) : Range{m, m, true};
  if (rows.single) rows.lo = 1;  // --k K lists every k = 1..K
  if (rows.lo == 0) throw usage_error("k must be >= 1");

  ExpectationTable full;
  if (cfg.method == "naive") {
    full = expected_draws_naive(p, rows.hi);
  } else if (cfg.method == "dp") {
    full = expected_draws_dp(p, rows.hi);
  } else if (cfg.method == "maxmin") {
    if (rows.hi != m) {
      throw usage_error("--method maxmin only computes full collection (k = m = " +
                        std::to_string(m) + ")");
    }
    full = {m, p.descriptor(), {}};
    full.append({m, expected_completion_maxmin(p), Method::maxmin, std::nullopt});
    rows.lo = m;
  } else if (cfg.method == "uniform") {
    if (cfg.dist != "uniform") throw usage_error("--method uniform requires --dist uniform");
    if (rows.hi > m) throw infeasible_target(rows.hi, m);
    full = {m, p.descriptor(), {}};
    for (std::size_t s = 1; s <= rows.hi; ++s) {
      full.append({s, expected_draws_uniform(m, s), Method::uniform_closed_form, std::nullopt});
    }
  } else {
    throw usage_error("unknown --method '" + cfg.method + "' (expected naive, dp, maxmin, uniform)");
  }
  ExpectationTable out{full.m, full.distribution, {}};
  for (const auto& row : full.rows) {
    if (row.k >= rows.lo) out.append(row);
  }
  return out;
}

inline void cmd_exact(const RunConfig& cfg, std::ostream& out) {
  const auto table = compute_exact(cfg);
  if (output_format(cfg, "csv") == "json") {
    ordered_json doc;
    doc["command"] = "exact";
    doc["m"] = table.m;
    doc["distribution"] = table.distribution;
    doc["method"] = cfg.method;
    doc["rows"] = ordered_json::array();
    for (const auto& r : table.rows) {
      doc["rows"].push_back({{"k", r.k}, {"value", r.value}, {"method", to_string(r.method)}});
    }
    write_json(out, doc);
    return;
  }
  CsvWriter csv(out, {"k", "value", "method"});
  for (const auto& r : table.rows) {
    csv.row({std::to_string(r.k), format_number(r.value), std::string(to_string(r.method))});
  }
}

// ---------------------------------------------------------------------------
// table

inline constexpr std::size_t kTableSupports[] = {5, 8, 10};
inline constexpr std::size_t kTableMinK = 2;
inline constexpr std::size_t kTableMaxK = 8;

struct TableCell {
  std::size_t k;
  std::size_t m;
  std::optional<double> value;             // E[X_m(k)]; empty when k > m
  std::optional<double> records_at_value;  // E[R_m(E[X_m(k)])]

  std::string text() const {
    if (!value) return "-";
    return format_fixed2(*value) + " (" + format_fixed2(*records_at_value) + ")";
  }
};

inline std::vector<TableCell> compute_table(const RunConfig& cfg) {
  if (cfg.method != "dp" && cfg.method != "naive") {
    throw usage_error("table supports --method dp or naive");
  }
  std::vector<TableCell> cells;
  for (std::size_t m : kTableSupports) {
    const auto p = mandelbrot_pmf(MandelbrotParams(m, cfg.theta, cfg.c));
    const std::size_t kmax = std::min(m, kTableMaxK);
    const auto exact =
        cfg.method == "dp" ? expected_draws_dp(p, kmax) : expected_draws_naive(p, kmax);
    for (std::size_t k = kTableMinK; k <= kTableMaxK; ++k) {
      TableCell cell{k, m, std::nullopt, std::nullopt};
      if (k <= m) {
        const double v = exact.rows[k - 1].value;
        cell.value = v;
        cell.records_at_value = expected_distinct_records(p, v);
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

inline void cmd_table(const RunConfig& cfg, std::ostream& out) {
  const std::string format = output_format(cfg, "text");
  const auto cells = compute_table(cfg);
  if (format == "json") {
    ordered_json doc;
    doc["command"] = "table";
    doc["theta"] = cfg.theta;
    doc["c"] = cfg.c;
    doc["method"] = cfg.method;
    doc["cells"] = ordered_json::array();
    for (const auto& cell : cells) {
      ordered_json j{{"k", cell.k}, {"m", cell.m}};
      j["value"] = cell.value ? ordered_json(*cell.value) : ordered_json(nullptr);
      j["records_at_value"] =
          cell.records_at_value ? ordered_json(*cell.records_at_value) : ordered_json(nullptr);
      j["cell"] = cell.text();
      doc["cells"].push_back(std::move(j));
    }
    write_json(out, doc);
    return;
  }
  if (format == "csv") {
    CsvWriter csv(out, {"k", "m", "value", "records_at_value", "cell"});
    for (const auto& cell : cells) {
      csv.row({std::to_string(cell.k), std::to_string(cell.m),
               cell.value ? format_number(*cell.value) : "",
               cell.records_at_value ? format_number(*cell.records_at_value) : "", cell.text()});
    }
    return;
  }
  // Paper-style grid: one row per k, one column per support size.
  out << std::left << std::setw(6) << "";
  for (std::size_t m : kTableSupports) out << std::setw(15) << ("m=" + std::to_string(m));
  out << '\n';
  for (std::size_t k = kTableMinK; k <= kTableMaxK; ++k) {
    out << std::setw(6) << ("k=" + std::to_string(k));
    for (const auto& cell : cells) {
      if (cell.k == k) out << std::setw(15) << cell.text();
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// curve

struct CurveRow {
  std::size_t k;
  SimulationEstimate sim;
  double records_at_mean = 0.0;  // inverse figure
  double approx_value = 0.0;     // approx figure
};

struct CurveResult {
  std::string figure;
  std::size_t m = 0;
  std::string distribution;
  std::optional<HeapsApprox> heaps;
  std::vector<CurveRow> rows;
};

inline CurveResult compute_curve(const RunConfig& cfg) {
  if (cfg.figure != "inverse" && cfg.figure != "approx") {
    throw usage_error("--figure must be inverse or approx");
  }
  if (!cfg.k) throw usage_error("curve requires --k lo:hi");
  const Range ks = parse_range(*cfg.k);
  const auto p = make_distribution(cfg);
  if (ks.lo == 0 || ks.hi > p.size()) {
    throw usage_error("--k range must lie within 1.." + std::to_string(p.size()));
  }
  const SimulationOptions options{cfg.alias ? SamplingMethod::alias : SamplingMethod::inverse_cdf};
  CurveResult result{cfg.figure, p.size(), p.descriptor(), std::nullopt, {}};
  if (cfg.figure == "approx") {
    if (cfg.dist != "mandelbrot") throw usage_error("--figure approx requires --dist mandelbrot");
    auto h = alpha_coefficient(cfg.theta, cfg.c);
    if (cfg.tau_method == "analytic") {
      h = with_validity_threshold(h, p.size());
    } else if (cfg.tau_method == "simulated") {
      h.m = p.size();
      h.tau = simulated_validity_threshold(p, cfg.theta, cfg.replicates, cfg.seed, options);
    } else {
      throw usage_error("--tau-method must be analytic or simulated");
    }
    result.heaps = h;
  }
  const auto sims =
      estimate_expected_draws_range(p, ks.lo, ks.hi, cfg.replicates, cfg.seed, options);
  for (const auto& sim : sims) {
    CurveRow row{sim.target, sim};
    if (result.heaps) {
      row.approx_value = approx_expected_draws(static_cast<double>(sim.target), *result.heaps);
    } else {
      row.records_at_mean = expected_distinct_records(p, sim.mean);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

inline void cmd_curve(const RunConfig& cfg, std::ostream& out) {
  const std::string format = output_format(cfg, "csv");
  const auto curve = compute_curve(cfg);
  const bool approx = curve.heaps.has_value();
  if (format == "json") {
    ordered_json doc;
    doc["command"] = "curve";
    doc["figure"] = curve.figure;
    doc["m"] = curve.m;
    doc["distribution"] = curve.distribution;
    doc["replicates"] = cfg.replicates;
    doc["seed"] = cfg.seed;
    if (approx) {
      const auto& h = *curve.heaps;
      doc["heaps"] = {{"theta", h.theta}, {"c", h.c},         {"beta", h.beta},
                      {"a_inf", h.a_inf}, {"alpha", h.alpha}, {"tau", *h.tau}};
      doc["validity"] = {
          {"draws_region", "k << tau"},
          {"records_region_n_max", std::pow(static_cast<double>(curve.m), h.theta - 1.0)},
          {"tau_method", cfg.tau_method}};
    }
    doc["rows"] = ordered_json::array();
    for (const auto& r : curve.rows) {
      ordered_json j{{"k", r.k}, {"sim_mean", r.sim.mean}, {"sim_stderr", r.sim.std_error}};
      if (approx) {
        j["approx_value"] = r.approx_value;
        j["tau"] = *curve.heaps->tau;
        j["within_validity"] = static_cast<double>(r.k) < *curve.heaps->tau;
      } else {
        j["records_at_mean"] = r.records_at_mean;
      }
      doc["rows"].push_back(std::move(j));
    }
    write_json(out, doc);
    return;
  }
  if (approx) {
    CsvWriter csv(out, {"k", "sim_mean", "sim_stderr", "approx_value", "tau"});
    const std::string tau = format_number(*curve.heaps->tau);
    for (const auto& r : curve.rows) {
      csv.row({std::to_string(r.k), format_number(r.sim.mean), format_number(r.sim.std_error),
               format_number(r.approx_value), tau});
    }
  } else {
    CsvWriter csv(out, {"k", "sim_mean", "sim_stderr", "records_at_mean"});
    for (const auto& r : curve.rows) {
      csv.row({std::to_string(r.k), format_number(r.sim.mean), format_number(r.sim.std_error),
               format_number(r.records_at_mean)});
    }
  }
}

// ---------------------------------------------------------------------------
// simulate

inline SimulationEstimate compute_simulation(const RunConfig& cfg) {
  if (cfg.k.has_value() == cfg.n.has_value()) {
    throw usage_error("simulate needs exactly one of --k or --n");
  }
  const auto p = make_distribution(cfg);
  const SimulationOptions options{cfg.alias ? SamplingMethod::alias : SamplingMethod::inverse_cdf};
  if (cfg.k) {
    const Range k = parse_range(*cfg.k);
    if (!k.single) throw usage_error("simulate takes a single --k; use curve for ranges");
    return estimate_expected_draws(p, k.lo, cfg.replicates, cfg.seed, options);
  }
  const Range n = parse_range(*cfg.n);
  if (!n.single) throw usage_error("simulate takes a single --n");
  return estimate_expected_records(p, n.lo, cfg.replicates, cfg.seed, options);
}

inline void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const std::string format = output_format(cfg, "csv");
  const auto est = compute_simulation(cfg);
  const char* target = est.quantity == SimulatedQuantity::draws_until_k ? "k" : "n";
  if (format == "json") {
    ordered_json doc;
    doc["command"] = "simulate";
    doc["quantity"] =
        est.quantity == SimulatedQuantity::draws_until_k ? "draws_until_k" : "records_in_n";
    doc[target] = est.target;
    doc["m"] = est.m;
    doc["distribution"] = est.distribution;
    doc["mean"] = est.mean;
    doc["stderr"] = est.std_error;
    doc["replicates"] = est.replicates;
    doc["seed"] = est.seed;
    write_json(out, doc);
    return;
  }
  CsvWriter csv(out, {target, "mean", "stderr", "replicates", "seed"});
  csv.row({std::to_string(est.target), format_number(est.mean), format_number(est.std_error),
           std::to_string(est.replicates), std::to_string(est.seed)});
}

// ---------------------------------------------------------------------------
// Entry point

inline void dispatch(const RunConfig& cfg, std::ostream& out) {
  switch (cfg.command) {
    case Command::exact: cmd_exact(cfg, out); break;
    case Command::table: cmd_table(cfg, out); break;
    case Command::curve: cmd_curve(cfg, out); break;
    case Command::simulate: cmd_simulate(cfg, out); break;
  }
}

/// Parses argv, runs the selected subcommand and returns the process exit
/// code. Results go to `out` (or --output), diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Expected draws to observe k distinct values from a finite distribution",
               "record_collector"};
  app.require_subcommand(1);

  auto add_distribution = [&](CLI::App* sub) {
    sub->add_option("--dist", cfg.dist, "uniform, mandelbrot or file")->capture_default_str();
    sub->add_option("--m", cfg.m, "support size");
    sub->add_option("--theta", cfg.theta, "Mandelbrot exponent")->capture_default_str();
    sub->add_option("--c", cfg.c, "Mandelbrot shift")->capture_default_str();
    sub->add_option("--pmf-file", cfg.pmf_file, "one probability per line ('#' comments)");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--format", cfg.format, "csv or json (table also: text)");
    sub->add_option("--output", cfg.output, "output path (default: standard output)");
  };
  auto add_simulation = [&](CLI::App* sub) {
    sub->add_option("--replicates", cfg.replicates)->capture_default_str();
    sub->add_option("--seed", cfg.seed)->capture_default_str();
    sub->add_flag("--alias", cfg.alias, "alias-method sampling instead of inverse CDF");
  };

  auto* exact = app.add_subcommand("exact", "exact E[X_m(k)] rows");
  add_distribution(exact);
  add_output(exact);
  exact->add_option("--k", cfg.k, "K (rows 1..K) or lo:hi");
  exact->add_option("--method", cfg.method, "naive, dp, maxmin or uniform")->capture_default_str();
  exact->callback([&] { cfg.command = Command::exact; });

  auto* table = app.add_subcommand("table", "grid over m in {5,8,10}, k in 2..8");
  table->add_option("--theta", cfg.theta)->capture_default_str();
  table->add_option("--c", cfg.c)->capture_default_str();
  table->add_option("--method", cfg.method, "dp or naive")->capture_default_str();
  add_output(table);
  table->callback([&] { cfg.command = Command::table; });

  auto* curve = app.add_subcommand("curve", "simulated E[X_m(k)] series");
  add_distribution(curve);
  add_output(curve);
  add_simulation(curve);
  curve->add_option("--figure", cfg.figure, "inverse or approx")->required();
  curve->add_option("--k", cfg.k, "lo:hi")->required();
  curve->add_option("--tau-method", cfg.tau_method, "analytic or simulated")->capture_default_str();
  curve->callback([&] { cfg.command = Command::curve; });

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo E[X_m(k)] or E[R_m(n)]");
  add_distribution(simulate);
  add_output(simulate);
  add_simulation(simulate);
  simulate->add_option("--k", cfg.k);
  simulate->add_option("--n", cfg.n);
  simulate->callback([&] { cfg.command = Command::simulate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::ostringstream buffer;
    dispatch(cfg, buffer);
    if (cfg.output.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(cfg.output, std::ios::binary);
      if (!file) throw usage_error("cannot open --output '" + cfg.output + "'");
      file << buffer.str();
    }
  } catch (const usage_error& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace record_collector::cli
