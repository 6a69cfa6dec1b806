#pragma once

#include "lamegap/experiments.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lamegap {

/// Minimal TOML reader covering the run-config dialect: [tables], comments,
/// strings, numbers, booleans and flat arrays. Parse errors carry line
/// numbers. (No TOML library ships with the toolchain; the dialect is
/// documented in the README.)
struct TomlValue {
  std::variant<bool, double, std::string, std::vector<TomlValue>> data;
  int line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const {
    return std::holds_alternative<std::vector<TomlValue>>(data);
  }
  double number(const std::string& key) const;
  const std::string& string(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::vector<TomlValue>& array(const std::string& key) const;
};

struct TomlDoc {
  // table name ("" for top level) -> key -> value
  std::map<std::string, std::map<std::string, TomlValue>> tables;

  const TomlValue* find(const std::string& table, const std::string& key) const;
  bool has_table(const std::string& table) const {
    return tables.count(table) > 0;
  }
};

TomlDoc parse_toml_text(const std::string& text);
TomlDoc parse_toml_file(const std::string& path);

/// A check on a sweep or convergence quantity: either a window [lo, hi] on a
/// fitted slope, an upper bound, or a lower bound. The registry of check
/// names lives in checks_registry().
struct CheckSpec {
  std::string name;
  double lo = 0.0, hi = 0.0;  // window or single bound in `hi` (or `lo`)
  enum class Kind { Window, UpperBound, LowerBound, Positivity } kind =
      Kind::Window;
};

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double lo = 0.0, hi = 0.0;
  bool pass = false;
};

struct RunConfig {
  GapGeometry geometry;
  ElasticConstants material;
  std::vector<std::pair<double, double>> ladder;
  BoundaryData phi;
  int h_gap = 8;
  double h_far = 0.5;
  std::vector<double> epsilons;  // empty: no sweep
  bool convergence = false;
  double convergence_epsilon = 0.05;
  SolveOptions solver;
  std::string out_dir = "run";
  long seed = 0;
  std::vector<CheckSpec> checks;
  std::string source_path;
  std::string source_text;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Config invariants (floors, ladder monotonicity, ids); throws ConfigError.
void validate_config(const RunConfig& cfg);

/// Resolved plan: meshes to build, solves to run, estimated dof counts.
std::string plan_summary(const RunConfig& cfg);

struct RunOutcome {
  std::vector<CheckResult> checks;
  bool all_passed = true;
  RateTable sweep;           // valid when a sweep ran
  ConvergenceTable convergence;
};

/// Executes the configured experiments, writes the run directory (CSV files,
/// profiles/, summary.json, config copy) and evaluates the checks.
/// `force` permits writing into an existing directory.
RunOutcome run_experiments(const RunConfig& cfg, const std::string& out_dir,
                           int jobs, bool force);

}  // namespace lamegap
