#pragma once

#include "gdgc/verify.hpp"

#include <json.hpp>

#include <filesystem>

namespace gdgc {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Experiment configuration. The schema is a nested key/value document;
// both the dotted-key text format and JSON encode the same structure.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::string output;  // directory; may be overridden by --out or GDGC_OUT
  json cost;           // {"family": ..., params}
  json objective;      // {"family": ..., params}
  json objective_g;    // optional second objective (forward-backward)
  json solver;         // {"kind": ..., "horizon": ..., "x0": [...], params}
  json search;         // restarts, max_iter, tol, box_lo, box_hi
  std::vector<json> verify;  // declared checks

  static ExperimentConfig from_json(const json& doc);
  json to_json() const;
  void validate() const;
};

// Parses either JSON (first non-space character '{') or the dotted key=value
// text format.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run reports.
// ---------------------------------------------------------------------------

struct RunReport {
  json config_echo;
  std::string trace_path;
  json certificates;      // array
  json property_reports;  // array
  bool all_passed = false;
  double wall_seconds = 0.0;  // reported on the console only; never serialized
                              // so that report.json stays byte-reproducible

  json to_json() const;
};

// Executes the configured solver, runs every declared check exactly once and
// writes trace.csv, report.json and config.json into the output directory.
RunReport run_experiment(const ExperimentConfig& config);

struct CatalogEntry {
  std::string name;
  std::string description;
  std::string group;
};

std::vector<CatalogEntry> list_experiments();
ExperimentConfig builtin_experiment(const std::string& name);
// Per-experiment seeds derive from the manifest seed by stable hashing of
// the experiment names.
std::uint64_t derive_seed(std::uint64_t manifest_seed, const std::string& name);

// ---------------------------------------------------------------------------
// Instance registries (cost/objective/potential from config fragments).
// ---------------------------------------------------------------------------

ConvexPotential make_potential(const json& spec);
CostFunction make_cost(const json& spec);
Objective make_objective(const json& spec);
SearchConfig make_search_config(const json& spec, int dim, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trace files: '.' decimal, 17 significant digits, bit-exact round-trip.
// ---------------------------------------------------------------------------

struct TraceFileRow {
  int n = 0;
  double f = 0.0;
  std::optional<double> phi;
  std::optional<double> gap;
  std::optional<double> bound_lhs;
  std::optional<double> bound_rhs;
};

std::string format_double(double v);  // %.17g
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceFileRow>& rows);
std::vector<TraceFileRow> read_trace_csv(const std::filesystem::path& path);

// Re-checks a certificate from a trace file: "descent" verifies the f column
// is non-increasing, rate kinds verify bound_lhs <= bound_rhs row-wise.
bool verify_trace_file(const std::filesystem::path& path, const std::string& kind,
                       double tol_scale = 1e-9);
// Recomputes a sublinear bound f_n <= reference_value + numerator / n from
// the f column of a trace file.
bool verify_trace_file_sublinear(const std::filesystem::path& path, double reference_value,
                                 double numerator, double tol_scale = 1e-9);

// CLI entry point (subcommands: run, list, verify).
int run_cli(int argc, char** argv);

}  // namespace gdgc
