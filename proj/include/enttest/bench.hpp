#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "enttest/eet.hpp"
#include "enttest/testers.hpp"

namespace enttest {

enum class ExperimentKind { calibrate, error_grid, scaling, bayesnet, oracle_suite };

const char* kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::error_grid;
  std::vector<std::size_t> n;
  std::vector<double> eps;
  std::vector<std::size_t> d;
  std::vector<std::string> testers;
  std::vector<std::string> families;
  std::size_t trials = 0;
  std::uint64_t seed = 1;
  std::string cfg_path;  // empty: built-in defaults
  std::string out_dir = ".";
  std::string date = "unspecified";

  // Pass thresholds for --check.
  double accept_target = 0.85;
  double reject_target = 0.85;

  // Scaling: geometric ladder kappa = 2^(j / ladder_steps), j in [j_min, j_max].
  int ladder_steps = 16;
  int ladder_min = -192;
  int ladder_max = 32;
  double slope_min = 0.60;
  double slope_max = 0.90;

  // Calibration protocol.
  double calibrate_target = 0.9;
  double multiplier_cap = 64;

  // Oracle suite: Monte Carlo repetitions scale (1 = full size).
  double oracle_scale = 1;

  bool plots = true;
  bool wall_clock = false;

  void validate() const;
};

ExperimentSpec read_spec(std::istream& is, ExperimentKind kind);
ExperimentSpec load_spec(const std::string& path, ExperimentKind kind);

struct ResultRow {
  std::string kind;
  std::string tester;
  std::size_t n = 0;
  double eps = 0;
  std::size_t d = 0;
  std::string family;
  std::size_t trials = 0;
  std::size_t accepts = 0;
  std::size_t rejects = 0;
  double mean_samples = 0;
  double wall_ms = 0;
  std::uint64_t seed = 0;

  // Expected outcome under --check; `none` rows are informational.
  enum class Expect { none, accept, reject, pass } expect = Expect::none;
  double target = 0;

  double accept_rate() const;
  double reject_rate() const;
  bool violates() const;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> summary;  // human-readable lines, one fact each
  std::vector<std::string> failures;  // check violations
  bool ok() const { return failures.empty(); }
};

struct RunOptions {
  std::size_t workers = 1;
  bool check = false;
};

// Runs the suite and writes results.csv, summary.txt and plots into
// spec.out_dir. Per-trial seeds depend only on (seed, cell, trial).
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opt);

// The suites without file output.
ExperimentResult run_error_grid(const ExperimentSpec& spec, const ThresholdConfig& cfg,
                                std::size_t workers);
ExperimentResult run_scaling(const ExperimentSpec& spec, const ThresholdConfig& cfg,
                             std::size_t workers);
ExperimentResult run_bayesnet_suite(const ExperimentSpec& spec, const ThresholdConfig& cfg,
                                    std::size_t workers);
ExperimentResult run_oracle_suite(const ExperimentSpec& spec, const ThresholdConfig& cfg,
                                  std::size_t workers);

struct CalibrationOutcome {
  ThresholdConfig cfg;
  ExperimentResult result;
};

// Throws CalibrationFailed when a tester cannot meet the protocol within the
// multiplier cap.
CalibrationOutcome run_calibration(const ExperimentSpec& spec, const ThresholdConfig& start,
                                   std::size_t workers);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);

// Runs fn(task) for task in [0, count) over `workers` threads.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

// Ordinary least squares fit y = a + b x; returns {a, b}.
std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

void write_loglog_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<SvgSeries>& series);

}  // namespace enttest
