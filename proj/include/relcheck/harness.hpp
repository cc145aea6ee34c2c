#pragma once
// Metrics files and reports produced by the CLI.

#include <filesystem>
#include <string>
#include <vector>

#include "relcheck/config.hpp"
#include "relcheck/run.hpp"

namespace relcheck::harness {

inline constexpr int kMetricsSchemaVersion = 1;
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kTimingsFile = "timings.csv";
inline constexpr const char* kSummaryFile = "summary.json";

// One row per completed round. Per-participant fields are ';'-joined in
// participant order; a participant that dropped out shows NA. Deterministic
// for a given config: no timings in here.
std::string metrics_csv(const run::RunReport& report, const config::TrainingRunConfig& cfg);
std::string timings_csv(const run::RunReport& report);
std::string summary_json(const run::RunReport& report, const config::TrainingRunConfig& cfg);

// Writes metrics.csv, timings.csv and summary.json into out_dir.
void write_run_outputs(const run::RunReport& report, const config::TrainingRunConfig& cfg,
                       const std::filesystem::path& out_dir);

struct MetricsFile {
  std::string label;
  int schema_version = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string raw;
};

// Throws FormatError on a missing or malformed schema line or ragged rows.
MetricsFile parse_metrics(const std::string& text, std::string label);
MetricsFile read_metrics(const std::filesystem::path& path);

// A single file comes back byte for byte. Several files are aligned on the
// round column; rounds missing from a shorter run read NA. Mixed schema
// versions throw FormatError.
std::string report_table(const std::vector<MetricsFile>& files);

// Long-format series for plotting: run,round,series,value with accuracy,
// test_error and one similarity series per participant.
std::string plot_series(const std::vector<MetricsFile>& files);

std::string timing_table(const std::vector<run::TimingRow>& rows, std::size_t repetitions);

// %.17g, or NA for NaN.
std::string format_real(double v);

}  // namespace relcheck::harness
