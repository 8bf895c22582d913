#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steinw/common.hpp"

namespace steinw::cli {

inline constexpr int kHeaderVersion = 1;

enum ExitCode : int { kOk = 0, kPipelineError = 1, kValidationError = 2 };

struct RunOptions {
  std::string pipeline;  // bound, clt, knn or lmc
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::filesystem::path out = "out";
  bool trace = false;
};

/// Comma-separated table with numbers printed at full precision.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const;
  static CsvTable read(const std::filesystem::path& path);
  std::size_t column(const std::string& name) const;  // throws when missing
  bool has_column(const std::string& name) const;
};

std::string format_number(double v);

struct PipelineOutput {
  CsvTable results;
  nlohmann::json report;
  std::string summary;
  /// Extra files written next to the results, by name.
  std::vector<std::pair<std::string, std::string>> attachments;
};

/// Reads YAML or JSON into a JSON tree.
nlohmann::json load_config(const std::filesystem::path& path);

/// Runs one pipeline in memory; throws on validation or pipeline failure.
PipelineOutput run_pipeline(const std::string& pipeline, const nlohmann::json& config, std::uint64_t seed, int threads,
                            bool trace = false);

/// Runs a pipeline and writes results.csv, report.json and summary.txt, or error.json on failure.
int run(const RunOptions& options);

/// kind: rate_loglog, bound_decomposition or chain_trace.
void emit_plot_data(const std::filesystem::path& results_csv, const std::string& kind,
                    const std::filesystem::path& out);

}  // namespace steinw::cli
