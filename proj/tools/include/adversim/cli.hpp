#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adversim/engine.hpp"

namespace adversim::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfigError = 2, kIoError = 3, kBindError = 4 };

class IoError : public Error {
 public:
  using Error::Error;
};

/// Applies `key=value` to a config document. Keys are dotted paths
/// (`vehicles.1.init`, `sim.seed`); a bare key is looked up in `sim`, then
/// `road`, then the top level. The value is parsed as JSON and falls back to a string.
/// Throws ConfigError for unknown paths or malformed assignments.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads, overrides and validates a config file.
EngineConfig load_config(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides = {});

/// Summary document written next to the logs: the run summary plus the
/// scenario name and config digest.
nlohmann::json summary_document(const EngineConfig& c, const RunSummary& s,
                                const std::string& digest);

struct RunOutputs {
  std::filesystem::path jsonl;
  std::filesystem::path csv;
  std::filesystem::path summary;
};

/// Writes `<stem>.jsonl`, `<stem>.csv` and `<stem>.summary.json`.
RunOutputs write_outputs(const Engine& engine, const std::filesystem::path& out_dir,
                         const std::string& stem);

/// Runs one scenario to termination and writes its outputs.
RunSummary run_scenario(const EngineConfig& c, const std::filesystem::path& out_dir,
                        const std::string& stem);

int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir,
            const std::vector<std::string>& overrides);

/// Config paths matching a shell glob, sorted.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

int cmd_batch(const std::string& config_glob, const std::filesystem::path& out_dir, int repeats,
              std::uint64_t seed_base);

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::filesystem::path out_dir = ".";
  std::filesystem::path static_dir;
  /// Wall-clock ticks per simulated tick period; 2 runs twice as fast.
  double speed = 1.0;
  std::vector<std::string> overrides;
};

int cmd_serve(const std::filesystem::path& config, const ServeOptions& options);

/// Full command line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace adversim::cli
