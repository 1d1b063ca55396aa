#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mschemo/cli/config.hpp"

namespace mschemo::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitCheckFailed = 2,
  kExitCollapse = 3,
  kExitRuntime = 4,
};

/// Environment variable naming the root for relative output directories.
inline constexpr const char* kOutputRootEnv = "MSCHEMO_OUTPUT_ROOT";

struct CommandOptions {
  std::filesystem::path config_path;  // empty: defaults only
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string measure_literal;  // critical-mass without a config file
  std::ostream* out = nullptr;  // JSON summaries (std::cout when null)
  std::ostream* err = nullptr;  // diagnostics (std::cerr when null)
};

/// Loads the configuration and applies --seed/--threads.
RunConfig resolve_config(const CommandOptions& options);

/// output_dir, prefixed with $MSCHEMO_OUTPUT_ROOT when relative.
std::filesystem::path output_directory(const RunConfig& config);

int cmd_simulate(const CommandOptions& options);
int cmd_duality_check(const CommandOptions& options);
int cmd_bubble_scan(const CommandOptions& options);
int cmd_critical_mass(const CommandOptions& options);
int cmd_gradient_check(const CommandOptions& options);

}  // namespace mschemo::cli
