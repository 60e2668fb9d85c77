#pragma once

// Subcommand runner behind the command-line tool.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "membrane/io.hpp"

namespace membrane {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

const std::vector<std::string>& command_names();

struct RunRequest {
  std::string command;
  Config config;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> resume;
};

// Runs one subcommand. Always writes out_dir/manifest.json; other outputs
// depend on the command. Returns 0, 2 (invalid input) or 3 (numerical failure).
int run(const RunRequest& req, std::ostream& log);

// Builders used by run(); exposed for tests.
RunConfig run_config_from(const Config& c);
InitialData initial_from(const Config& c);

}  // namespace membrane
