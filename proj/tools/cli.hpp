#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "terralabel/forest.hpp"

namespace terralabel::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitConfig = 2,
  kExitMissingInput = 3,
};

// Command-line flags that override config-file values.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::uint32_t> trees;
  std::optional<double> cloud_threshold;
  std::optional<std::filesystem::path> taxonomy;
};

struct RunConfig {
  std::filesystem::path tile_dir;
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;  // mandatory once overrides are applied
  ForestParams forest;
  double cloud_threshold = 0.90;
  std::optional<std::filesystem::path> taxonomy;
  unsigned workers = 1;

  // Relative paths resolve against `base_dir`. Throws ConfigError.
  static RunConfig from_json(std::string_view text, const std::filesystem::path& base_dir);
  static RunConfig from_file(const std::filesystem::path& path);

  void apply(const Overrides& overrides);
  // Throws ConfigError (missing seed, bad threshold, bad forest params).
  void validate() const;
};

int cmd_synth(const std::filesystem::path& spec_path,
              const std::optional<std::filesystem::path>& out_dir,
              const Overrides& overrides, std::ostream& out, std::ostream& err);

int cmd_run(const std::filesystem::path& config_path, const Overrides& overrides,
            std::ostream& out, std::ostream& err);

int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

int cmd_aggregate(const std::filesystem::path& dir, const Overrides& overrides,
                  std::ostream& out, std::ostream& err);

// Parses argv and dispatches to the commands above.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace terralabel::cli
