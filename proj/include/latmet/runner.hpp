#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace latmet {

struct RunOptions {
    std::string output_dir = "out";
    std::optional<std::uint64_t> seed;  // overrides the config's seed list
    int threads = 0;                    // 0: leave the OpenMP default
};

/// Executes a batch config: validates every task up front, runs them in
/// order, and commits one CSV + one text summary per task plus a manifest.
/// Nothing is written unless every task succeeds. Returns a process exit
/// status (0 on success).
int run_config_file(const std::string& config_path, const RunOptions& options);
int run_config_text(const std::string& config_text, const RunOptions& options);

std::string catalog_listing();

}  // namespace latmet
