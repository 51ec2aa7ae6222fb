#pragma once

#include <optional>
#include <string>

#include "modalwave/io.hpp"

namespace modalwave {

/// Experiment commands behind the CLI, callable directly from tests.
/// Each validates its config fully before computing, writes its artifacts
/// plus manifest.json into out_dir, and returns a process exit code:
/// 0 success, 1 failed check or diverged run. Config errors throw
/// std::invalid_argument (the CLI maps those to exit 2).
int cmd_verify_addition(const io::json& config, const std::string& out_dir, uint64_t seed);
int cmd_forward(const io::json& config, const std::string& out_dir, uint64_t seed);
int cmd_solver_compare(const io::json& config, const std::string& out_dir, uint64_t seed);
int cmd_fit(const io::json& config, const std::string& out_dir, uint64_t seed);
int cmd_beam_extrapolate(const io::json& config, const std::string& out_dir, uint64_t seed);

/// Dispatch by command name. Accepts either a plain config or a previously
/// written manifest.json (whose embedded config and seed are reused; an
/// explicit seed overrides the manifest's).
int run_command(const std::string& name, const io::json& config, const std::string& out_dir,
                std::optional<uint64_t> seed);

}  // namespace modalwave
