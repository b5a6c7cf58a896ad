#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foresee/config.hpp"
#include "foresee/engine.hpp"
#include "foresee/smoothing.hpp"

namespace foresee {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitVerify = 3 };

struct CommandOptions {
    std::filesystem::path out_dir = "out";
    /// Adds a generated-at line to written files. Off gives byte-identical reruns.
    bool timestamp = true;
    /// Real-data ingestion: drops regions with mean demand below 2 unless the config sets a floor.
    bool real_data = false;
    std::optional<std::filesystem::path> stream;
    std::optional<std::filesystem::path> graph;
};

/// Grid graph when `regions` is a perfect square, otherwise a path.
RegionGraph default_graph(std::size_t regions);

/// The config's world with its optional step shift. Without a trial index the
/// world is seeded by config.seed itself; trial i uses the derived seed of trial_world.
WorldTrace config_world(const RunConfig& config, std::optional<std::size_t> trial = std::nullopt);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Runs `body`, mapping exceptions to exit codes: ConfigError -> 1, data or
/// shape errors and anything else -> 2. The diagnostic goes to `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

/// Writes <out>/stream/ and <out>/graph.txt for one synthetic world.
int cmd_synth(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Runs the configured strategy and ORI; writes metrics.json, trace.ndjson, summary.csv.
/// Without a stream, a synthetic world from the config is used.
int cmd_run(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// selector: t1, t2, t3, t4 or all. Writes verify.csv; returns kExitVerify when a check fails.
int cmd_verify(std::string_view selector, const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Fixed-alpha MAE over config.alpha_grid plus one row for the configured strategy; writes sweep_alpha.csv.
int cmd_sweep_alpha(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// ORI, PREV_DAY, FORESEE_MINUS and FORESEE side by side; writes ablation.csv.
int cmd_ablate(const RunConfig& config, const CommandOptions& options, std::ostream& log);

} // namespace foresee
