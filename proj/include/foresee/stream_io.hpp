#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresee/engine.hpp"
#include "foresee/smoothing.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

/// On-disk stream layout: `<dir>/manifest.json` declares the shape, region ids
/// and the ordered day list; each day is a CSV file with header
/// `hour,region,channel,pred,actual` and one row per element in
/// (hour, region, channel) row-major order. Numbers use 17 significant digits.
struct LoadOptions {
    /// Regions whose mean actual demand is below this value are dropped.
    std::optional<double> region_floor;
};

struct LoadedStream {
    std::vector<DayRecord> records;
    std::vector<std::string> region_ids;
    std::vector<std::string> dropped_regions;
};

/// Fixed-precision decimal text that round-trips a double exactly.
std::string format_double(double value);

std::vector<std::string> default_region_ids(std::size_t regions);

void save_stream(const std::filesystem::path& dir, std::span<const DayRecord> records,
                 std::span<const std::string> region_ids, std::optional<std::string> timestamp = std::nullopt);

LoadedStream load_stream(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Two-column edge list of region ids; '#' starts a comment line.
///
/// Edges touching a region in `dropped_ids` are skipped. Any other id not in
/// `region_ids` is rejected. Self-loops are removed and reported in `warnings`.
RegionGraph load_graph(const std::filesystem::path& path, std::span<const std::string> region_ids,
                       std::span<const std::string> dropped_ids = {}, std::vector<std::string>* warnings = nullptr);

void save_graph(const std::filesystem::path& path, const RegionGraph& graph, std::span<const std::string> region_ids);

/// Snapshot of an engine: configuration, alphas, weights, corrections,
/// smoothing parameters, cached error and day counters. The graph is not included.
void save_engine_state(std::ostream& out, const EngineState& state);
EngineState load_engine_state(std::istream& in, std::shared_ptr<const RegionGraph> graph = nullptr);

/// One NDJSON line (without newline) describing a day of a run.
std::string trace_row_json(const TraceRow& row);

} // namespace foresee
