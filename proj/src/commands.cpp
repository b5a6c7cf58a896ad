#include "foresee/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "foresee/errors.hpp"
#include "foresee/parallel.hpp"
#include "foresee/stream_io.hpp"
#include "foresee/synth.hpp"
#include "foresee/theory.hpp"

namespace foresee {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

std::string csv_preamble(const CommandOptions& options)
{
    return options.timestamp ? "# generated_at " + utc_timestamp() + "\n" : std::string();
}

std::optional<double> effective_floor(const RunConfig& config, const CommandOptions& options)
{
    if (config.region_floor) {
        return config.region_floor;
    }
    if (options.real_data) {
        return 2.0;
    }
    return std::nullopt;
}

/// Where days come from: a stream on disk (one pass) or the config's synthetic world (config.trials passes).
struct Sources {
    bool synthetic = true;
    std::vector<DayRecord> stream_records;
    std::vector<std::string> region_ids;
    std::shared_ptr<const RegionGraph> graph;
    std::size_t passes = 1;
};

Sources resolve_sources(const RunConfig& config, const CommandOptions& options, std::ostream& log, bool monte_carlo)
{
    Sources src;
    std::vector<std::string> dropped;
    if (options.stream) {
        src.synthetic = false;
        LoadOptions load;
        load.region_floor = effective_floor(config, options);
        auto loaded = load_stream(*options.stream, load);
        src.stream_records = std::move(loaded.records);
        src.region_ids = std::move(loaded.region_ids);
        dropped = std::move(loaded.dropped_regions);
        for (const auto& id : dropped) {
            log << "dropped region " << id << " (mean demand below floor)\n";
        }
    } else {
        src.region_ids = default_region_ids(config.world.shape.regions);
        src.passes = monte_carlo ? config.trials : 1;
    }

    if (options.graph) {
        std::vector<std::string> warnings;
        src.graph = std::make_shared<const RegionGraph>(load_graph(*options.graph, src.region_ids, dropped, &warnings));
        for (const auto& w : warnings) {
            log << "warning: " << w << '\n';
        }
    } else if (src.synthetic) {
        src.graph = std::make_shared<const RegionGraph>(default_graph(src.region_ids.size()));
    } else {
        src.graph = std::make_shared<const RegionGraph>(src.region_ids.size());
    }
    return src;
}

std::vector<DayRecord> pass_records(const Sources& src, const RunConfig& config, std::size_t pass, bool monte_carlo)
{
    if (!src.synthetic) {
        return src.stream_records;
    }
    return config_world(config, monte_carlo ? std::optional<std::size_t>(pass) : std::nullopt).records;
}

/// acc[pass][s]: pooled error accumulator of strategy s on that pass.
std::vector<std::vector<MetricAccumulator>> evaluate_strategies(const Sources& src, const RunConfig& config,
                                                                std::span<const Strategy> strategies)
{
    std::vector<std::vector<MetricAccumulator>> acc(src.passes, std::vector<MetricAccumulator>(strategies.size()));
    parallel_for(
        src.passes,
        [&](std::size_t i) {
            const auto records = pass_records(src, config, i, true);
            for (std::size_t s = 0; s < strategies.size(); ++s) {
                const auto run = run_stream(records, strategies[s], config.engine, src.graph);
                for (std::size_t t = 0; t < records.size(); ++t) {
                    acc[i][s].add(run.corrected[t], records[t].actual);
                }
            }
        },
        config.workers);
    return acc;
}

struct StrategySummary {
    MetricReport pooled;
    std::vector<double> per_pass_mae;
};

StrategySummary summarise(const std::vector<std::vector<MetricAccumulator>>& acc, std::size_t s)
{
    StrategySummary out;
    MetricAccumulator total;
    for (const auto& pass : acc) {
        total.merge(pass[s]);
        out.per_pass_mae.push_back(pass[s].report().mae);
    }
    out.pooled = total.report();
    return out;
}

double improvement_pct(double reference, double value)
{
    return reference == 0.0 ? 0.0 : 100.0 * (reference - value) / reference;
}

std::string optional_number(std::optional<double> v)
{
    return v ? format_double(*v) : std::string();
}

} // namespace

RegionGraph default_graph(std::size_t regions)
{
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(regions))));
    if (side * side == regions) {
        return RegionGraph::grid(side, side);
    }
    return RegionGraph::path(regions);
}

WorldTrace config_world(const RunConfig& config, std::optional<std::size_t> trial)
{
    WorldConfig world = config.seeded_world();
    if (trial) {
        world = trial_world(world, *trial);
    }
    if (config.shift_day) {
        return regime_shift_world(world, *config.shift_day, DayTensor::filled(world.shape, config.shift_amount));
    }
    return generate(world);
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int run_guarded(const std::function<int()>& body, std::ostream& err)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const ShapeError& e) {
        err << "shape error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

int cmd_synth(const RunConfig& config, const CommandOptions& options, std::ostream& log)
{
    config.validate();
    const auto world = config_world(config);
    const auto ids = default_region_ids(config.world.shape.regions);
    const auto stream_dir = options.out_dir / "stream";
    save_stream(stream_dir, world.records, ids, options.timestamp ? std::optional(utc_timestamp()) : std::nullopt);
    save_graph(options.out_dir / "graph.txt", default_graph(ids.size()), ids);
    write_text(options.out_dir / "config.json", dump_run_config(config) + "\n");
    log << "wrote " << world.records.size() << " days of shape " << config.world.shape.str() << " to "
        << stream_dir.string() << '\n';
    return kExitOk;
}

int cmd_run(const RunConfig& config, const CommandOptions& options, std::ostream& log)
{
    config.validate();
    const auto src = resolve_sources(config, options, log, false);
    const auto records = pass_records(src, config, 0, false);

    const auto result = run_stream(records, config.strategy, config.engine, src.graph);
    const auto ori = run_stream(records, Strategy::ori(), config.engine, src.graph);

    std::string trace;
    for (const auto& row : result.trace) {
        trace += trace_row_json(row);
        trace += '\n';
    }

    json metrics;
    if (options.timestamp) {
        metrics["generated_at"] = utc_timestamp();
    }
    metrics["strategy"] = config.strategy.name();
    metrics["days"] = records.size();
    metrics["entries"] = result.report.count;
    metrics["mae"] = result.report.mae;
    metrics["rmse"] = result.report.rmse;
    metrics["ori"] = {{"mae", ori.report.mae}, {"rmse", ori.report.rmse}};
    metrics["improve_mae_pct"] = improvement_pct(ori.report.mae, result.report.mae);
    metrics["improve_rmse_pct"] = improvement_pct(ori.report.rmse, result.report.rmse);
    metrics["final_weights"] = result.final_state.ensemble.weights;
    metrics["final_gamma"] = result.final_state.smooth_params.gamma;
    metrics["final_kernel"] = result.final_state.smooth_params.kernel;

    std::ostringstream summary;
    summary << csv_preamble(options) << "method,mae,rmse\n";
    summary << "ori," << format_double(ori.report.mae) << ',' << format_double(ori.report.rmse) << '\n';
    summary << config.strategy.name() << ',' << format_double(result.report.mae) << ','
            << format_double(result.report.rmse) << '\n';
    summary << "improve_pct," << format_double(improvement_pct(ori.report.mae, result.report.mae)) << ','
            << format_double(improvement_pct(ori.report.rmse, result.report.rmse)) << '\n';

    write_text(options.out_dir / "metrics.json", metrics.dump(2) + "\n");
    write_text(options.out_dir / "trace.ndjson", trace);
    write_text(options.out_dir / "summary.csv", summary.str());

    char line[160];
    std::snprintf(line, sizeof(line), "%s: MAE %.4f RMSE %.4f (ORI MAE %.4f, improve %.2f%%)\n",
                  config.strategy.name().c_str(), result.report.mae, result.report.rmse, ori.report.mae,
                  improvement_pct(ori.report.mae, result.report.mae));
    log << line;
    return kExitOk;
}

int cmd_verify(std::string_view selector, const RunConfig& config, const CommandOptions& options, std::ostream& log)
{
    config.validate();
    const bool all = selector == "all";
    if (!all && selector != "t1" && selector != "t2" && selector != "t3" && selector != "t4") {
        throw ConfigError("verify: selector must be one of t1, t2, t3, t4, all");
    }
    if (config.shift_day) {
        throw ConfigError("verify: the closed forms assume no step shift");
    }
    const WorldConfig world = config.seeded_world();
    VerifyOptions opts = config.verify;
    opts.workers = config.workers;

    std::vector<TheoremTarget> targets;
    if (all || selector == "t1") {
        targets.push_back(verify_t1(world, config.trials, opts));
    }
    if (all || selector == "t2") {
        targets.push_back(verify_t2(world, config.trials, opts));
    }
    if (all || selector == "t3") {
        for (double a : config.t3_alphas) {
            targets.push_back(verify_t3(world, a, config.trials, opts));
        }
    }
    if (all || selector == "t4") {
        const auto audits = regret_audit(world, config.engine.alphas, config.engine.eta, config.trials, config.workers);
        TheoremTarget t;
        t.theorem_id = "T4";
        t.trials = audits.size();
        std::vector<double> regret;
        std::vector<double> bound;
        t.pass = true;
        for (const auto& a : audits) {
            regret.push_back(a.mixture_cum_loss - a.best_expert_cum_loss);
            bound.push_back(a.bound);
            t.pass = t.pass && a.satisfied;
        }
        const auto regret_stats = sample_stats(regret);
        t.empirical = regret_stats.mean;
        t.standard_error = regret_stats.standard_error;
        t.closed_form = sample_stats(bound).mean;
        targets.push_back(std::move(t));
    }

    std::ostringstream csv;
    csv << csv_preamble(options) << "theorem_id,alpha,trials,empirical,closed_form,standard_error,tolerance,pass\n";
    bool ok = true;
    for (const auto& t : targets) {
        csv << t.theorem_id << ',' << optional_number(t.alpha) << ',' << t.trials << ',' << format_double(t.empirical)
            << ',' << format_double(t.closed_form) << ',' << format_double(t.standard_error) << ','
            << format_double(t.tolerance) << ',' << (t.pass ? "true" : "false") << '\n';
        char alpha[24] = "";
        if (t.alpha) {
            std::snprintf(alpha, sizeof(alpha), "a=%.4g", *t.alpha);
        }
        char line[200];
        std::snprintf(line, sizeof(line), "%-4s %-8s empirical %.6g closed form %.6g se %.3g : %s\n",
                      t.theorem_id.c_str(), alpha, t.empirical, t.closed_form, t.standard_error,
                      t.pass ? "pass" : "FAIL");
        log << line;
        ok = ok && t.pass;
    }
    write_text(options.out_dir / "verify.csv", csv.str());
    if (!ok) {
        log << "failing checks:";
        for (const auto& t : targets) {
            if (!t.pass) {
                char alpha[32] = "";
                if (t.alpha) {
                    std::snprintf(alpha, sizeof(alpha), "(alpha=%.4g)", *t.alpha);
                }
                log << ' ' << t.theorem_id << alpha;
            }
        }
        log << '\n';
        return kExitVerify;
    }
    return kExitOk;
}

int cmd_sweep_alpha(const RunConfig& config, const CommandOptions& options, std::ostream& log)
{
    config.validate();
    const auto src = resolve_sources(config, options, log, true);
    std::vector<Strategy> strategies;
    for (double a : config.alpha_grid) {
        strategies.push_back(a == 1.0 ? Strategy::ori() : Strategy::fixed_ema(a));
    }
    strategies.push_back(config.strategy);
    const auto acc = evaluate_strategies(src, config, strategies);

    std::ostringstream csv;
    csv << csv_preamble(options) << "series,alpha,mae,rmse,mae_se\n";
    double best_mae = 0.0;
    double best_alpha = 0.0;
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        const auto summary = summarise(acc, s);
        const bool grid_row = s + 1 < strategies.size();
        const double se = sample_stats(summary.per_pass_mae).standard_error;
        if (grid_row) {
            const std::string series = strategies[s].tag == StrategyTag::kOri ? "ori" : "fixed_ema";
            csv << series << ',' << format_double(config.alpha_grid[s]) << ',';
            if (s == 0 || summary.pooled.mae < best_mae) {
                best_mae = summary.pooled.mae;
                best_alpha = config.alpha_grid[s];
            }
        } else {
            csv << strategies[s].name() << ",,";
            char line[160];
            std::snprintf(line, sizeof(line), "best grid alpha %.2f MAE %.4f; %s MAE %.4f (ratio %.4f)\n", best_alpha,
                          best_mae, strategies[s].name().c_str(), summary.pooled.mae,
                          best_mae > 0.0 ? summary.pooled.mae / best_mae : 0.0);
            log << line;
        }
        csv << format_double(summary.pooled.mae) << ',' << format_double(summary.pooled.rmse) << ','
            << format_double(se) << '\n';
    }
    write_text(options.out_dir / "sweep_alpha.csv", csv.str());
    return kExitOk;
}

int cmd_ablate(const RunConfig& config, const CommandOptions& options, std::ostream& log)
{
    config.validate();
    const auto src = resolve_sources(config, options, log, true);
    const std::vector<Strategy> strategies{Strategy::ori(), Strategy::prev_day(), Strategy::foresee_minus(),
                                           Strategy::foresee()};
    const auto acc = evaluate_strategies(src, config, strategies);
    const auto reference = summarise(acc, strategies.size() - 1);

    std::ostringstream csv;
    csv << csv_preamble(options) << "strategy,mae,rmse,mae_se,mae_minus_foresee,paired_se\n";
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        const auto summary = summarise(acc, s);
        const auto diff = paired_difference(summary.per_pass_mae, reference.per_pass_mae);
        csv << strategies[s].name() << ',' << format_double(summary.pooled.mae) << ','
            << format_double(summary.pooled.rmse) << ','
            << format_double(sample_stats(summary.per_pass_mae).standard_error) << ',' << format_double(diff.mean)
            << ',' << format_double(diff.standard_error) << '\n';
        char line[160];
        std::snprintf(line, sizeof(line), "%-14s MAE %.4f RMSE %.4f (vs foresee %+.4f +- %.4f)\n",
                      strategies[s].name().c_str(), summary.pooled.mae, summary.pooled.rmse, diff.mean,
                      diff.standard_error);
        log << line;
    }
    write_text(options.out_dir / "ablation.csv", csv.str());
    return kExitOk;
}

} // namespace foresee
