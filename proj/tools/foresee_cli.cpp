#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "foresee/commands.hpp"
#include "foresee/config.hpp"
#include "foresee/errors.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::string out_dir = "out";
    std::string strategy;
    bool real_data = false;
    bool no_timestamp = false;
    std::string stream;
    std::string graph;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool takes_inputs)
{
    cmd->add_option("--config", flags.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--trials", flags.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--strategy", flags.strategy, "ori, prev_day, fixed_ema:<alpha>, foresee, foresee_minus");
    cmd->add_flag("--real-data", flags.real_data, "drop regions with mean demand below 2");
    cmd->add_flag("--no-timestamp", flags.no_timestamp, "omit generated-at lines for byte-identical reruns");
    if (takes_inputs) {
        cmd->add_option("--stream", flags.stream, "stream directory (manifest.json + day CSVs)");
        cmd->add_option("--graph", flags.graph, "region edge list")->check(CLI::ExistingFile);
    }
}

foresee::RunConfig build_config(const CommonFlags& flags)
{
    foresee::RunConfig cfg = flags.config_path.empty() ? foresee::RunConfig{}
                                                       : foresee::load_run_config(flags.config_path);
    if (flags.seed) {
        cfg.seed = *flags.seed;
    }
    if (flags.trials) {
        cfg.trials = *flags.trials;
    }
    if (!flags.strategy.empty()) {
        try {
            cfg.strategy = foresee::Strategy::parse(flags.strategy);
        } catch (const foresee::Error& e) {
            throw foresee::ConfigError(e.what());
        }
    }
    cfg.validate();
    return cfg;
}

foresee::CommandOptions build_options(const CommonFlags& flags)
{
    foresee::CommandOptions opts;
    opts.out_dir = flags.out_dir;
    opts.timestamp = !flags.no_timestamp;
    opts.real_data = flags.real_data;
    if (!flags.stream.empty()) {
        opts.stream = flags.stream;
    }
    if (!flags.graph.empty()) {
        opts.graph = flags.graph;
    }
    return opts;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Online residual correction for daily spatiotemporal forecasts"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string selector = "all";

    auto* synth = app.add_subcommand("synth", "generate a synthetic stream and graph");
    add_common(synth, flags, false);
    auto* run = app.add_subcommand("run", "correct a stream and report metrics against ORI");
    add_common(run, flags, true);
    auto* verify = app.add_subcommand("verify", "Monte Carlo checks of the error identities and regret bound");
    add_common(verify, flags, false);
    verify->add_option("theorem", selector, "t1, t2, t3, t4 or all")
        ->check(CLI::IsMember({"t1", "t2", "t3", "t4", "all"}));
    auto* sweep = app.add_subcommand("sweep-alpha", "MAE of fixed-alpha correction over a grid");
    add_common(sweep, flags, true);
    auto* ablate = app.add_subcommand("ablate", "compare ORI, PREV_DAY, FORESEE_MINUS and FORESEE");
    add_common(ablate, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? foresee::kExitOk : foresee::kExitUsage;
    }

    return foresee::run_guarded(
        [&]() -> int {
            const auto cfg = build_config(flags);
            const auto opts = build_options(flags);
            if (synth->parsed()) {
                return foresee::cmd_synth(cfg, opts, std::cout);
            }
            if (run->parsed()) {
                return foresee::cmd_run(cfg, opts, std::cout);
            }
            if (verify->parsed()) {
                return foresee::cmd_verify(selector, cfg, opts, std::cout);
            }
            if (sweep->parsed()) {
                return foresee::cmd_sweep_alpha(cfg, opts, std::cout);
            }
            return foresee::cmd_ablate(cfg, opts, std::cout);
        },
        std::cerr);
}
