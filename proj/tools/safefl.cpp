#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>

#include "safefl/config.hpp"
#include "safefl/experiment.hpp"

namespace {

std::string show(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("NA"); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated-learning poisoning detection workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    CLI::App* run = app.add_subcommand("run", "Run one experiment and write its CSV and snapshot outputs");
    run->add_option("--config", config_path, "Experiment configuration file")->required();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--seed", seed, "Override the master seed");
    run->add_flag("--quiet", quiet, "Suppress the summary line");

    CLI::App* show_config = app.add_subcommand("config", "Print the effective configuration");
    show_config->add_option("--config", config_path, "Experiment configuration file")->required();

    CLI11_PARSE(app, argc, argv);

    safefl::ExperimentConfig config;
    try {
        config = safefl::load_config(config_path);
        if (seed) config.seed = *seed;
    } catch (const safefl::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    if (*show_config) {
        safefl::write_config(std::cout, config);
        return 0;
    }

    try {
        const safefl::ExperimentResult result = safefl::run_experiment(config);
        safefl::write_outputs(out_dir, result);
        if (!quiet) {
            const safefl::ExperimentSummary& s = result.summary;
            std::cout << fmt::format("attack={} defense={} dacc={} fpr={} fnr={} tacc={:.4f} asr={}\n", s.attack,
                                     s.defense, show(s.dacc), show(s.fpr), show(s.fnr), s.final_tacc,
                                     show(s.final_asr));
        }
    } catch (const safefl::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
