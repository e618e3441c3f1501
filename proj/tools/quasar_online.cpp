#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quasar/experiment.hpp"
#include "quasar/runner.hpp"
#include "quasar/verify_suites.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheckFailure = 2;
constexpr int kExitDivergence = 3;

quasar::ExperimentConfig load_config(const std::string& config_path, const std::string& preset, bool noisy) {
    if (!config_path.empty() && !preset.empty()) {
        throw std::invalid_argument("pass either --config or --preset, not both");
    }
    quasar::ExperimentConfig cfg;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw std::invalid_argument("cannot open config file " + config_path);
        nlohmann::json j;
        f >> j;
        cfg = quasar::ExperimentConfig::from_json(j);
    } else if (!preset.empty()) {
        cfg = quasar::ExperimentConfig::preset(preset, noisy);
    } else {
        throw std::invalid_argument("one of --config or --preset is required");
    }
    quasar::apply_env_seed_override(cfg);
    return cfg;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online gradient descent on time-varying single-neuron losses: experiments, theory bounds, "
                 "and numerical verification suites"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir = "out", suite_csv;
    bool noisy = false;

    CLI::App* run = app.add_subcommand("run", "run an experiment and write regret.csv/bounds.json/config.json");
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--preset", preset, "preset name: leaky_relu_default|logistic_default|relu_default");
    run->add_flag("--noisy", noisy, "preset label noise toggle (0.01 variance)");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();

    CLI::App* verify = app.add_subcommand("verify", "run numerical verification suites");
    verify->add_option("--config", config_path, "JSON config file");
    verify->add_option("--preset", preset, "preset name");
    verify->add_flag("--noisy", noisy, "preset label noise toggle");
    verify->add_option("--suite", suite_csv, "comma-separated suite names (default: all)");

    CLI::App* bounds = app.add_subcommand("bounds", "print constants, step-size ranges and the regret bound");
    bounds->add_option("--config", config_path, "JSON config file");
    bounds->add_option("--preset", preset, "preset name");
    bounds->add_flag("--noisy", noisy, "preset label noise toggle");

    CLI11_PARSE(app, argc, argv);

    try {
        const quasar::ExperimentConfig cfg = load_config(config_path, preset, noisy);
        if (run->parsed()) {
            const quasar::ExperimentResult res = quasar::cmd_run(cfg, out_dir);
            std::cout << "wrote " << out_dir << "/regret.csv (" << cfg.T << " rows), bounds.json, config.json\n";
            std::cout << "final cum_regret: " << quasar::format_double(res.records[0].cum_regret.back())
                      << "\n";
            return kExitOk;
        }
        if (verify->parsed()) {
            const quasar::VerifyOutcome out = quasar::cmd_verify(cfg, split_csv(suite_csv));
            std::cout << quasar::to_text(out);
            return out.all_ok() ? kExitOk : kExitCheckFailure;
        }
        std::cout << quasar::cmd_bounds(cfg).dump(2) << "\n";
        return kExitOk;
    } catch (const quasar::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
