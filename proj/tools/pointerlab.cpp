#include <CLI11.hpp>

#include <pointerlab/pointerlab.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using pointerlab::ConfigError;
using pointerlab::ConfigSections;

struct RunArgs {
    std::string config;
    std::optional<std::string> experiment, out, format, seed, threads;
    std::optional<std::string> kappa, c1sq, n;
    std::vector<std::string> sets;
};

void put(ConfigSections& s, const std::string& section, const std::string& key, const std::string& value, const std::string& origin) {
    s[section][key] = {value, origin};
}

/// Shortcut flags land in the section of the selected experiment.
void put_shortcut(ConfigSections& s, const std::string& experiment, const std::string& key, const std::optional<std::string>& value,
                  const std::string& flag) {
    if (!value) return;
    for (const auto& spec : pointerlab::config_schema())
        if (spec.section == experiment && spec.key == key) return put(s, experiment, key, *value, flag);
    throw ConfigError(flag + ": experiment " + experiment + " has no " + key + " parameter");
}

pointerlab::ExperimentConfig build_config(const RunArgs& a) {
    ConfigSections s = a.config.empty() ? ConfigSections{} : pointerlab::load_config(a.config);
    if (a.experiment) put(s, "run", "experiment", *a.experiment, "--experiment");
    if (a.seed) put(s, "run", "seed", *a.seed, "--seed");
    if (a.threads) put(s, "run", "threads", *a.threads, "--threads");
    if (a.out) put(s, "run", "out", *a.out, "--out");
    if (a.format) put(s, "run", "format", *a.format, "--format");
    std::string experiment = "dephasing";
    if (auto r = s.find("run"); r != s.end())
        if (auto e = r->second.find("experiment"); e != r->second.end()) experiment = pointerlab::detail::trim(e->second.text);
    put_shortcut(s, experiment, "kappa", a.kappa, "--kappa");
    put_shortcut(s, experiment, "c1sq", a.c1sq, "--c1sq");
    put_shortcut(s, experiment, "n_trajectories", a.n, "--n");
    for (const auto& item : a.sets) {
        const auto eq = item.find('=');
        const auto dot = item.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("--set " + item + ": expected section.key=value");
        put(s, item.substr(0, dot), item.substr(dot + 1, eq - dot - 1), item.substr(eq + 1), "--set " + item.substr(0, eq));
    }
    return pointerlab::ExperimentConfig(s);
}

int run(const RunArgs& a) {
    const auto config = build_config(a);
    const auto report = pointerlab::run_and_write(config);
    for (const auto& c : report.criteria) std::cout << "criterion " << c.id << ": " << (c.passed ? "PASS" : "FAIL") << "  " << c.description << "\n";
    std::cout << "outputs: " << config.text("run", "out") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pointerlab: pointer-state solitons and orthogonal unravelings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pointerlab::version);

    RunArgs args;
    auto* run_cmd = app.add_subcommand("run", "Run one experiment and write its data files and manifest");
    run_cmd->add_option("--config", args.config, "Sectioned key = value config file");
    run_cmd->add_option("--experiment", args.experiment, "Experiment name (overrides run.experiment)");
    run_cmd->add_option("--seed", args.seed, "Master seed (u64)");
    run_cmd->add_option("--out", args.out, "Output directory");
    run_cmd->add_option("--format", args.format, "Table format: csv or json");
    run_cmd->add_option("--threads", args.threads, "Worker threads; results do not depend on it");
    run_cmd->add_option("--kappa", args.kappa, "Set <experiment>.kappa");
    run_cmd->add_option("--c1sq", args.c1sq, "Set <experiment>.c1sq");
    run_cmd->add_option("--n", args.n, "Set <experiment>.n_trajectories");
    run_cmd->add_option("--set", args.sets, "Override any key: section.key=value")->allow_extra_args(false);

    auto* list_cmd = app.add_subcommand("list", "List experiment names");
    auto* defaults_cmd = app.add_subcommand("defaults", "Print the default configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*list_cmd) {
            for (const auto& name : pointerlab::experiment_names()) std::cout << name << "\n";
            return 0;
        }
        if (*defaults_cmd) {
            std::cout << pointerlab::ExperimentConfig().canonical_text();
            return 0;
        }
        return run(args);
    } catch (const pointerlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
