#pragma once

#include <fftw3.h>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"
#include "io.hpp"

namespace pointerlab {

inline constexpr const char* version = "0.1.0";

inline json library_versions() {
    return {{"pointerlab", version},
            {"fftw", std::string(fftw_version)},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

inline SolitonCache make_soliton_cache(const ExperimentConfig& c) {
    return SolitonCache(c.real("soliton", "tol"), c.real("soliton", "t_max"), c.real("soliton", "resolution"), c.real("soliton", "dt_cap"));
}

inline ExperimentContext make_context(const ExperimentConfig& c, SolitonCache& cache) {
    return {c.integer("run", "seed"), static_cast<unsigned>(c.integer("run", "threads")), &cache};
}

/// Runs the experiment named in [run] with parameters from its section.
inline ExperimentReport run_experiment(const ExperimentConfig& c, const ExperimentContext& ctx) {
    const std::string& name = c.text("run", "experiment");
    if (name == "dephasing") {
        const std::string s = "dephasing";
        return run_dephasing({c.real(s, "gamma"), c.real(s, "theta0"), c.real(s, "phi0"), c.real(s, "flow_theta0"), c.real(s, "flow_time"),
                              c.integer(s, "n_trajectories")},
                             ctx);
    }
    if (name == "soliton-formation") {
        const std::string s = "soliton-formation";
        return run_soliton_formation({c.real(s, "kappa"), c.real(s, "c1sq"), c.real(s, "separation_widths"), c.real(s, "momentum"),
                                      c.text(s, "packet"), c.real(s, "t_max"), c.real(s, "tol")},
                                     ctx);
    }
    if (name == "tail-fit") {
        const std::string s = "tail-fit";
        return run_tail_fit({c.reals(s, "kappas"), c.real(s, "suppression_kappa"), c.real(s, "superposition_separation"), c.real(s, "q_range")},
                            ctx);
    }
    if (name == "width-sweep") return run_width_sweep({c.reals("width-sweep", "kappas")}, ctx);
    if (name == "potential-dynamics") {
        const std::string s = "potential-dynamics";
        return run_potential_dynamics({c.real(s, "kappa"), c.real(s, "a"), c.real(s, "b"), c.real(s, "x0"), c.real(s, "sample_interval")}, ctx);
    }
    if (name == "basin-map") {
        const std::string s = "basin-map";
        const auto sat = c.reals(s, "saturated_positions");
        const auto unsat = c.reals(s, "unsaturated_positions");
        if (sat.size() != 3) throw ConfigError("basin-map.saturated_positions needs exactly 3 values");
        if (unsat.size() != 3) throw ConfigError("basin-map.unsaturated_positions needs exactly 3 values");
        return run_basin_map({c.integer(s, "resolution"), sat, unsat, c.real(s, "t_max")}, ctx);
    }
    if (name == "weights-n2") {
        const std::string s = "weights-n2";
        for (double v : c.reals(s, "c1sq"))
            if (v == 0.5) throw ConfigError("weights-n2.c1sq = 0.5 is the unstable equal-weight point");
        return run_weights_n2({c.reals(s, "c1sq"), c.integer(s, "n_trajectories"), c.real(s, "separation")}, ctx);
    }
    if (name == "weights-nN") {
        const std::string s = "weights-nN";
        if (c.integer(s, "n_min") > c.integer(s, "n_max")) throw ConfigError("weights-nN.n_min must not exceed weights-nN.n_max");
        return run_weights_nn({c.integer(s, "states"), c.integer(s, "n_trajectories"), c.integer(s, "n_min"), c.integer(s, "n_max"),
                               c.integer(s, "calibration_trajectories"), c.real(s, "separation"), c.real(s, "entropy_bound")},
                              ctx);
    }
    if (name == "oracle-compare") {
        const std::string s = "oracle-compare";
        const auto n = c.integer(s, "n_points");
        if (n & (n - 1)) throw ConfigError("oracle-compare.n_points must be a power of two");
        return run_oracle_compare({n, c.real(s, "length"), c.real(s, "kappa"), c.real(s, "dt"), c.integer(s, "n_trajectories"),
                                   c.reals(s, "times"), c.real(s, "separation"), c.real(s, "packet_width"), c.real(s, "c1sq"),
                                   c.integer(s, "bootstrap")},
                                  ctx);
    }
    throw ConfigError("run.experiment: unknown experiment " + name);
}

/// Config echo, hash, seed, versions, per-criterion results and outputs.
/// Threads are left out: they change wall time only.
inline json run_manifest(const ExperimentConfig& c, const ExperimentReport& r, const std::vector<std::string>& outputs) {
    json echo = json::object();
    for (const auto& [section, keys] : c.values())
        for (const auto& [key, value] : keys)
            if (!(section == "run" && key == "threads")) echo[section][key] = value;
    json criteria = json::object();
    for (const auto& cr : r.criteria) criteria[cr.id] = cr.passed ? "PASS" : "FAIL";
    return {{"experiment", r.experiment},
            {"seed", c.integer("run", "seed")},
            {"config_hash", c.hash()},
            {"config", echo},
            {"versions", library_versions()},
            {"criteria", criteria},
            {"passed", r.passed()},
            {"outputs", outputs}};
}

/// Runs and writes everything under the configured output directory;
/// returns the report.
inline ExperimentReport run_and_write(const ExperimentConfig& c) {
    SolitonCache cache = make_soliton_cache(c);
    const ExperimentReport r = run_experiment(c, make_context(c, cache));
    const std::filesystem::path dir = c.text("run", "out");
    auto outputs = write_report(r, dir, c.text("run", "format"));
    write_text(dir / "config.ini", c.canonical_text());
    outputs.push_back("config.ini");
    write_text(dir / "manifest.json", run_manifest(c, r, outputs).dump(2) + "\n");
    return r;
}

}  // namespace pointerlab
