#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

#include "whs/experiment.hpp"
#include "whs/fail.hpp"

namespace {

whs::ExperimentConfig load_config(const std::string& path,
                                  const std::string& out_override,
                                  const std::vector<double>& t_override, int seed_override,
                                  int jobs_override) {
    whs::ExperimentConfig cfg = whs::ExperimentConfig::from_file(path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (!t_override.empty()) {
        cfg.t_grid = t_override;
        std::sort(cfg.t_grid.begin(), cfg.t_grid.end());
    }
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
    if (jobs_override >= 0) cfg.jobs = jobs_override;
    return cfg;
}

const char* kTemplate = R"({
  "version": 1,
  "manifold": {"n": 2, "grid_res": 128},
  "morse": [
    {"freq": [1, 0], "amp": 1.0, "phase": 0.0},
    {"freq": [0, 1], "amp": 1.0, "phase": 0.0}
  ],
  "t_grid": [8, 16, 24, 32],
  "degrees": [0, 1, 2],
  "tolerances": {"root": 1e-12, "eigen": 1e-8, "quadrature": 1e-6},
  "seed": 20020411,
  "output_dir": "out",
  "shoot_count": 64,
  "auto_resolution": true,
  "dealias": false,
  "jobs": 0,
  "derham_samples": 100,
  "emit_plots": false
}
)";

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"whs: Morse complexes and deformed Hodge spectra on flat tori"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::vector<double> t_override;
    int seed_override = -1;
    int jobs_override = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "config file (JSON)")->required();
        sub->add_option("-o,--out", out_override, "override output directory");
        sub->add_option("-t,--t", t_override, "override the t grid");
        sub->add_option("--seed", seed_override, "override the RNG seed");
        sub->add_option("--jobs", jobs_override, "worker count (0 = hardware)");
    };

    CLI::App* sc_crit = app.add_subcommand("critical-points", "find and classify Cr(h)");
    CLI::App* sc_complex = app.add_subcommand("morse-complex",
                                              "incidence matrices and Betti numbers");
    CLI::App* sc_derham = app.add_subcommand("derham-check", "operator identity residuals");
    CLI::App* sc_gap = app.add_subcommand("gap-scan", "low spectra of the deformed Laplacian");
    CLI::App* sc_cmp = app.add_subcommand("whs-compare",
                                          "comparison matrices against the Morse basis");
    CLI::App* sc_all = app.add_subcommand("all", "full pipeline");
    CLI::App* sc_tpl = app.add_subcommand("template", "print an example config");
    for (CLI::App* sc : {sc_crit, sc_complex, sc_derham, sc_gap, sc_cmp, sc_all})
        add_common(sc);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sc_tpl->parsed()) {
            std::cout << kTemplate;
            return 0;
        }
        whs::ExperimentConfig cfg =
            load_config(config_path, out_override, t_override, seed_override, jobs_override);
        nlohmann::json result;
        if (sc_crit->parsed()) result = whs::run_critical_points(cfg);
        if (sc_complex->parsed()) result = whs::run_morse_complex(cfg);
        if (sc_derham->parsed()) result = whs::run_derham_check(cfg);
        if (sc_gap->parsed()) result = whs::run_gap_scan(cfg);
        if (sc_cmp->parsed()) result = whs::run_whs_compare(cfg);
        if (sc_all->parsed()) result = whs::run_all(cfg);

        // integrity gates surface as nonzero exits
        if (sc_derham->parsed() && !result.value("pass", true)) {
            std::cerr << R"({"error":"derham_check_failed","message":"identity residuals above tolerance"})"
                      << "\n";
            return 2;
        }
        if (sc_gap->parsed() && !result.value("small_counts_match_census", true)) {
            std::cerr << R"({"error":"gap_not_open","message":"small cluster does not match the critical census"})"
                      << "\n";
            return 3;
        }
        std::cout << result.dump(2) << "\n";
        return 0;
    } catch (const whs::Error& e) {
        nlohmann::json err{{"error", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
