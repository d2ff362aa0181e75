#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "whs/spectral.hpp"

namespace whs {

// One config drives every subcommand. JSON schema (version 1):
//   manifold.n, manifold.grid_res, morse (term records), t_grid, degrees,
//   tolerances.{root,eigen,quadrature}, eta, epsilon, seed, output_dir,
//   shoot_count, auto_resolution, dealias, jobs, derham_samples, emit_plots
struct ExperimentConfig {
    int version = 1;
    TorusModel manifold{1, 256};
    MorseFunctionSpec morse;
    std::vector<double> t_grid{8, 16, 24, 32};
    std::vector<int> degrees; // empty -> all 0..n
    double tol_root = 1e-12;
    double tol_eigen = 1e-8;
    double tol_quadrature = 1e-6;
    double eta = 0;     // 0 -> 0.4 x min critical distance
    double epsilon = 0; // chart radius override, same default
    uint64_t seed = 20020411;
    std::string output_dir = "out";
    int shoot_count = 64;
    bool auto_resolution = true;
    bool dealias = false;
    int jobs = 0; // 0 -> hardware
    int derham_samples = 100;
    bool emit_plots = false;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;

    std::vector<int> effective_degrees() const;
    SpectralOptions spectral_options() const;
};

// Subcommand drivers; each writes its artifacts under cfg.output_dir and
// returns the JSON summary it also stores there.
nlohmann::json run_critical_points(const ExperimentConfig& cfg);
nlohmann::json run_morse_complex(const ExperimentConfig& cfg);
nlohmann::json run_derham_check(const ExperimentConfig& cfg);
nlohmann::json run_gap_scan(const ExperimentConfig& cfg);
nlohmann::json run_whs_compare(const ExperimentConfig& cfg);
nlohmann::json run_all(const ExperimentConfig& cfg);

// built-in reference configurations (used by tests and the README examples)
ExperimentConfig reference_t1_cosine(int grid_res = 256);
ExperimentConfig reference_t1_double_well(int grid_res = 256);
ExperimentConfig reference_t1_deep_double_well(int grid_res = 256);
ExperimentConfig reference_t2_product(int grid_res = 128);

} // namespace whs
