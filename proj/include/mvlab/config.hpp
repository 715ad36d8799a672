#ifndef MVLAB_CONFIG_HPP
#define MVLAB_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/limit_theorems.hpp"
#include "mvlab/lyapunov.hpp"
#include "mvlab/model.hpp"

namespace mvlab {

// Fully-defaulted experiment description parsed from a flat key = value file
// (see README for the schema). All numeric fields are validated against their
// documented ranges; violations carry the mathematical condition they break.
struct ExperimentConfig {
    std::string kind;  // simulate | coupling | mixing | slln | clt | selftest
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";

    // model
    std::string model_name = "mf-ou";
    int k = 1;
    double nu = 0;
    double a = 1.0;
    double b = 0.0;
    double sigma = 1.0;
    double hol_c = 0.5;
    double hol_alpha = 0.6;
    double hol_sigma0 = 0.4;
    double hol_sigma1 = 0.4;
    double hol_beta = 0.8;
    double x_cap = 100.0;
    std::string custom_drift;  // term tables for the custom family
    std::string custom_diff;
    std::vector<std::string> custom_drift_per_mode;
    std::vector<std::string> custom_diff_per_mode;
    double custom_alpha = 1.0;
    double custom_beta = 1.0;

    // engine
    int n_particles = 1000;
    double dt = 1e-3;
    double dt_max = 1e-2;
    double T = 10.0;
    double burn_in = 20.0;
    bool taming = true;
    int replicas = 200;
    double x0 = 0.0;  // replicated across modes

    // lyapunov
    std::string lyap_profile = "squared";  // squared | power
    double lyap_power = 2.0;
    double delta = 0.0;
    double delta_star = 2.0;
    double delta0 = 1.0;
    double lyap_c = 1.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double kappa = 1.0;

    // observable
    std::string observable = "coord:1";
    double observable_mean = 0.0;

    // mixing
    double mixing_t0 = 1.0;
    double mixing_expected_rate = -1.0;
    double mixing_rate_tol = 0.1;
    double mixing_m_cap = 2.0;
    double mixing_x0 = 2.0;

    // coupling
    std::vector<double> coupling_theta_list = {0.2, 0.1, 0.05};
    double coupling_vartheta = 0.25;
    double coupling_ell = 0.03;
    double coupling_radius = 8.0;
    double coupling_T = 2.0;
    int coupling_n_particles = 32;
    int coupling_mollify_level = 0;  // 0: auto per theta* row
    double coupling_g_min = 1e-6;
    bool coupling_per_replica = false;

    // slln
    int slln_k = 1;
    std::vector<double> slln_t_grid = {10, 20, 40, 80, 160};
    double slln_slope_tol = 0.15;
    double slln_dt = 1e-2;

    // clt
    std::vector<double> clt_t_grid = {25, 50, 100, 200};
    double clt_ks_tol = 0.05;
    double clt_dt = 1e-2;

    std::vector<std::string> warnings;  // non-fatal validator notes
};

struct ConfigViolation {
    std::string key;
    std::string message;
};

// Parse + validate; throws ConfigError listing every violation.
ExperimentConfig validate_config(const std::filesystem::path& path);
ExperimentConfig config_from_text(const std::string& text);

// Normalized echo: every effective key with its value, schema order.
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg);
std::string config_echo_text(const ExperimentConfig& cfg);

SpectralModel build_model(const ExperimentConfig& cfg);
LyapunovSpec build_lyapunov(const ExperimentConfig& cfg);
ObservableSpec build_observable(const ExperimentConfig& cfg);

// Term-table parser for the custom coefficient family; also returns the mean
// coupling gain when a `mean` term is present.
std::pair<std::vector<ScalarTerm>, double> parse_terms(const std::string& text);

}  // namespace mvlab

#endif
