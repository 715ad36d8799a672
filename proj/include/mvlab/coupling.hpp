#ifndef MVLAB_COUPLING_HPP
#define MVLAB_COUPLING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mvlab/model.hpp"
#include "mvlab/noise.hpp"

namespace mvlab {

struct CouplingConfig {
    double theta_star = 0.1;   // difference threshold scale
    double vartheta = 0.25;    // gain exponent, in (0, alpha ^ (2 beta - 1))
    double ell = 0.03;         // tail exponent
    double radius_R = 8.0;     // ball whose exit defines tau_1
    double horizon_T = 2.0;
    int mollify_level = 1;
    int replicas = 1;

    int n_particles = 32;
    double dt = 1e-3;
    bool taming = true;
    double g_min = 1e-6;
    double envelope_window = 10.0;
    int envelope_grid = 4001;
    int series_stride = 10;

    double control_gain() const;  // zeta = theta_star^(vartheta - 1)
    void validate(const AssumptionConstants& c) const;
};

struct CouplingReplica {
    double sup_difference = 0;               // sup of RMS particle difference on [0, tau1 ^ T]
    double tau = 0;                          // first crossing of 2 theta*, inf if never
    double tau1 = 0;                         // first ball exit of u, inf if never
    double control_energy = 0;               // sum dt * ||g^-1 zeta (u - u*)||^2
    double control_energy_raw = 0;           // same without the zeta^2 factor
    bool exceeded = false;                   // sup >= theta*^(1+ell)
    std::vector<double> v_times;             // grid of the monitored V = diff^2 series
    std::vector<double> v_series;            // truncated at tau ^ tau1 ^ T
    double drift_bound_a = 0;                // measured A: max(eta + lambda V, 0) on the window
    double qv_bound_b = 0;                   // measured B: max martingale QV rate on the window
};

struct CouplingReport {
    std::vector<CouplingReplica> replicas;
    double exceed_frequency = 0;
    double kl_estimate = 0;   // (1/2) mean control energy
    double tv_bound = 0;      // min(1, sqrt(kl/2))
    double mean_energy = 0;
    double theta_star = 0;
    double ell = 0;
    double gain = 0;
    // both readings of the energy-scale exponent (see ledger: paper symbol clash)
    double energy_scale_vartheta = 0;  // theta*^(2 vartheta)
    double energy_scale_gain = 0;      // theta*^(2 zeta)
};

// One replica of the (u, u^m, u*_m) triple: original coefficients, mollified
// coefficients with the same noise, and mollified coefficients plus the
// control drift zeta (u - u*_m) while t <= tau.
CouplingReplica run_coupling_triple(const SpectralModel& model, const SpectralModel& mollified,
                                    const CouplingConfig& cfg, const NoiseStream& noise);

CouplingReport run_coupling(const SpectralModel& model, const CouplingConfig& cfg,
                            std::uint64_t seed, int workers);

struct TailRow {
    double theta_star = 0;
    double ell = 0;
    int replicas = 0;
    double exceed_freq = 0;
    double fitted_c2 = 0;
    double r2 = 0;
    int mollify_level = 0;
    double mean_energy = 0;
};

struct TailScan {
    std::vector<TailRow> rows;
    double fitted_c2 = 0;   // from log freq ~ -c2 * theta*^(-2 ell)
    double fit_r2 = 0;
    int nonzero_rows = 0;
    bool fit_available = false;
    std::string note;
};

// Scans theta* values; by default the mollification level is chosen per row
// as the smallest ladder level whose measured coefficient gap satisfies
// max(gap_f^(1/alpha), gap_g^(1/beta)) <= theta*.
TailScan tail_scan(const SpectralModel& model, CouplingConfig base,
                   const std::vector<double>& theta_list, int replicas, std::uint64_t seed,
                   int workers, bool auto_level = true);

// Pinsker: TV <= sqrt(KL / 2), clipped at 1.
double pinsker_tv_bound(double kl);
std::pair<double, double> girsanov_tv_bound(const CouplingReport& report);  // (kl, tv)

struct EnvelopeRow {
    double r = 0;
    double freq = 0;
    double threshold = 0;  // A/lambda + sqrt(B) lambda^-delta R
};

struct EnvelopeReport {
    std::vector<EnvelopeRow> rows;
    double c1_hat = 0;
    double c2_hat = 0;
    double r2 = 0;
    bool fit_available = false;
};

// Empirical check of the concentration bound
// P( sup_t (V(t) - e^{-lambda t} V(0)) >= A/lambda + B^{1/2} lambda^{-delta} R ) <= C1 e^{-C2 R^2}.
EnvelopeReport concentration_envelope(const std::vector<std::vector<double>>& v_series,
                                      const std::vector<std::vector<double>>& v_times,
                                      double lambda, double a_const, double b_const, double delta,
                                      const std::vector<double>& r_grid);

}  // namespace mvlab

#endif
