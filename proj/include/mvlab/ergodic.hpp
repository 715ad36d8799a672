#ifndef MVLAB_ERGODIC_HPP
#define MVLAB_ERGODIC_HPP

#include <cstdint>
#include <vector>

#include "mvlab/lyapunov.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/particle.hpp"

namespace mvlab {

struct InvariantOptions {
    double dt = 1e-3;
    bool taming = true;
    int workers = 1;
    int assignment_cap = 256;
    int bootstrap_pairs = 24;
    bool cross_check = true;     // second seed + quasi-distance comparison
    Eigen::VectorXd x0;          // empty: zeros
};

struct InvariantEstimate {
    EmpiricalMeasure measure;
    double seed_distance = 0;      // quasi-distance between the two seed estimates
    double bootstrap_spread = 0;   // same-law resampling noise floor
    bool warned_disagreement = false;
    bool warned_short_burn_in = false;
};

// Ensemble snapshot after burn-in as the invariant-measure estimate.
InvariantEstimate estimate_invariant(const SpectralModel& model, const LyapunovSpec& V,
                                     double burn_in, int n_samples, std::uint64_t seed,
                                     const InvariantOptions& opts = {});

struct MixingOptions {
    double dt = 1e-3;
    bool taming = true;
    int workers = 1;
    int assignment_cap = 256;
    int bootstrap = 8;
    int stride = 0;                // 0: engine default
    bool require_fit = true;       // throw InsufficientSignalError when no usable window
    double expected_rate = -1;     // < 0: no pass/fail rate comparison
    double rate_tol = 0.1;         // relative
};

struct MixingReport {
    std::vector<double> times;
    std::vector<double> pi_v;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<int> fit_window_flag;
    double delta_hat = 0;
    double prefactor = 0;   // exp(intercept) of the log-linear fit
    bool fit_attempted = false;
    bool pass = false;
};

// Synchronous-coupling decay of the assignment quasi-distance between nu0 and
// the mu* estimate; fits log Pi_V against t on the pre-noise-floor window.
MixingReport fit_mixing_rate(const SpectralModel& model, const LyapunovSpec& V,
                             ParticleEnsemble nu0, ParticleEnsemble mu_star, double T,
                             std::uint64_t seed, const MixingOptions& opts = {});

struct DecayCheckReport {
    std::vector<double> times;
    std::vector<double> ev;         // Monte Carlo E V(c u(t))
    std::vector<double> ev_se;
    std::vector<double> bound;      // V(cx) e^{-c* d* t} + d0/(c* d*)
    std::vector<double> gen_margin; // mean LV + d* mean V - d0 (should be <= 0)
    std::vector<double> gen_se;
    bool moment_pass = false;
    bool generator_pass = false;
    bool pass = false;
};

struct DecayCheckOptions {
    double dt = 1e-3;
    bool taming = true;
    int workers = 1;
    int n_particles = 256;
    int grid_points = 9;
};

DecayCheckReport lyapunov_decay_check(const SpectralModel& model, const LyapunovSpec& V,
                                      const Eigen::VectorXd& x0, double T, int replicas,
                                      std::uint64_t seed, const DecayCheckOptions& opts = {});

struct MixingBoundOptions {
    double dt = 1e-3;
    bool taming = true;
    int workers = 1;
    double burn_in = 20;
    double m_cap = 2.0;
    int assignment_cap = 256;
    bool check_second_seed = true;
};

struct MixingBoundReport {
    double prefactor = 0;       // delta0 / (c* delta* (1 - e^{-t0 c* delta*}))
    double nu_v = 0;            // int V(cx) nu(dx)
    double delta_hat = 0;
    double m_hat = 0;           // smallest M making the bound hold on the window
    double m_hat_second_seed = 0;
    bool stable = false;
    bool trivially_satisfied = false;  // left side at noise floor from the start
    bool pass = false;
    MixingReport mixing;
};

// Theorem-shape check: Pi_V(P_t nu, mu*) <= M e^{-delta t} [prefactor + int V(cx) nu(dx)].
MixingBoundReport mixing_bound_check(const SpectralModel& model, const LyapunovSpec& V,
                                     const ParticleEnsemble& nu0, double t0, double T,
                                     std::uint64_t seed, const MixingBoundOptions& opts = {});

// Prefactor arithmetic alone (used by reports and tests).
double mixing_prefactor(const LyapunovSpec& V, double t0);

}  // namespace mvlab

#endif
