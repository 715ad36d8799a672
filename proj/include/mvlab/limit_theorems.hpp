#ifndef MVLAB_LIMIT_THEOREMS_HPP
#define MVLAB_LIMIT_THEOREMS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/lyapunov.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/particle.hpp"

namespace mvlab {

// Observable with the bounded increasing weight profile used for norm
// estimates; the mean target, when known, is declared rather than estimated.
struct ObservableSpec {
    std::function<double(const Eigen::VectorXd&)> phi;
    std::function<double(double)> weight_h = default_weight();
    std::optional<double> declared_mean;
    std::string name = "phi";

    static std::function<double(double)> default_weight();  // 2 - 1/(1+r)
    static ObservableSpec coordinate(int j, double mean = 0);
    static ObservableSpec norm_sq();
    static ObservableSpec constant(double value);
    static ObservableSpec scaled(const ObservableSpec& base, double factor);
};

// One tagged (one-body) path; the law is supplied by a background ensemble.
struct TaggedTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
};

struct TaggedOptions {
    double dt = 1e-2;
    bool taming = true;
    int workers = 1;
    int n_background = 256;
};

TaggedTrajectory simulate_tagged(const SpectralModel& model, const Eigen::VectorXd& x0, double T,
                                 std::uint64_t seed, const TaggedOptions& opts = {});

// psi_t = (1/t) sum Phi(u(s)) dt by left-endpoint quadrature; returned at the
// trajectory times after 0.
std::vector<double> time_average(const TaggedTrajectory& traj, const ObservableSpec& obs);

struct SllnReport {
    std::vector<double> times;
    std::vector<double> moment;  // E |psi_t - (Phi, mu*)|^{2k}
    std::vector<double> moment_ci;
    double slope = 0;
    double slope_ci_low = 0;
    double slope_ci_high = 0;
    bool exact_zero = false;
    int moment_order = 1;
};

struct SllnOptions {
    double dt = 1e-2;
    bool taming = true;
    int workers = 1;
    int n_background = 256;
    Eigen::VectorXd x0;  // empty: origin
    int min_replicas = 200;
    int bootstrap = 32;
};

// Log-log slope of E|psi_t - (Phi,mu*)|^{2k} across the grid; the moment
// bound predicts slope <= -k.
SllnReport slln_moment_slope(const SpectralModel& model, const ObservableSpec& obs, int k_order,
                             const std::vector<double>& t_grid, int replicas, std::uint64_t seed,
                             const SllnOptions& opts = {});

struct Pi1Options {
    double dt = 1e-2;
    bool taming = true;
    int workers = 1;
    int n_background = 256;
    double center_tol = 0.05;
    double delta_hat = -1;  // fitted mixing rate for the tail bound, < 0: none
    double m_hat = 1.0;
    // when set, coefficients read this fixed law instead of a fresh
    // background started at x (exact along the stationary regime)
    std::optional<MeasureSummary> fixed_law;
};

struct Pi1Estimate {
    double value = 0;
    double std_error = 0;
    double tail_bound = 0;
    double horizon = 0;
};

// Monte Carlo Pi_1[Phi](x) = int_0^H E Phi(u(t;x)) dt with the declared mean
// removed; mu_star, when given, certifies centering.
Pi1Estimate poisson_pi1(const SpectralModel& model, const ObservableSpec& obs,
                        const Eigen::VectorXd& x, double horizon, int replicas,
                        std::uint64_t seed, const Pi1Options& opts = {},
                        const EmpiricalMeasure* mu_star = nullptr);

struct LambdaOptions {
    double dt = 1e-2;
    bool taming = true;
    int workers = 1;
    double horizon = 8.0;
    int x_samples = 64;
    int pi1_replicas = 48;   // per half-estimate at the sampled points
    int pi2_paths = 24;      // unit-time paths per sampled point
    int inner_replicas = 24; // per half-estimate at the path endpoints
    double center_tol = 0.05;
};

struct LambdaEstimates {
    double direct = 0;    // int Pi_2 d mu*
    double identity = 0;  // 2 int Phi Pi_1[Phi] d mu*
    double direct_se = 0;
    double identity_se = 0;
};

// Two routes to the asymptotic variance Lambda^2, cross-validating the
// Poisson-equation identity.
LambdaEstimates pi2_and_lambda(const SpectralModel& model, const ObservableSpec& obs,
                               const EmpiricalMeasure& mu_star, std::uint64_t seed,
                               const LambdaOptions& opts = {});

struct CltReport {
    double lambda_sq_direct = 0;
    double lambda_sq_identity = 0;
    std::vector<double> times;
    std::vector<double> ks;
    std::vector<double> ks_ci;
    double lambda_hat = 0;         // sqrt of the identity estimate
    double decay_exponent = 0;
    bool lambda_zero_branch = false;
    bool pass = false;
};

struct CltOptions {
    double dt = 1e-2;
    bool taming = true;
    int workers = 1;
    int n_background = 256;
    Eigen::VectorXd x0;
    double burn_in = 20;     // for the internal mu* estimate
    int mu_star_samples = 512;
    double ks_tol = 0.05;
    int min_replicas = 1000;
    double lambda_zero_tol = 1e-8;
    int bootstrap = 24;
    LambdaOptions lambda;
};

// Kolmogorov distance of t^{-1/2} int_0^t Phi(u) ds to N(0, Lambda^2) across
// the grid (weighted distance to the unit step when Lambda ~ 0), with the
// fitted log-log decay exponent.
CltReport clt_ks_check(const SpectralModel& model, const ObservableSpec& obs,
                       const std::vector<double>& t_grid, int replicas, std::uint64_t seed,
                       const CltOptions& opts = {});

// Mean of sup_{t <= T} exp(c1 V(u(t))) per horizon; finite, slowly growing
// values indicate the exponential-moment bound shape holds.
std::vector<double> exp_moment_probe(const SpectralModel& model, const LyapunovSpec& V, double c1,
                                     const std::vector<double>& horizons, int replicas,
                                     std::uint64_t seed, double dt = 1e-2, int workers = 1);

}  // namespace mvlab

#endif
