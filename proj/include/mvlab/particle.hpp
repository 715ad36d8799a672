#ifndef MVLAB_PARTICLE_HPP
#define MVLAB_PARTICLE_HPP

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mvlab/lyapunov.hpp"
#include "mvlab/model.hpp"
#include "mvlab/noise.hpp"

namespace mvlab {

// N interacting particles in mode space; the empirical law stands in for the
// law of the state.
struct ParticleEnsemble {
    Eigen::MatrixXd states;  // N x k
    double time = 0;

    int n() const { return static_cast<int>(states.rows()); }
    int dim() const { return static_cast<int>(states.cols()); }
    void validate() const;

    static ParticleEnsemble zeros(int n, int k);
    static ParticleEnsemble constant(int n, const Eigen::VectorXd& x);
    // iid N(mean, sd^2 I) rows drawn from the stream (step address 0).
    static ParticleEnsemble gaussian(int n, int k, const Eigen::VectorXd& mean, double sd,
                                     const NoiseStream& noise);
};

MeasureSummary ensemble_summary(const ParticleEnsemble& ens);

struct StepOptions {
    double dt = 1e-3;
    double dt_max = 1e-2;
    bool taming = true;
    int workers = 1;
    double blowup_norm = 1e12;
};

// One tamed Euler-Maruyama step. All particles advance with the same pre-step
// empirical summary; noise increments are addressed by (particle, step_index).
void step_tamed_em_inplace(const SpectralModel& model, ParticleEnsemble& ens,
                           const StepOptions& opts, const NoiseStream& noise,
                           std::uint64_t step_index);

ParticleEnsemble step_tamed_em(const SpectralModel& model, const ParticleEnsemble& ens, double dt,
                               const NoiseStream& noise, bool taming,
                               std::uint64_t step_index = 0);

struct Observer {
    std::string name;
    std::function<double(const ParticleEnsemble&)> fn;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> snapshots;  // empty when keep_snapshots = false
    std::map<std::string, std::vector<double>> series;
};

struct SimulateOptions {
    double T = 1.0;
    double dt = 1e-3;
    bool taming = true;
    int workers = 1;
    int stride = 0;  // 0: max(1, round(0.1 / dt))
    bool keep_snapshots = true;
    double dt_max = 1e-2;
};

Trajectory simulate(const SpectralModel& model, ParticleEnsemble init, const SimulateOptions& opts,
                    const NoiseStream& noise, const std::vector<Observer>& observers = {});

struct SynchronousPair {
    std::vector<double> times;
    std::vector<double> mean_sq_diff;  // (1/N) sum ||x_i^A - x_i^B||^2
    ParticleEnsemble final_a;
    ParticleEnsemble final_b;
    std::vector<Eigen::MatrixXd> snapshots_a;
    std::vector<Eigen::MatrixXd> snapshots_b;
};

// Both ensembles driven by the identical noise stream; each uses its own
// empirical summary.
SynchronousPair simulate_synchronous_pair(const SpectralModel& model, ParticleEnsemble a,
                                          ParticleEnsemble b, const SimulateOptions& opts,
                                          const NoiseStream& noise);

// LV(x) = <nu Lambda x + f(x,mu), grad V(x)> + (1/2) tr(Hess V(x) g g^T).
double lyapunov_generator(const SpectralModel& model, const LyapunovSpec& V,
                          const Eigen::VectorXd& x, const MeasureSummary& mu);

}  // namespace mvlab

#endif
