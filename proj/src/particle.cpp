#include "mvlab/particle.hpp"

#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/parallel.hpp"

namespace mvlab {

void ParticleEnsemble::validate() const {
    if (states.rows() < 1) throw ArgumentError("ParticleEnsemble: need N >= 1");
    if (!states.allFinite()) throw ArgumentError("ParticleEnsemble: non-finite state");
    if (!(time >= 0)) throw ArgumentError("ParticleEnsemble: time must be >= 0");
}

ParticleEnsemble ParticleEnsemble::zeros(int n, int k) {
    return {Eigen::MatrixXd::Zero(n, k), 0.0};
}

ParticleEnsemble ParticleEnsemble::constant(int n, const Eigen::VectorXd& x) {
    ParticleEnsemble e;
    e.states = x.transpose().replicate(n, 1);
    return e;
}

ParticleEnsemble ParticleEnsemble::gaussian(int n, int k, const Eigen::VectorXd& mean, double sd,
                                            const NoiseStream& noise) {
    ParticleEnsemble e = zeros(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            e.states(i, j) = mean[j] + sd * noise.gaussian(static_cast<std::uint64_t>(i), 0,
                                                           static_cast<std::uint32_t>(j));
    return e;
}

MeasureSummary ensemble_summary(const ParticleEnsemble& ens) {
    MeasureSummary s;
    s.mean = ens.states.colwise().mean();
    s.second_moment = ens.states.rowwise().squaredNorm().mean();
    return s;
}

namespace {

// Particle loops stay serial below this size; thread startup would dominate.
constexpr int kParallelThreshold = 4096;

void advance(const SpectralModel& model, ParticleEnsemble& ens, const MeasureSummary& summary,
             const StepOptions& opts, const NoiseStream& noise, std::uint64_t step_index) {
    const int n = ens.n();
    const int k = ens.dim();
    const int m = model.m;
    const double dt = opts.dt;
    const double sqrt_dt = std::sqrt(dt);

    const int workers = (n >= kParallelThreshold) ? opts.workers : 1;
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        const Eigen::VectorXd x = ens.states.row(static_cast<Eigen::Index>(i));
        Eigen::VectorXd b = eval_drift(model, x, summary);
        if (opts.taming) b /= 1.0 + dt * b.norm();
        const Eigen::MatrixXd g = eval_diffusion(model, x, summary);
        Eigen::VectorXd dw(m);
        for (int c = 0; c < m; ++c)
            dw[c] = sqrt_dt * noise.gaussian(static_cast<std::uint64_t>(i), step_index,
                                             static_cast<std::uint32_t>(c));
        ens.states.row(static_cast<Eigen::Index>(i)) = (x + dt * b + g * dw).transpose();
    });
    ens.time += dt;

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) {
            const double v = ens.states(i, j);
            if (!std::isfinite(v) || std::abs(v) > opts.blowup_norm)
                throw BlowUpError(i, ens.time);
        }
    }
}

int effective_stride(const SimulateOptions& opts) {
    if (opts.stride > 0) return opts.stride;
    return std::max(1, static_cast<int>(std::lround(0.1 / opts.dt)));
}

}  // namespace

void step_tamed_em_inplace(const SpectralModel& model, ParticleEnsemble& ens,
                           const StepOptions& opts, const NoiseStream& noise,
                           std::uint64_t step_index) {
    if (!(opts.dt > 0)) throw ArgumentError("step_tamed_em: dt must be > 0");
    if (opts.dt > opts.dt_max) throw ArgumentError("step_tamed_em: dt exceeds configured max");
    advance(model, ens, ensemble_summary(ens), opts, noise, step_index);
}

ParticleEnsemble step_tamed_em(const SpectralModel& model, const ParticleEnsemble& ens, double dt,
                               const NoiseStream& noise, bool taming, std::uint64_t step_index) {
    ParticleEnsemble out = ens;
    StepOptions opts;
    opts.dt = dt;
    opts.dt_max = std::max(dt, opts.dt_max);  // single-step helper trusts its argument
    opts.taming = taming;
    step_tamed_em_inplace(model, out, opts, noise, step_index);
    return out;
}

Trajectory simulate(const SpectralModel& model, ParticleEnsemble init, const SimulateOptions& opts,
                    const NoiseStream& noise, const std::vector<Observer>& observers) {
    if (!(opts.T > 0)) throw ArgumentError("simulate: T must be > 0");
    init.validate();
    StepOptions step;
    step.dt = opts.dt;
    step.dt_max = opts.dt_max;
    step.taming = opts.taming;
    step.workers = opts.workers;

    const auto n_steps = static_cast<std::uint64_t>(std::llround(opts.T / opts.dt));
    const int stride = effective_stride(opts);

    Trajectory traj;
    auto record = [&](const ParticleEnsemble& ens) {
        traj.times.push_back(ens.time);
        if (opts.keep_snapshots) traj.snapshots.push_back(ens.states);
        for (const auto& obs : observers) traj.series[obs.name].push_back(obs.fn(ens));
    };
    record(init);
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        step_tamed_em_inplace(model, init, step, noise, s);
        if ((s + 1) % static_cast<std::uint64_t>(stride) == 0 || s + 1 == n_steps) record(init);
    }
    return traj;
}

SynchronousPair simulate_synchronous_pair(const SpectralModel& model, ParticleEnsemble a,
                                          ParticleEnsemble b, const SimulateOptions& opts,
                                          const NoiseStream& noise) {
    if (a.n() != b.n() || a.dim() != b.dim())
        throw ArgumentError("simulate_synchronous_pair: ensembles must share N and k");
    if (!(opts.T > 0)) throw ArgumentError("simulate_synchronous_pair: T must be > 0");
    StepOptions step;
    step.dt = opts.dt;
    step.dt_max = opts.dt_max;
    step.taming = opts.taming;
    step.workers = opts.workers;

    const auto n_steps = static_cast<std::uint64_t>(std::llround(opts.T / opts.dt));
    const int stride = effective_stride(opts);

    SynchronousPair out;
    auto record = [&]() {
        out.times.push_back(a.time);
        out.mean_sq_diff.push_back((a.states - b.states).rowwise().squaredNorm().mean());
        if (opts.keep_snapshots) {
            out.snapshots_a.push_back(a.states);
            out.snapshots_b.push_back(b.states);
        }
    };
    record();
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        // pre-step summaries for both systems, then the same noise addresses
        const MeasureSummary sum_a = ensemble_summary(a);
        const MeasureSummary sum_b = ensemble_summary(b);
        advance(model, a, sum_a, step, noise, s);
        advance(model, b, sum_b, step, noise, s);
        if ((s + 1) % static_cast<std::uint64_t>(stride) == 0 || s + 1 == n_steps) record();
    }
    out.final_a = a;
    out.final_b = b;
    return out;
}

double lyapunov_generator(const SpectralModel& model, const LyapunovSpec& V,
                          const Eigen::VectorXd& x, const MeasureSummary& mu) {
    const Eigen::VectorXd b = eval_drift(model, x, mu);
    const Eigen::MatrixXd g = eval_diffusion(model, x, mu);
    return b.dot(V.gradient(x)) + V.half_hessian_trace(x, g);
}

}  // namespace mvlab
