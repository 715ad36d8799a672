#include "mvlab/limit_theorems.hpp"

#include <algorithm>
#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/parallel.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

std::function<double(double)> ObservableSpec::default_weight() {
    return [](double r) { return 2.0 - 1.0 / (1.0 + r); };
}

ObservableSpec ObservableSpec::coordinate(int j, double mean) {
    ObservableSpec o;
    o.phi = [j](const Eigen::VectorXd& x) { return x[j]; };
    o.declared_mean = mean;
    o.name = "coord_" + std::to_string(j + 1);
    return o;
}

ObservableSpec ObservableSpec::norm_sq() {
    ObservableSpec o;
    o.phi = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    o.name = "norm_sq";
    return o;
}

ObservableSpec ObservableSpec::constant(double value) {
    ObservableSpec o;
    o.phi = [value](const Eigen::VectorXd&) { return value; };
    o.declared_mean = value;
    o.name = "const";
    return o;
}

ObservableSpec ObservableSpec::scaled(const ObservableSpec& base, double factor) {
    ObservableSpec o = base;
    auto inner = base.phi;
    o.phi = [inner, factor](const Eigen::VectorXd& x) { return factor * inner(x); };
    if (base.declared_mean) o.declared_mean = factor * *base.declared_mean;
    o.name = base.name + "_scaled";
    return o;
}

namespace {

// Law of the one-body process along the run: a fixed summary, or the
// empirical summary of a background ensemble recorded before every step.
struct LawSeries {
    bool fixed = false;
    MeasureSummary fixed_summary;
    std::vector<Eigen::VectorXd> means;
    std::vector<double> second_moments;

    MeasureSummary at(std::uint64_t s) const {
        if (fixed) return fixed_summary;
        MeasureSummary m;
        m.mean = means[s];
        m.second_moment = second_moments[s];
        return m;
    }
};

LawSeries background_law(const SpectralModel& model, const Eigen::VectorXd& x0,
                         std::uint64_t n_steps, double dt, bool taming, int n_background,
                         const NoiseStream& stream, int workers) {
    LawSeries law;
    law.means.reserve(n_steps);
    law.second_moments.reserve(n_steps);
    ParticleEnsemble ens = x0.size() == 0 ? ParticleEnsemble::zeros(n_background, model.k)
                                          : ParticleEnsemble::constant(n_background, x0);
    StepOptions step;
    step.dt = dt;
    step.taming = taming;
    step.workers = workers;
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        const MeasureSummary sum = ensemble_summary(ens);
        law.means.push_back(sum.mean);
        law.second_moments.push_back(sum.second_moment);
        step_tamed_em_inplace(model, ens, step, stream, s);
    }
    return law;
}

LawSeries fixed_law_series(MeasureSummary summary) {
    LawSeries law;
    law.fixed = true;
    summary.sample_handle = nullptr;
    law.fixed_summary = std::move(summary);
    return law;
}

// One tamed EM step of the tagged particle under the supplied law.
Eigen::VectorXd tagged_step(const SpectralModel& model, const Eigen::VectorXd& x,
                            const MeasureSummary& sum, double dt, bool taming,
                            const NoiseStream& stream, std::uint64_t s) {
    Eigen::VectorXd b = eval_drift(model, x, sum);
    if (taming) b /= 1.0 + dt * b.norm();
    const Eigen::MatrixXd g = eval_diffusion(model, x, sum);
    Eigen::VectorXd dw(model.m);
    const double sqrt_dt = std::sqrt(dt);
    for (int c = 0; c < model.m; ++c)
        dw[c] = sqrt_dt * stream.gaussian(0, s, static_cast<std::uint32_t>(c));
    Eigen::VectorXd next = x + dt * b + g * dw;
    if (!next.allFinite()) throw BlowUpError(0, static_cast<double>(s + 1) * dt);
    return next;
}

double effective_phi(const ObservableSpec& obs, const Eigen::VectorXd& x) {
    return obs.phi(x) - obs.declared_mean.value_or(0.0);
}

void check_centering(const ObservableSpec& obs, const EmpiricalMeasure& mu_star, double tol) {
    std::vector<double> vals(static_cast<std::size_t>(mu_star.size()));
    for (int i = 0; i < mu_star.size(); ++i)
        vals[static_cast<std::size_t>(i)] = effective_phi(obs, mu_star.points().row(i));
    const double est = mean(vals);
    const double scale = vals.size() > 1 ? stddev(vals) : 0.0;
    // allow the mu* sample's own Monte Carlo error on top of the tolerance
    const double threshold =
        tol * std::max(1.0, scale) + 3.0 * scale / std::sqrt(static_cast<double>(vals.size()));
    if (std::abs(est) > threshold)
        throw CenteringError("observable " + obs.name + " is not centered against mu*: mean " +
                             std::to_string(est) + " exceeds tolerance " +
                             std::to_string(threshold));
}

}  // namespace

TaggedTrajectory simulate_tagged(const SpectralModel& model, const Eigen::VectorXd& x0, double T,
                                 std::uint64_t seed, const TaggedOptions& opts) {
    if (!(T > 0)) throw ArgumentError("simulate_tagged: T must be > 0");
    const auto n_steps = static_cast<std::uint64_t>(std::llround(T / opts.dt));
    NoiseStream root(seed);
    const LawSeries law = background_law(model, x0, n_steps, opts.dt, opts.taming,
                                         opts.n_background, root.substream(0xBACC6DULL),
                                         opts.workers);
    TaggedTrajectory traj;
    Eigen::VectorXd x = x0.size() == 0 ? Eigen::VectorXd::Zero(model.k) : x0;
    const NoiseStream tag = root.substream(0x7A66EDULL);
    traj.times.push_back(0);
    traj.states.push_back(x);
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        x = tagged_step(model, x, law.at(s), opts.dt, opts.taming, tag, s);
        traj.times.push_back(static_cast<double>(s + 1) * opts.dt);
        traj.states.push_back(x);
    }
    return traj;
}

std::vector<double> time_average(const TaggedTrajectory& traj, const ObservableSpec& obs) {
    if (traj.times.size() < 2) throw ArgumentError("time_average: empty trajectory");
    const double dt = traj.times[1] - traj.times[0];
    for (std::size_t i = 1; i < traj.times.size(); ++i)
        if (std::abs(traj.times[i] - traj.times[i - 1] - dt) > 1e-9)
            throw ArgumentError("time_average: trajectory grid must be uniform");
    std::vector<double> psi;
    psi.reserve(traj.times.size() - 1);
    double acc = 0;
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        acc += obs.phi(traj.states[i - 1]) * dt;
        psi.push_back(acc / traj.times[i]);
    }
    return psi;
}

SllnReport slln_moment_slope(const SpectralModel& model, const ObservableSpec& obs, int k_order,
                             const std::vector<double>& t_grid, int replicas, std::uint64_t seed,
                             const SllnOptions& opts) {
    if (k_order < 1) throw ArgumentError("slln_moment_slope: moment order must be >= 1");
    if (replicas < opts.min_replicas)
        throw ArgumentError("slln_moment_slope: need >= " + std::to_string(opts.min_replicas) +
                            " replicas");
    if (t_grid.size() < 2 || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw ArgumentError("slln_moment_slope: t grid must be sorted with >= 2 points");
    if (!obs.declared_mean)
        throw ArgumentError("slln_moment_slope: declared_mean required (estimate it first)");

    const double t_max = t_grid.back();
    const auto n_steps = static_cast<std::uint64_t>(std::llround(t_max / opts.dt));
    std::vector<std::uint64_t> grid_steps;
    for (double t : t_grid)
        grid_steps.push_back(static_cast<std::uint64_t>(std::llround(t / opts.dt)));

    NoiseStream root(seed);
    const LawSeries law = background_law(model, opts.x0, n_steps, opts.dt, opts.taming,
                                         opts.n_background, root.substream(0xBACC6DULL),
                                         opts.workers);

    const std::size_t g = t_grid.size();
    Eigen::MatrixXd errs(replicas, static_cast<Eigen::Index>(g));
    parallel_for(static_cast<std::size_t>(replicas), opts.workers, [&](std::size_t r) {
        Eigen::VectorXd x =
            opts.x0.size() == 0 ? Eigen::VectorXd::Zero(model.k) : opts.x0;
        const NoiseStream tag = root.substream(r);
        double acc = 0;
        std::size_t next = 0;
        for (std::uint64_t s = 0; s < n_steps; ++s) {
            acc += effective_phi(obs, x) * opts.dt;
            x = tagged_step(model, x, law.at(s), opts.dt, opts.taming, tag, s);
            while (next < g && grid_steps[next] == s + 1) {
                errs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(next)) =
                    acc / t_grid[next];
                ++next;
            }
        }
    });

    SllnReport rep;
    rep.times = t_grid;
    rep.moment_order = k_order;
    const double p = 2.0 * static_cast<double>(k_order);
    std::vector<std::vector<double>> pow_errs(g, std::vector<double>(static_cast<std::size_t>(replicas)));
    for (std::size_t j = 0; j < g; ++j) {
        for (int r = 0; r < replicas; ++r)
            pow_errs[j][static_cast<std::size_t>(r)] =
                std::pow(std::abs(errs(r, static_cast<Eigen::Index>(j))), p);
        rep.moment.push_back(mean(pow_errs[j]));
        const BootstrapCI ci = bootstrap_ci(pow_errs[j], opts.bootstrap, seed + 31 * j,
                                            [](const std::vector<double>& v) { return mean(v); });
        rep.moment_ci.push_back(ci.spread);
    }

    rep.exact_zero = true;
    for (double mval : rep.moment) rep.exact_zero = rep.exact_zero && mval < 1e-280;
    if (rep.exact_zero) {
        rep.slope = 0;
        return rep;
    }

    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < g; ++j) {
        lx.push_back(std::log(t_grid[j]));
        ly.push_back(std::log(std::max(rep.moment[j], 1e-300)));
    }
    rep.slope = fit_line(lx, ly).slope;

    // slope CI: bootstrap across replicas, refitting each time
    std::vector<double> slopes;
    NoiseStream draws(seed, 0x510B3ULL);
    for (int b = 0; b < opts.bootstrap; ++b) {
        std::vector<double> by(g, 0.0);
        for (int r = 0; r < replicas; ++r) {
            const auto idx = static_cast<Eigen::Index>(
                draws.uniform(static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(r), 0) *
                replicas);
            const auto safe = std::min<Eigen::Index>(idx, replicas - 1);
            for (std::size_t j = 0; j < g; ++j)
                by[j] += std::pow(std::abs(errs(safe, static_cast<Eigen::Index>(j))), p);
        }
        std::vector<double> lyb;
        for (std::size_t j = 0; j < g; ++j)
            lyb.push_back(std::log(std::max(by[j] / replicas, 1e-300)));
        slopes.push_back(fit_line(lx, lyb).slope);
    }
    rep.slope_ci_low = percentile(slopes, 0.025);
    rep.slope_ci_high = percentile(slopes, 0.975);
    return rep;
}

namespace {

// Mean over replicas of int_0^H phi~(u(t;x)) dt, one half-estimate.
double pi1_half(const SpectralModel& model, const ObservableSpec& obs, const Eigen::VectorXd& x,
                std::uint64_t n_steps, double dt, bool taming, const LawSeries& law,
                const NoiseStream& stream, int replicas, double* phi_norm_track,
                const std::function<double(double)>& weight_h) {
    double total = 0;
    double norm_track = phi_norm_track ? *phi_norm_track : 0.0;
    for (int r = 0; r < replicas; ++r) {
        Eigen::VectorXd u = x;
        const NoiseStream tag = stream.substream(static_cast<std::uint64_t>(r));
        double acc = 0;
        for (std::uint64_t s = 0; s < n_steps; ++s) {
            const double val = effective_phi(obs, u);
            acc += val * dt;
            if (phi_norm_track && (s & 0xF) == 0)
                norm_track = std::max(norm_track, std::abs(val) / weight_h(u.norm()));
            u = tagged_step(model, u, law.at(s), dt, taming, tag, s);
        }
        total += acc;
    }
    if (phi_norm_track) *phi_norm_track = norm_track;
    return total / static_cast<double>(replicas);
}

}  // namespace

Pi1Estimate poisson_pi1(const SpectralModel& model, const ObservableSpec& obs,
                        const Eigen::VectorXd& x, double horizon, int replicas,
                        std::uint64_t seed, const Pi1Options& opts,
                        const EmpiricalMeasure* mu_star) {
    if (!(horizon > 0)) throw ArgumentError("poisson_pi1: horizon must be > 0");
    if (replicas < 2) throw ArgumentError("poisson_pi1: need >= 2 replicas");
    if (mu_star) check_centering(obs, *mu_star, opts.center_tol);

    const auto n_steps = static_cast<std::uint64_t>(std::llround(horizon / opts.dt));
    NoiseStream root(seed);
    const LawSeries law = opts.fixed_law
                              ? fixed_law_series(*opts.fixed_law)
                              : background_law(model, x, n_steps, opts.dt, opts.taming,
                                               opts.n_background,
                                               root.substream(0xBACC6DULL), opts.workers);

    std::vector<double> integrals(static_cast<std::size_t>(replicas));
    std::vector<double> norm_slots(static_cast<std::size_t>(replicas), 0.0);
    parallel_for(static_cast<std::size_t>(replicas), opts.workers, [&](std::size_t r) {
        Eigen::VectorXd u = x;
        const NoiseStream tag = root.substream(r);
        double acc = 0;
        double ntrack = 0;
        for (std::uint64_t s = 0; s < n_steps; ++s) {
            const double val = effective_phi(obs, u);
            acc += val * opts.dt;
            if ((s & 0xF) == 0)
                ntrack = std::max(ntrack, std::abs(val) / obs.weight_h(u.norm()));
            u = tagged_step(model, u, law.at(s), opts.dt, opts.taming, tag, s);
        }
        integrals[r] = acc;
        norm_slots[r] = ntrack;
    });

    Pi1Estimate est;
    est.value = mean(integrals);
    est.std_error = integrals.size() > 1
                        ? stddev(integrals) / std::sqrt(static_cast<double>(integrals.size()))
                        : 0.0;
    est.horizon = horizon;
    if (opts.delta_hat > 0) {
        const double phi_norm = *std::max_element(norm_slots.begin(), norm_slots.end());
        est.tail_bound =
            opts.m_hat * phi_norm * std::exp(-opts.delta_hat * horizon) / opts.delta_hat;
    }
    return est;
}

LambdaEstimates pi2_and_lambda(const SpectralModel& model, const ObservableSpec& obs,
                               const EmpiricalMeasure& mu_star, std::uint64_t seed,
                               const LambdaOptions& opts) {
    check_centering(obs, mu_star, opts.center_tol);
    const EmpiricalMeasure pts = mu_star.subsample(opts.x_samples);
    const int n_x = pts.size();
    const auto h_steps = static_cast<std::uint64_t>(std::llround(opts.horizon / opts.dt));
    const auto unit_steps = static_cast<std::uint64_t>(std::llround(1.0 / opts.dt));

    // the x_j are mu*-distributed, so the law of every path here is the
    // stationary one; coefficients read the fixed mu* summary
    const LawSeries law = fixed_law_series(mu_star.summary());

    NoiseStream root(seed);
    std::vector<double> identity_terms(static_cast<std::size_t>(n_x));
    std::vector<double> direct_terms(static_cast<std::size_t>(n_x));

    parallel_for(static_cast<std::size_t>(n_x), opts.workers, [&](std::size_t j) {
        const Eigen::VectorXd xj = pts.points().row(static_cast<Eigen::Index>(j));
        const NoiseStream site = root.substream(j);
        const double pi1_a = pi1_half(model, obs, xj, h_steps, opts.dt, opts.taming, law,
                                      site.substream(1), opts.pi1_replicas, nullptr, obs.weight_h);
        const double pi1_b = pi1_half(model, obs, xj, h_steps, opts.dt, opts.taming, law,
                                      site.substream(2), opts.pi1_replicas, nullptr, obs.weight_h);
        identity_terms[j] = 2.0 * effective_phi(obs, xj) * 0.5 * (pi1_a + pi1_b);

        double prod_acc = 0;
        for (int path = 0; path < opts.pi2_paths; ++path) {
            const NoiseStream ps = site.substream(100 + static_cast<std::uint64_t>(path));
            Eigen::VectorXd u = xj;
            double integral = 0;
            for (std::uint64_t s = 0; s < unit_steps; ++s) {
                integral += effective_phi(obs, u) * opts.dt;
                u = tagged_step(model, u, law.at(s), opts.dt, opts.taming, ps.substream(0), s);
            }
            const double inner_a =
                pi1_half(model, obs, u, h_steps, opts.dt, opts.taming, law, ps.substream(1),
                         opts.inner_replicas, nullptr, obs.weight_h);
            const double inner_b =
                pi1_half(model, obs, u, h_steps, opts.dt, opts.taming, law, ps.substream(2),
                         opts.inner_replicas, nullptr, obs.weight_h);
            prod_acc += (integral + inner_a - pi1_a) * (integral + inner_b - pi1_b);
        }
        direct_terms[j] = prod_acc / static_cast<double>(opts.pi2_paths);
    });

    LambdaEstimates est;
    est.identity = mean(identity_terms);
    est.direct = mean(direct_terms);
    if (n_x > 1) {
        est.identity_se = stddev(identity_terms) / std::sqrt(static_cast<double>(n_x));
        est.direct_se = stddev(direct_terms) / std::sqrt(static_cast<double>(n_x));
    }
    return est;
}

CltReport clt_ks_check(const SpectralModel& model, const ObservableSpec& obs,
                       const std::vector<double>& t_grid, int replicas, std::uint64_t seed,
                       const CltOptions& opts) {
    if (replicas < opts.min_replicas)
        throw StatisticalPowerError("clt_ks_check: need >= " + std::to_string(opts.min_replicas) +
                                    " replicas");
    if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw ArgumentError("clt_ks_check: t grid must be sorted and nonempty");

    NoiseStream root(seed);

    // internal stationary sample for the Lambda estimators
    ParticleEnsemble mu_ens = ParticleEnsemble::zeros(opts.mu_star_samples, model.k);
    {
        StepOptions step;
        step.dt = opts.dt;
        step.taming = opts.taming;
        step.workers = opts.workers;
        const NoiseStream bs = root.substream(0x171ULL);
        const auto steps = static_cast<std::uint64_t>(std::llround(opts.burn_in / opts.dt));
        for (std::uint64_t s = 0; s < steps; ++s)
            step_tamed_em_inplace(model, mu_ens, step, bs, s);
    }
    const EmpiricalMeasure mu_star(mu_ens.states);

    CltReport rep;
    {
        LambdaOptions lo = opts.lambda;
        lo.dt = opts.dt;
        lo.taming = opts.taming;
        lo.workers = opts.workers;
        const LambdaEstimates lam = pi2_and_lambda(model, obs, mu_star, seed + 5, lo);
        rep.lambda_sq_direct = lam.direct;
        rep.lambda_sq_identity = lam.identity;
    }
    const double lambda_sq = std::max(rep.lambda_sq_identity, 0.0);
    rep.lambda_zero_branch = lambda_sq <= opts.lambda_zero_tol;
    rep.lambda_hat = std::sqrt(lambda_sq);

    const double t_max = t_grid.back();
    const auto n_steps = static_cast<std::uint64_t>(std::llround(t_max / opts.dt));
    std::vector<std::uint64_t> grid_steps;
    for (double t : t_grid)
        grid_steps.push_back(static_cast<std::uint64_t>(std::llround(t / opts.dt)));

    const LawSeries law = background_law(model, opts.x0, n_steps, opts.dt, opts.taming,
                                         opts.n_background, root.substream(0xBACC6DULL),
                                         opts.workers);
    const std::size_t g = t_grid.size();
    Eigen::MatrixXd s_vals(replicas, static_cast<Eigen::Index>(g));
    parallel_for(static_cast<std::size_t>(replicas), opts.workers, [&](std::size_t r) {
        Eigen::VectorXd x =
            opts.x0.size() == 0 ? Eigen::VectorXd::Zero(model.k) : opts.x0;
        const NoiseStream tag = root.substream(r);
        double acc = 0;
        std::size_t next = 0;
        for (std::uint64_t s = 0; s < n_steps; ++s) {
            acc += effective_phi(obs, x) * opts.dt;
            x = tagged_step(model, x, law.at(s), opts.dt, opts.taming, tag, s);
            while (next < g && grid_steps[next] == s + 1) {
                s_vals(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(next)) = acc;
                ++next;
            }
        }
    });

    rep.times = t_grid;
    auto ks_of = [&](const std::vector<double>& z) {
        if (rep.lambda_zero_branch) return weighted_ks_to_step(z);
        const double lam = rep.lambda_hat;
        return ks_statistic(z, [lam](double v) { return norm_cdf(v / lam); });
    };
    for (std::size_t j = 0; j < g; ++j) {
        std::vector<double> z(static_cast<std::size_t>(replicas));
        for (int r = 0; r < replicas; ++r)
            z[static_cast<std::size_t>(r)] =
                s_vals(r, static_cast<Eigen::Index>(j)) / std::sqrt(t_grid[j]);
        rep.ks.push_back(ks_of(z));
        const BootstrapCI ci = bootstrap_ci(z, opts.bootstrap, seed + 71 * j,
                                            [&](const std::vector<double>& v) { return ks_of(v); });
        rep.ks_ci.push_back(ci.spread);
    }

    if (g >= 2) {
        std::vector<double> lx, ly;
        for (std::size_t j = 0; j < g; ++j) {
            if (rep.ks[j] > 0) {
                lx.push_back(std::log(t_grid[j]));
                ly.push_back(std::log(rep.ks[j]));
            }
        }
        if (lx.size() >= 2) rep.decay_exponent = fit_line(lx, ly).slope;
    }
    rep.pass = rep.ks.back() < opts.ks_tol;
    return rep;
}

std::vector<double> exp_moment_probe(const SpectralModel& model, const LyapunovSpec& V, double c1,
                                     const std::vector<double>& horizons, int replicas,
                                     std::uint64_t seed, double dt, int workers) {
    if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()))
        throw ArgumentError("exp_moment_probe: horizons must be sorted and nonempty");
    ParticleEnsemble ens = ParticleEnsemble::zeros(replicas, model.k);
    StepOptions step;
    step.dt = dt;
    step.workers = workers;
    const NoiseStream stream(seed, 0xE4BULL);
    Eigen::VectorXd sup_v = Eigen::VectorXd::Zero(replicas);
    std::vector<double> out;
    const auto total = static_cast<std::uint64_t>(std::llround(horizons.back() / dt));
    std::size_t next = 0;
    auto record = [&](double t) {
        while (next < horizons.size() && horizons[next] <= t + 0.5 * dt) {
            double acc = 0;
            for (int i = 0; i < replicas; ++i) acc += std::exp(c1 * sup_v[i]);
            out.push_back(acc / static_cast<double>(replicas));
            ++next;
        }
    };
    for (int i = 0; i < replicas; ++i)
        sup_v[i] = V.value(ens.states.row(i));
    for (std::uint64_t s = 0; s < total; ++s) {
        step_tamed_em_inplace(model, ens, step, stream, s);
        for (int i = 0; i < replicas; ++i)
            sup_v[i] = std::max(sup_v[i], V.value(ens.states.row(i)));
        record(static_cast<double>(s + 1) * dt);
    }
    return out;
}

}  // namespace mvlab
