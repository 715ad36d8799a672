#include "mvlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mvlab/assignment.hpp"
#include "mvlab/coupling.hpp"
#include "mvlab/csv.hpp"
#include "mvlab/ergodic.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

namespace {

using nlohmann::json;

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&tt, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

Eigen::VectorXd fill_vector(int k, double value) {
    return Eigen::VectorXd::Constant(k, value);
}

struct RunContext {
    std::filesystem::path dir;
    std::vector<std::filesystem::path> files;
    json diagnostics;

    std::filesystem::path file(const std::string& name) {
        const auto p = dir / name;
        files.push_back(p);
        return p;
    }
};

bool run_simulate(const ExperimentConfig& cfg, RunContext& ctx) {
    const SpectralModel model = build_model(cfg);
    ParticleEnsemble ens = ParticleEnsemble::constant(cfg.n_particles, fill_vector(cfg.k, cfg.x0));
    SimulateOptions opts;
    opts.T = cfg.T;
    opts.dt = cfg.dt;
    opts.dt_max = cfg.dt_max;
    opts.taming = cfg.taming;
    opts.workers = cfg.workers;
    std::vector<Observer> observers;
    observers.push_back({"second_moment", [](const ParticleEnsemble& e) {
                             return e.states.rowwise().squaredNorm().mean();
                         }});
    for (int j = 0; j < cfg.k; ++j)
        observers.push_back({"mean_" + std::to_string(j + 1),
                             [j](const ParticleEnsemble& e) { return e.states.col(j).mean(); }});
    const Trajectory traj = simulate(model, std::move(ens), opts, NoiseStream(cfg.seed), observers);

    {
        std::vector<std::string> header = {"t", "particle"};
        for (int j = 0; j < cfg.k; ++j) header.push_back("x_" + std::to_string(j + 1));
        CsvWriter csv(ctx.file("trajectory.csv"), header);
        for (std::size_t s = 0; s < traj.times.size(); ++s) {
            for (int i = 0; i < traj.snapshots[s].rows(); ++i) {
                std::vector<double> row = {traj.times[s], static_cast<double>(i)};
                for (int j = 0; j < cfg.k; ++j) row.push_back(traj.snapshots[s](i, j));
                csv.row(row);
            }
        }
    }
    {
        std::vector<std::string> header = {"t", "second_moment"};
        for (int j = 0; j < cfg.k; ++j) header.push_back("mean_" + std::to_string(j + 1));
        CsvWriter csv(ctx.file("series.csv"), header);
        for (std::size_t s = 0; s < traj.times.size(); ++s) {
            std::vector<double> row = {traj.times[s], traj.series.at("second_moment")[s]};
            for (int j = 0; j < cfg.k; ++j)
                row.push_back(traj.series.at("mean_" + std::to_string(j + 1))[s]);
            csv.row(row);
        }
    }
    ctx.diagnostics["terminal_second_moment"] = traj.series.at("second_moment").back();
    return true;
}

bool run_mixing(const ExperimentConfig& cfg, RunContext& ctx) {
    const SpectralModel model = build_model(cfg);
    const LyapunovSpec V = build_lyapunov(cfg);

    InvariantOptions inv_opts;
    inv_opts.dt = cfg.dt;
    inv_opts.taming = cfg.taming;
    inv_opts.workers = cfg.workers;
    const InvariantEstimate inv =
        estimate_invariant(model, V, cfg.burn_in, cfg.n_particles, cfg.seed, inv_opts);
    write_measure_csv(inv.measure, ctx.file("invariant.csv"));

    ParticleEnsemble nu0 =
        ParticleEnsemble::constant(cfg.n_particles, fill_vector(cfg.k, cfg.mixing_x0));
    ParticleEnsemble mu_ens;
    mu_ens.states = inv.measure.points();

    MixingOptions mix_opts;
    mix_opts.dt = cfg.dt;
    mix_opts.taming = cfg.taming;
    mix_opts.workers = cfg.workers;
    mix_opts.expected_rate = cfg.mixing_expected_rate;
    mix_opts.rate_tol = cfg.mixing_rate_tol;
    const MixingReport mix =
        fit_mixing_rate(model, V, nu0, mu_ens, cfg.T, cfg.seed + 3, mix_opts);

    {
        CsvWriter csv(ctx.file("mixing.csv"),
                      {"t", "pi_v", "ci_low", "ci_high", "fit_window_flag"});
        for (std::size_t i = 0; i < mix.times.size(); ++i)
            csv.row({mix.times[i], mix.pi_v[i], mix.ci_low[i], mix.ci_high[i],
                     static_cast<double>(mix.fit_window_flag[i])});
    }

    MixingBoundOptions bound_opts;
    bound_opts.dt = cfg.dt;
    bound_opts.taming = cfg.taming;
    bound_opts.workers = cfg.workers;
    bound_opts.burn_in = cfg.burn_in;
    bound_opts.m_cap = cfg.mixing_m_cap;
    const MixingBoundReport bound =
        mixing_bound_check(model, V, nu0, cfg.mixing_t0, cfg.T, cfg.seed + 7, bound_opts);

    ctx.diagnostics["delta_hat"] = mix.delta_hat;
    ctx.diagnostics["rate_fit_pass"] = mix.pass;
    ctx.diagnostics["invariant_seed_distance"] = inv.seed_distance;
    ctx.diagnostics["invariant_bootstrap_spread"] = inv.bootstrap_spread;
    ctx.diagnostics["invariant_warned"] = inv.warned_disagreement;
    ctx.diagnostics["prefactor"] = bound.prefactor;
    ctx.diagnostics["m_hat"] = bound.m_hat;
    ctx.diagnostics["m_hat_second_seed"] = bound.m_hat_second_seed;
    ctx.diagnostics["m_hat_stable"] = bound.stable;
    ctx.diagnostics["bound_pass"] = bound.pass;
    return mix.pass && bound.pass;
}

bool run_coupling_experiment(const ExperimentConfig& cfg, RunContext& ctx) {
    const SpectralModel model = build_model(cfg);
    CouplingConfig base;
    base.vartheta = cfg.coupling_vartheta;
    base.ell = cfg.coupling_ell;
    base.radius_R = cfg.coupling_radius;
    base.horizon_T = cfg.coupling_T;
    base.n_particles = cfg.coupling_n_particles;
    base.dt = cfg.dt;
    base.taming = cfg.taming;
    base.g_min = cfg.coupling_g_min;
    base.mollify_level = std::max(1, cfg.coupling_mollify_level);
    const bool auto_level = cfg.coupling_mollify_level == 0;

    const TailScan scan = tail_scan(model, base, cfg.coupling_theta_list, cfg.replicas, cfg.seed,
                                    cfg.workers, auto_level);
    {
        CsvWriter csv(ctx.file("coupling_tail.csv"),
                      {"theta_star", "ell", "replicas", "exceed_freq", "fitted_c2", "r2"});
        for (const auto& row : scan.rows)
            csv.row({row.theta_star, row.ell, static_cast<double>(row.replicas), row.exceed_freq,
                     row.fitted_c2, row.r2});
    }

    if (cfg.coupling_per_replica) {
        CouplingConfig diag_cfg = base;
        diag_cfg.theta_star = cfg.coupling_theta_list.front();
        diag_cfg.replicas = cfg.replicas;
        const CouplingReport rep = run_coupling(model, diag_cfg, cfg.seed, cfg.workers);
        CsvWriter csv(ctx.file("coupling_replicas.csv"),
                      {"replica", "sup_diff", "tau", "tau1", "control_energy"});
        for (std::size_t r = 0; r < rep.replicas.size(); ++r)
            csv.row({static_cast<double>(r), rep.replicas[r].sup_difference, rep.replicas[r].tau,
                     rep.replicas[r].tau1, rep.replicas[r].control_energy});
        ctx.diagnostics["kl_estimate"] = rep.kl_estimate;
        ctx.diagnostics["tv_bound"] = rep.tv_bound;
        ctx.diagnostics["energy_scale_vartheta"] = rep.energy_scale_vartheta;
        ctx.diagnostics["energy_scale_gain"] = rep.energy_scale_gain;
    }

    bool nonincreasing = true;
    for (std::size_t i = 1; i < scan.rows.size(); ++i)
        if (scan.rows[i].theta_star < scan.rows[i - 1].theta_star &&
            scan.rows[i].exceed_freq > scan.rows[i - 1].exceed_freq)
            nonincreasing = false;
    const bool slope_ok = !scan.fit_available || scan.fitted_c2 > 0;

    ctx.diagnostics["nonincreasing"] = nonincreasing;
    ctx.diagnostics["fitted_c2"] = scan.fitted_c2;
    ctx.diagnostics["fit_available"] = scan.fit_available;
    ctx.diagnostics["nonzero_rows"] = scan.nonzero_rows;
    if (!scan.note.empty()) ctx.diagnostics["note"] = scan.note;
    json levels = json::array();
    for (const auto& row : scan.rows) levels.push_back(row.mollify_level);
    ctx.diagnostics["mollify_levels"] = levels;
    return nonincreasing && slope_ok;
}

bool run_slln(const ExperimentConfig& cfg, RunContext& ctx) {
    const SpectralModel model = build_model(cfg);
    const ObservableSpec obs = build_observable(cfg);
    SllnOptions opts;
    opts.dt = cfg.slln_dt;
    opts.taming = cfg.taming;
    opts.workers = cfg.workers;
    opts.x0 = fill_vector(cfg.k, cfg.x0);
    const SllnReport rep =
        slln_moment_slope(model, obs, cfg.slln_k, cfg.slln_t_grid, cfg.replicas, cfg.seed, opts);
    {
        CsvWriter csv(ctx.file("slln.csv"), {"t", "moment_2k", "ci"});
        for (std::size_t i = 0; i < rep.times.size(); ++i)
            csv.row({rep.times[i], rep.moment[i], rep.moment_ci[i]});
    }
    ctx.diagnostics["slope"] = rep.slope;
    ctx.diagnostics["slope_ci_low"] = rep.slope_ci_low;
    ctx.diagnostics["slope_ci_high"] = rep.slope_ci_high;
    ctx.diagnostics["exact_zero"] = rep.exact_zero;
    if (rep.exact_zero) return true;
    return std::abs(rep.slope + static_cast<double>(cfg.slln_k)) <= cfg.slln_slope_tol;
}

bool run_clt(const ExperimentConfig& cfg, RunContext& ctx) {
    const SpectralModel model = build_model(cfg);
    const ObservableSpec obs = build_observable(cfg);
    CltOptions opts;
    opts.dt = cfg.clt_dt;
    opts.taming = cfg.taming;
    opts.workers = cfg.workers;
    opts.x0 = fill_vector(cfg.k, cfg.x0);
    opts.burn_in = cfg.burn_in;
    opts.ks_tol = cfg.clt_ks_tol;
    const CltReport rep = clt_ks_check(model, obs, cfg.clt_t_grid, cfg.replicas, cfg.seed, opts);
    {
        CsvWriter csv(ctx.file("clt.csv"), {"t", "ks", "ci", "lambda_hat"});
        for (std::size_t i = 0; i < rep.times.size(); ++i)
            csv.row({rep.times[i], rep.ks[i], rep.ks_ci[i], rep.lambda_hat});
    }
    ctx.diagnostics["lambda_sq_direct"] = rep.lambda_sq_direct;
    ctx.diagnostics["lambda_sq_identity"] = rep.lambda_sq_identity;
    ctx.diagnostics["decay_exponent"] = rep.decay_exponent;
    ctx.diagnostics["lambda_zero_branch"] = rep.lambda_zero_branch;
    return rep.pass;
}

}  // namespace

ReportBundle run_experiment(const ExperimentConfig& cfg) {
    RunContext ctx;
    const char* env_dir = std::getenv("MVLAB_OUT");
    ctx.dir = env_dir ? std::filesystem::path(env_dir) : std::filesystem::path(cfg.out_dir);
    std::filesystem::create_directories(ctx.dir);

    const auto t_start = std::chrono::steady_clock::now();
    const std::string started_at = iso_now();

    ReportBundle bundle;
    bool pass = false;
    try {
        if (cfg.kind == "simulate") {
            pass = run_simulate(cfg, ctx);
        } else if (cfg.kind == "mixing") {
            pass = run_mixing(cfg, ctx);
        } else if (cfg.kind == "coupling") {
            pass = run_coupling_experiment(cfg, ctx);
        } else if (cfg.kind == "slln") {
            pass = run_slln(cfg, ctx);
        } else if (cfg.kind == "clt") {
            pass = run_clt(cfg, ctx);
        } else if (cfg.kind == "selftest") {
            const SelftestResult st = selftest(nullptr);
            pass = st.pass;
            for (const auto& c : st.checks) ctx.diagnostics[c.name] = c.pass;
        } else {
            throw ConfigError("unknown experiment kind " + cfg.kind);
        }
    } catch (...) {
        for (const auto& f : ctx.files) {
            std::error_code ec;
            std::filesystem::remove(f, ec);
        }
        throw;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    json manifest;
    json cfg_json = json::object();
    for (const auto& [key, value] : config_echo(cfg)) cfg_json[key] = value;
    manifest["config"] = cfg_json;
    manifest["seed"] = cfg.seed;
    manifest["started_at"] = started_at;
    manifest["wall_seconds"] = wall;
    manifest["pass"] = pass;
    manifest["diagnostics"] = ctx.diagnostics;
    json files = json::array();
    for (const auto& f : ctx.files) files.push_back(f.filename().string());
    manifest["files"] = files;
    if (!cfg.warnings.empty()) manifest["warnings"] = cfg.warnings;

    bundle.manifest_path = ctx.dir / "manifest.json";
    std::ofstream mf(bundle.manifest_path);
    mf << manifest.dump(2) << "\n";
    bundle.files = ctx.files;
    bundle.pass = pass;
    bundle.summary = cfg.kind + (pass ? ": pass" : ": FAIL");
    return bundle;
}

namespace {

// exhaustive matching oracle for small instances
double brute_force_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0;
        for (int i = 0; i < n; ++i) acc += cost(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

SelftestResult selftest(std::ostream* log) {
    SelftestResult result;
    result.pass = true;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        result.checks.push_back({name, ok, detail});
        result.pass = result.pass && ok;
        if (log) (*log) << (ok ? "[ok]   " : "[FAIL] ") << name << "  " << detail << "\n";
    };

    {  // assignment solver vs exhaustive permutations
        NoiseStream draws(20240517, 0xA55ULL);
        bool ok = true;
        double worst = 0;
        for (int inst = 0; inst < 100 && ok; ++inst) {
            const int n = 2 + static_cast<int>(draws.uniform(static_cast<std::uint64_t>(inst), 0, 0) * 5);
            Eigen::MatrixXd cost(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    cost(i, j) = draws.uniform(static_cast<std::uint64_t>(inst),
                                               static_cast<std::uint64_t>(1 + i * n + j), 1);
            const double got = solve_assignment(cost).cost;
            const double want = brute_force_assignment(cost);
            worst = std::max(worst, std::abs(got - want));
            ok = ok && std::abs(got - want) <= 1e-12;
        }
        check("assignment_vs_bruteforce", ok, "max |gap| = " + format_double(worst));
    }
    {  // OU stationary variance, quick version
        const SpectralModel model = SpectralModel::mf_ou(1, 0, 1.0, 0.0, 1.0);
        const LyapunovSpec V = LyapunovSpec::squared_norm(2, 1, 1);
        InvariantOptions opts;
        opts.dt = 2e-3;
        opts.cross_check = false;
        const InvariantEstimate est = estimate_invariant(model, V, 10.0, 2000, 99, opts);
        const double var = est.measure.second_moment() - est.measure.mean().squaredNorm();
        const bool ok = std::abs(var - 0.5) <= 0.05;
        check("ou_stationary_variance", ok, "var = " + format_double(var) + " (analytic 0.5)");
    }
    {  // mollifier envelope properties for sqrt(|x|)
        // grid fine enough to resolve the n = 64 transition scale 1/(4 n^2)
        SpectralModel model = SpectralModel::mf_ou(1, 0, 1.0, 0.0, 0.5);
        model.drift_profiles[0] =
            ScalarProfile::from_terms({{ScalarTerm::Kind::AbsPow, 1.0, 0.5, 0}});
        bool below = true, lipschitz = true;
        double prev_dev = std::numeric_limits<double>::infinity();
        bool monotone = true;
        const int probes = 2000;
        const double h = 2.0 / probes;
        for (int n : {4, 16, 64}) {
            const SpectralModel env = mollify(model, n, 2.0, 80001);
            double dev = 0;
            double last = env.drift_profiles[0](-1.0);
            for (int i = 0; i <= probes; ++i) {
                const double x = -1.0 + h * i;
                const double e = env.drift_profiles[0](x);
                const double f = std::sqrt(std::abs(x));
                below = below && e <= f + 1e-12;
                dev = std::max(dev, std::abs(e - f));
                if (i > 0) lipschitz = lipschitz && std::abs(e - last) <= n * h + 1e-9;
                last = e;
            }
            monotone = monotone && dev < prev_dev;
            prev_dev = dev;
        }
        check("mollify_envelope", below && lipschitz && monotone,
              below ? (lipschitz ? (monotone ? "below/lipschitz/monotone" : "deviation not monotone")
                                   : "lipschitz bound broken")
                    : "envelope above original");
    }
    {  // Pinsker arithmetic
        const bool ok = std::abs(pinsker_tv_bound(0.02) - 0.1) < 1e-15 &&
                        pinsker_tv_bound(2.0) == 1.0 && pinsker_tv_bound(0.0) == 0.0;
        check("pinsker_arithmetic", ok,
              "tv(0.02) = " + format_double(pinsker_tv_bound(0.02)));
    }
    {  // Theorem-shape prefactor arithmetic via an independent expm1 route
        const LyapunovSpec V = LyapunovSpec::squared_norm(2, 1, 1);
        const double got = mixing_prefactor(V, 1.0);
        const double ref = 1.0 / (-2.0 * std::expm1(-2.0));
        const bool ok = std::abs(got - ref) < 1e-12;
        check("mixing_prefactor", ok, "prefactor = " + format_double(got));
    }
    {  // taming and control-gain arithmetic
        const SpectralModel model = SpectralModel::mf_ou(1, 0, 1.0, 0.0, 0.0);
        ParticleEnsemble ens = ParticleEnsemble::constant(1, Eigen::VectorXd::Ones(1));
        ens = step_tamed_em(model, ens, 0.1, NoiseStream(1), true);
        const double tamed = ens.states(0, 0);
        const bool ok1 = std::abs(tamed - (1.0 - 0.1 / 1.1)) < 1e-12;
        const double zeta = std::pow(0.01, 0.25 - 1.0);
        const bool ok2 = std::abs(zeta - 31.6227766016838) < 1e-10;
        check("taming_and_gain_arithmetic", ok1 && ok2, "x+ = " + format_double(tamed));
    }
    {  // exact 1-d transport oracle
        Eigen::MatrixXd a(2, 1), b(2, 1);
        a << 0, 2;
        b << 1, 3;
        const double w1 = w1_sorted_1d(EmpiricalMeasure(a), EmpiricalMeasure(b));
        check("w1_sorted_pair", std::abs(w1 - 1.0) < 1e-15, "w1 = " + format_double(w1));
    }
    return result;
}

}  // namespace mvlab
