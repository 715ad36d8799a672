#include "mvlab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvlab/errors.hpp"
#include "mvlab/parallel.hpp"
#include "mvlab/particle.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

double CouplingConfig::control_gain() const { return std::pow(theta_star, vartheta - 1.0); }

void CouplingConfig::validate(const AssumptionConstants& c) const {
    if (!(theta_star > 0)) throw ArgumentError("coupling: theta_star must be > 0");
    const double cap = std::min(c.alpha, 2.0 * c.beta - 1.0);
    if (!(vartheta > 0 && vartheta < cap))
        throw ArgumentError("coupling: vartheta must lie in (0, min(alpha, 2 beta - 1)) = (0, " +
                            std::to_string(cap) + ")");
    if (!(ell > 0)) throw ArgumentError("coupling: ell must be > 0");
    if (!(radius_R > 0)) throw ArgumentError("coupling: radius_R must be > 0");
    if (!(horizon_T > 0)) throw ArgumentError("coupling: horizon_T must be > 0");
    if (mollify_level < 1) throw ArgumentError("coupling: mollify_level must be >= 1");
    if (replicas < 1) throw ArgumentError("coupling: replicas must be >= 1");
    if (!(control_gain() > 0)) throw ArgumentError("coupling: control gain must be > 0");
}

namespace {

double rms_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return std::sqrt((a - b).rowwise().squaredNorm().mean());
}

double max_row_norm(const Eigen::MatrixXd& a) {
    return std::sqrt(a.rowwise().squaredNorm().maxCoeff());
}

}  // namespace

CouplingReplica run_coupling_triple(const SpectralModel& model, const SpectralModel& mollified,
                                    const CouplingConfig& cfg, const NoiseStream& noise) {
    cfg.validate(model.constants);
    const int n = cfg.n_particles;
    const int k = model.k;
    const int m = model.m;
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double zeta = cfg.control_gain();
    const double inf = std::numeric_limits<double>::infinity();
    const auto n_steps = static_cast<std::uint64_t>(std::llround(cfg.horizon_T / dt));

    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, k);   // original coefficients
    Eigen::MatrixXd um = u;                            // mollified, same noise
    Eigen::MatrixXd us = u;                            // mollified + control

    CouplingReplica rep;
    rep.tau = inf;
    rep.tau1 = inf;
    rep.v_times.push_back(0.0);
    rep.v_series.push_back(0.0);

    bool control_on = true;
    bool inside_ball = true;
    Eigen::VectorXd dw(m);

    for (std::uint64_t s = 0; s < n_steps; ++s) {
        const double t = static_cast<double>(s) * dt;
        const MeasureSummary sum_u = ensemble_summary({u, t});
        const MeasureSummary sum_um = ensemble_summary({um, t});
        const MeasureSummary sum_us = ensemble_summary({us, t});

        const double d_now = rms_diff(u, us);
        if (control_on && d_now > 2.0 * cfg.theta_star + 1e-12)
            throw std::logic_error("coupling invariant violated: diff > 2 theta* on active window");

        const bool window_open = control_on && inside_ball;  // t <= tau ^ tau1
        double eta_drift = 0;  // instantaneous drift of V = D^2 (Ito)
        double qv_rate = 0;    // quadratic-variation rate of its martingale part

        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd xu = u.row(i);
            const Eigen::VectorXd xm = um.row(i);
            const Eigen::VectorXd xs = us.row(i);

            Eigen::VectorXd bu = eval_drift(model, xu, sum_u);
            Eigen::VectorXd bm = eval_drift(mollified, xm, sum_um);
            Eigen::VectorXd bs = eval_drift(mollified, xs, sum_us);
            if (control_on) bs += zeta * (xu - xs);

            if (cfg.taming) {
                bu /= 1.0 + dt * bu.norm();
                bm /= 1.0 + dt * bm.norm();
                bs /= 1.0 + dt * bs.norm();
            }

            const Eigen::MatrixXd gu = eval_diffusion(model, xu, sum_u);
            const Eigen::MatrixXd gm = eval_diffusion(mollified, xm, sum_um);
            const Eigen::MatrixXd gs = eval_diffusion(mollified, xs, sum_us);

            if (control_on) {
                // componentwise right inverse of the diagonal diffusion of u*_m
                double e_raw_i = 0;
                const int active = std::min(k, m);
                for (int j = 0; j < active; ++j) {
                    const double gj = gs(j, j);
                    if (std::abs(gj) < cfg.g_min)
                        throw RightInverseError(
                            "diffusion below g_min along the trajectory (mode " +
                            std::to_string(j + 1) + ")");
                    const double r = (xu[j] - xs[j]) / gj;
                    e_raw_i += r * r;
                }
                rep.control_energy_raw += dt * e_raw_i;
                rep.control_energy += dt * zeta * zeta * e_raw_i;
            }

            if (window_open) {
                const Eigen::VectorXd diff = xu - xs;
                eta_drift += 2.0 * (bu - bs).dot(diff) + (gu - gs).squaredNorm();
                qv_rate += 4.0 * ((gu - gs).transpose() * diff).squaredNorm();
            }

            for (int c = 0; c < m; ++c)
                dw[c] = sqrt_dt * noise.gaussian(static_cast<std::uint64_t>(i), s,
                                                 static_cast<std::uint32_t>(c));
            u.row(i) = (xu + dt * bu + gu * dw).transpose();
            um.row(i) = (xm + dt * bm + gm * dw).transpose();
            us.row(i) = (xs + dt * bs + gs * dw).transpose();
        }

        for (const auto* sys : {&u, &um, &us})
            if (!sys->allFinite())
                throw BlowUpError(0, t + dt);

        if (window_open) {
            const double v_now = d_now * d_now;
            rep.drift_bound_a =
                std::max(rep.drift_bound_a, std::max(eta_drift / n + zeta * v_now, 0.0));
            rep.qv_bound_b = std::max(rep.qv_bound_b, qv_rate / (static_cast<double>(n) * n));
        }

        const double t_next = static_cast<double>(s + 1) * dt;
        const double d_next = rms_diff(u, us);
        if (inside_ball) rep.sup_difference = std::max(rep.sup_difference, d_next);
        if (control_on && d_next > 2.0 * cfg.theta_star) {
            rep.tau = t_next;
            control_on = false;
        }
        if (inside_ball && max_row_norm(u) > cfg.radius_R) {
            rep.tau1 = t_next;
            inside_ball = false;
        }
        const bool still_open = control_on && inside_ball;
        if (still_open &&
            ((s + 1) % static_cast<std::uint64_t>(cfg.series_stride) == 0 || s + 1 == n_steps)) {
            rep.v_times.push_back(t_next);
            rep.v_series.push_back(d_next * d_next);
        }
    }

    rep.exceeded = rep.sup_difference >= std::pow(cfg.theta_star, 1.0 + cfg.ell);
    return rep;
}

CouplingReport run_coupling(const SpectralModel& model, const CouplingConfig& cfg,
                            std::uint64_t seed, int workers) {
    cfg.validate(model.constants);
    const SpectralModel mollified =
        mollify(model, cfg.mollify_level, cfg.envelope_window, cfg.envelope_grid);

    CouplingReport report;
    report.replicas.resize(static_cast<std::size_t>(cfg.replicas));
    NoiseStream root(seed);
    parallel_for(static_cast<std::size_t>(cfg.replicas), workers, [&](std::size_t r) {
        report.replicas[r] =
            run_coupling_triple(model, mollified, cfg, root.substream(r));
    });

    int exceed = 0;
    std::vector<double> energies;
    energies.reserve(report.replicas.size());
    for (const auto& rep : report.replicas) {
        exceed += rep.exceeded ? 1 : 0;
        energies.push_back(rep.control_energy);
    }
    report.exceed_frequency = static_cast<double>(exceed) / static_cast<double>(cfg.replicas);
    report.mean_energy = mean(energies);
    report.kl_estimate = 0.5 * report.mean_energy;
    report.tv_bound = pinsker_tv_bound(report.kl_estimate);
    report.theta_star = cfg.theta_star;
    report.ell = cfg.ell;
    report.gain = cfg.control_gain();
    report.energy_scale_vartheta = std::pow(cfg.theta_star, 2.0 * cfg.vartheta);
    report.energy_scale_gain = std::pow(cfg.theta_star, 2.0 * report.gain);
    return report;
}

TailScan tail_scan(const SpectralModel& model, CouplingConfig base,
                   const std::vector<double>& theta_list, int replicas, std::uint64_t seed,
                   int workers, bool auto_level) {
    if (theta_list.size() < 3) throw ArgumentError("tail_scan: need >= 3 theta* values");
    {
        std::vector<double> sorted = theta_list;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ArgumentError("tail_scan: theta* values must be distinct");
    }
    if (replicas < 100) throw ArgumentError("tail_scan: need >= 100 replicas per theta*");

    TailScan scan;
    std::uint64_t row_id = 0;
    for (double theta : theta_list) {
        CouplingConfig cfg = base;
        cfg.theta_star = theta;
        cfg.replicas = replicas;
        if (auto_level) {
            // smallest ladder level whose measured gap matches the paper's
            // theta* = max(gap_f^{1/alpha}, gap_g^{1/beta}) regime; integer
            // steps first so the selected gap stays close to theta*
            int chosen = 1;
            auto theta_of = [&](int level) {
                const SpectralModel cand =
                    mollify(model, level, cfg.envelope_window, cfg.envelope_grid);
                const auto [gap_f, gap_g] = mollification_gaps(model, cand, cfg.radius_R);
                return std::max(std::pow(gap_f, 1.0 / model.constants.alpha),
                                std::pow(gap_g, 1.0 / model.constants.beta));
            };
            for (int level = 1; level <= (1 << 12);
                 level = level < 32 ? level + 1 : 2 * level) {
                chosen = level;
                if (theta_of(level) <= theta) break;
            }
            cfg.mollify_level = chosen;
        }
        const CouplingReport rep = run_coupling(model, cfg, seed + 1000 * row_id, workers);
        TailRow row;
        row.theta_star = theta;
        row.ell = cfg.ell;
        row.replicas = replicas;
        row.exceed_freq = rep.exceed_frequency;
        row.mollify_level = cfg.mollify_level;
        row.mean_energy = rep.mean_energy;
        scan.rows.push_back(row);
        ++row_id;
    }

    std::vector<double> xs, ys;
    for (const auto& row : scan.rows) {
        if (row.exceed_freq > 0) {
            xs.push_back(std::pow(row.theta_star, -2.0 * row.ell));
            ys.push_back(std::log(row.exceed_freq));
        }
    }
    scan.nonzero_rows = static_cast<int>(xs.size());
    if (scan.nonzero_rows == 0) {
        scan.note = "no exceedances; bound vacuously satisfied";
    } else if (scan.nonzero_rows >= 2) {
        const LinearFit fit = fit_line(xs, ys);
        scan.fitted_c2 = -fit.slope;
        scan.fit_r2 = fit.r2;
        scan.fit_available = true;
    } else {
        scan.note = "single nonzero-frequency row; envelope fit skipped";
    }
    for (auto& row : scan.rows) {
        row.fitted_c2 = scan.fitted_c2;
        row.r2 = scan.fit_r2;
    }
    return scan;
}

double pinsker_tv_bound(double kl) {
    if (kl < 0) throw ArgumentError("pinsker_tv_bound: KL must be >= 0");
    return std::min(1.0, std::sqrt(kl / 2.0));
}

std::pair<double, double> girsanov_tv_bound(const CouplingReport& report) {
    return {report.kl_estimate, pinsker_tv_bound(report.kl_estimate)};
}

EnvelopeReport concentration_envelope(const std::vector<std::vector<double>>& v_series,
                                      const std::vector<std::vector<double>>& v_times,
                                      double lambda, double a_const, double b_const, double delta,
                                      const std::vector<double>& r_grid) {
    if (v_series.empty()) throw ArgumentError("concentration_envelope: empty series");
    if (v_series.size() != v_times.size())
        throw ArgumentError("concentration_envelope: series/times size mismatch");
    if (!(delta > 0 && delta < 0.5))
        throw ArgumentError("concentration_envelope: delta must be in (0, 1/2)");
    if (!(lambda > 0)) throw ArgumentError("concentration_envelope: lambda must be > 0");

    std::vector<double> sups;
    sups.reserve(v_series.size());
    for (std::size_t r = 0; r < v_series.size(); ++r) {
        const auto& v = v_series[r];
        const auto& t = v_times[r];
        if (v.empty() || v.size() != t.size())
            throw ArgumentError("concentration_envelope: malformed replica series");
        const double v0 = v.front();
        double sup = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v.size(); ++i)
            sup = std::max(sup, v[i] - std::exp(-lambda * t[i]) * v0);
        sups.push_back(sup);
    }

    EnvelopeReport rep;
    std::vector<double> xs, ys;
    for (double r : r_grid) {
        EnvelopeRow row;
        row.r = r;
        row.threshold = a_const / lambda + std::sqrt(b_const) * std::pow(lambda, -delta) * r;
        // strict: a deterministic series sitting exactly on e^{-lambda t} V(0)
        // must not count as an exceedance
        int hits = 0;
        for (double s : sups) hits += (s > row.threshold) ? 1 : 0;
        row.freq = static_cast<double>(hits) / static_cast<double>(sups.size());
        rep.rows.push_back(row);
        if (row.freq > 0) {
            xs.push_back(r * r);
            ys.push_back(std::log(row.freq));
        }
    }
    if (xs.size() >= 2) {
        const LinearFit fit = fit_line(xs, ys);
        rep.c2_hat = -fit.slope;
        rep.c1_hat = std::exp(fit.intercept);
        rep.r2 = fit.r2;
        rep.fit_available = true;
    }
    return rep;
}

}  // namespace mvlab
