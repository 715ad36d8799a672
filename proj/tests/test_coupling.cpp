#include <doctest.h>

#include <cmath>

#include "mvlab/coupling.hpp"
#include "mvlab/stats.hpp"

using namespace mvlab;

namespace {

SpectralModel holder_catalog() {
    return SpectralModel::mf_holder(1, 0.0, 1.0, 0.5, 0.6, 0.0, 0.4, 0.4, 0.8, 100.0);
}

CouplingConfig small_cfg() {
    CouplingConfig cfg;
    cfg.theta_star = 0.1;
    cfg.vartheta = 0.25;
    cfg.ell = 0.03;
    cfg.radius_R = 8.0;
    cfg.horizon_T = 1.0;
    cfg.mollify_level = 2;
    cfg.n_particles = 16;
    cfg.dt = 1e-3;
    return cfg;
}

}  // namespace

TEST_CASE("coupling config: control gain arithmetic and vartheta window") {
    CouplingConfig cfg = small_cfg();
    cfg.theta_star = 0.01;
    cfg.vartheta = 0.25;
    CHECK(cfg.control_gain() == doctest::Approx(31.6227766016838).epsilon(1e-12));

    const SpectralModel model = holder_catalog();
    cfg.vartheta = 0.7;  // above min(alpha, 2 beta - 1) = min(0.6, 0.6)
    CHECK_THROWS_AS(cfg.validate(model.constants), ArgumentError);
    cfg.vartheta = -0.1;
    CHECK_THROWS_AS(cfg.validate(model.constants), ArgumentError);
}

TEST_CASE("coupling triple: exact mollification plus equal start glues the pair") {
    // linear catalog model: the envelope at level >= a reproduces f exactly
    const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.0, 0.8);
    const SpectralModel mollified = mollify(model, 4);
    CouplingConfig cfg = small_cfg();
    cfg.theta_star = 0.05;
    const CouplingReplica rep = run_coupling_triple(model, mollified, cfg, NoiseStream(3));
    // tabulated envelope reproduces the linear drift up to interpolation ulps
    CHECK(rep.sup_difference <= 1e-12);
    CHECK(std::isinf(rep.tau));
    CHECK(rep.control_energy <= 1e-18);
    CHECK_FALSE(rep.exceeded);
}

TEST_CASE("coupling triple: huge threshold keeps tau infinite and control active") {
    const SpectralModel model = holder_catalog();
    CouplingConfig cfg = small_cfg();
    cfg.theta_star = 50.0;  // unreachable: diff would have to exceed 100
    const SpectralModel mollified = mollify(model, cfg.mollify_level);
    const CouplingReplica rep = run_coupling_triple(model, mollified, cfg, NoiseStream(5));
    CHECK(std::isinf(rep.tau));
    CHECK(rep.sup_difference <= 2.0 * cfg.theta_star);
    CHECK_FALSE(rep.exceeded);  // threshold 50^{1.03} is far out of reach
}

TEST_CASE("coupling triple: recorded energy equals gain^2 times the raw accumulation") {
    const SpectralModel model = holder_catalog();
    CouplingConfig cfg = small_cfg();
    const SpectralModel mollified = mollify(model, cfg.mollify_level);
    const CouplingReplica rep = run_coupling_triple(model, mollified, cfg, NoiseStream(7));
    CHECK(rep.control_energy > 0.0);
    const double zeta = cfg.control_gain();
    CHECK(std::abs(rep.control_energy - zeta * zeta * rep.control_energy_raw) <=
          1e-9 * rep.control_energy);
}

TEST_CASE("coupling: sup difference shrinks with the mollification level") {
    // strong kink so the level-n transition scale stays above the grid step
    const SpectralModel model =
        SpectralModel::mf_holder(1, 0.0, 1.0, 2.0, 0.6, 0.0, 0.4, 0.4, 0.8, 100.0);
    CouplingConfig cfg = small_cfg();
    cfg.theta_star = 0.5;
    cfg.replicas = 24;
    cfg.envelope_grid = 400001;
    double prev = std::numeric_limits<double>::infinity();
    for (int level : {2, 8, 32}) {
        cfg.mollify_level = level;
        const CouplingReport rep = run_coupling(model, cfg, 11, 2);
        double mean_sup = 0;
        for (const auto& r : rep.replicas) mean_sup += r.sup_difference;
        mean_sup /= static_cast<double>(rep.replicas.size());
        CHECK(mean_sup < prev);
        prev = mean_sup;
    }
}

TEST_CASE("pinsker bound: arithmetic, clipping, monotonicity") {
    CHECK(pinsker_tv_bound(0.0) == 0.0);
    CHECK(pinsker_tv_bound(0.02) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(pinsker_tv_bound(2.0) == 1.0);
    CHECK(pinsker_tv_bound(5.0) == 1.0);
    double prev = -1;
    for (double kl : {0.0, 0.01, 0.1, 0.5, 1.9, 2.5}) {
        CHECK(pinsker_tv_bound(kl) >= prev);
        prev = pinsker_tv_bound(kl);
    }
    CHECK_THROWS_AS(pinsker_tv_bound(-0.1), ArgumentError);
}

TEST_CASE("girsanov_tv_bound: aggregates from the replica energies") {
    const SpectralModel model = holder_catalog();
    CouplingConfig cfg = small_cfg();
    cfg.replicas = 8;
    const CouplingReport rep = run_coupling(model, cfg, 13, 2);
    const auto [kl, tv] = girsanov_tv_bound(rep);
    CHECK(kl == doctest::Approx(0.5 * rep.mean_energy));
    CHECK(tv == doctest::Approx(pinsker_tv_bound(kl)));
}

TEST_CASE("concentration envelope: deterministic decay never fires for R > 0") {
    std::vector<std::vector<double>> series;
    std::vector<std::vector<double>> times;
    const double lambda = 2.0;
    for (int r = 0; r < 10; ++r) {
        std::vector<double> v, t;
        for (int i = 0; i <= 50; ++i) {
            const double ti = 0.05 * i;
            t.push_back(ti);
            v.push_back(std::exp(-lambda * ti) * 3.0);
        }
        series.push_back(v);
        times.push_back(t);
    }
    const EnvelopeReport rep =
        concentration_envelope(series, times, lambda, 0.0, 0.0, 0.25, {0.5, 1.0, 2.0});
    for (const auto& row : rep.rows) CHECK(row.freq == 0.0);
    CHECK_FALSE(rep.fit_available);
}

TEST_CASE("concentration envelope: log-frequency decays in R^2 on the coupled pair") {
    // level-1 envelope of a steep linear drift leaves a genuine coefficient
    // gap; the difference process then fluctuates under the control
    SpectralModel model = SpectralModel::mf_ou(1, 0.0, 2.0, 0.0, 0.5);
    CouplingConfig cfg;
    cfg.theta_star = 0.3;
    cfg.vartheta = 0.25;
    cfg.ell = 0.03;
    cfg.radius_R = 10.0;
    cfg.horizon_T = 1.5;
    cfg.mollify_level = 1;
    cfg.n_particles = 8;
    cfg.dt = 1e-3;
    cfg.replicas = 200;
    const CouplingReport rep = run_coupling(model, cfg, 17, 2);

    std::vector<std::vector<double>> series, times;
    double a_meas = 0, b_meas = 0;
    for (const auto& r : rep.replicas) {
        series.push_back(r.v_series);
        times.push_back(r.v_times);
        a_meas = std::max(a_meas, r.drift_bound_a);
        b_meas = std::max(b_meas, r.qv_bound_b);
    }
    const EnvelopeReport env = concentration_envelope(
        series, times, cfg.control_gain(), a_meas, b_meas, 0.25, {0.0, 0.3, 0.6, 1.0, 1.5});
    // rows with positive frequency must thin out as R grows
    REQUIRE(env.rows.size() == 5);
    CHECK(env.rows[0].freq >= env.rows.back().freq);
    if (env.fit_available) CHECK(env.c2_hat > 0.0);
}

TEST_CASE("tail scan: argument guards") {
    const SpectralModel model = holder_catalog();
    CouplingConfig cfg = small_cfg();
    CHECK_THROWS_AS(tail_scan(model, cfg, {0.2, 0.1}, 100, 1, 1), ArgumentError);
    CHECK_THROWS_AS(tail_scan(model, cfg, {0.2, 0.1, 0.05}, 50, 1, 1), ArgumentError);
    CHECK_THROWS_AS(tail_scan(model, cfg, {0.2, 0.2, 0.1}, 100, 1, 1), ArgumentError);
}

TEST_CASE("tail scan: unreachable thresholds report the vacuous case") {
    const SpectralModel model = holder_catalog();
    CouplingConfig cfg = small_cfg();
    cfg.horizon_T = 0.05;
    cfg.n_particles = 4;
    const TailScan scan = tail_scan(model, cfg, {40.0, 50.0, 60.0}, 100, 3, 2, false);
    CHECK(scan.nonzero_rows == 0);
    CHECK(scan.note == "no exceedances; bound vacuously satisfied");
    for (const auto& row : scan.rows) CHECK(row.exceed_freq == 0.0);
}

TEST_CASE("envelope delta and lambda guards") {
    std::vector<std::vector<double>> s = {{0.0, 0.1}};
    std::vector<std::vector<double>> t = {{0.0, 0.1}};
    CHECK_THROWS_AS(concentration_envelope({}, {}, 1.0, 0, 0, 0.25, {1.0}), ArgumentError);
    CHECK_THROWS_AS(concentration_envelope(s, t, 1.0, 0, 0, 0.7, {1.0}), ArgumentError);
    CHECK_THROWS_AS(concentration_envelope(s, t, -1.0, 0, 0, 0.25, {1.0}), ArgumentError);
}
