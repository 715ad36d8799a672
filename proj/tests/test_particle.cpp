#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mvlab/model.hpp"
#include "mvlab/particle.hpp"
#include "mvlab/stats.hpp"

using namespace mvlab;

namespace {

// Mean-field ODE reference: same N-particle system without noise, RK4 at a
// much finer step. Independent of the engine's stepping path.
Eigen::MatrixXd rk4_reference(const SpectralModel& model, Eigen::MatrixXd states, double T,
                              double dt_fine) {
    const auto steps = static_cast<long long>(std::llround(T / dt_fine));
    const int n = static_cast<int>(states.rows());
    auto field = [&](const Eigen::MatrixXd& s) {
        MeasureSummary sum;
        sum.mean = s.colwise().mean();
        sum.second_moment = s.rowwise().squaredNorm().mean();
        Eigen::MatrixXd out(s.rows(), s.cols());
        for (int i = 0; i < n; ++i)
            out.row(i) = eval_drift(model, s.row(i), sum).transpose();
        return out;
    };
    for (long long q = 0; q < steps; ++q) {
        const Eigen::MatrixXd k1 = field(states);
        const Eigen::MatrixXd k2 = field(states + 0.5 * dt_fine * k1);
        const Eigen::MatrixXd k3 = field(states + 0.5 * dt_fine * k2);
        const Eigen::MatrixXd k4 = field(states + dt_fine * k3);
        states += dt_fine / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return states;
}

SpectralModel zero_noise_ou(double a, double b) {
    return SpectralModel::mf_ou(1, 0.0, a, b, 0.0);
}

}  // namespace

TEST_CASE("step: explicit Euler and taming arithmetic") {
    const SpectralModel model = zero_noise_ou(1.0, 0.0);
    ParticleEnsemble ens = ParticleEnsemble::constant(1, Eigen::VectorXd::Ones(1));
    const auto plain = step_tamed_em(model, ens, 0.1, NoiseStream(1), false);
    CHECK(plain.states(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    const auto tamed = step_tamed_em(model, ens, 0.1, NoiseStream(1), true);
    CHECK(tamed.states(0, 0) == doctest::Approx(1.0 - 0.1 / 1.1).epsilon(1e-15));
}

TEST_CASE("step: zero drift with additive noise is exactly x + sigma dW") {
    SpectralModel model = SpectralModel::mf_ou(2, 0.0, 0.0, 0.0, 0.7);
    ParticleEnsemble ens = ParticleEnsemble::zeros(3, 2);
    const NoiseStream noise(5);
    const auto next = step_tamed_em(model, ens, 1e-2, noise, true, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(next.states(i, j) ==
                  doctest::Approx(0.7 * std::sqrt(1e-2) *
                                  noise.gaussian(static_cast<std::uint64_t>(i), 9,
                                                 static_cast<std::uint32_t>(j)))
                      .epsilon(1e-15));
}

TEST_CASE("simulate: zero-noise run tracks the mean-field ODE at O(dt)") {
    const SpectralModel model = zero_noise_ou(1.0, 0.4);
    Eigen::MatrixXd init(4, 1);
    init << 1.0, -0.5, 2.0, 0.25;
    const double T = 1.0;
    const Eigen::MatrixXd ref = rk4_reference(model, init, T, 1e-4);

    auto terminal_error = [&](double dt) {
        SimulateOptions opts;
        opts.T = T;
        opts.dt = dt;
        opts.taming = false;
        opts.keep_snapshots = true;
        ParticleEnsemble ens;
        ens.states = init;
        const Trajectory traj = simulate(model, ens, opts, NoiseStream(1));
        return (traj.snapshots.back() - ref).norm();
    };
    const double e4 = terminal_error(4e-3);
    const double e1 = terminal_error(1e-3);
    const double c_fit = 1.2 * e4 / 4e-3;  // fitted once at the coarse step
    CHECK(e1 <= c_fit * 1e-3);
}

TEST_CASE("simulate: identical seeds give identical trajectories") {
    const SpectralModel model = SpectralModel::mf_ou(2, 0.5, 1.0, 0.2, 0.8);
    SimulateOptions opts;
    opts.T = 0.5;
    opts.dt = 1e-3;
    const auto t1 = simulate(model, ParticleEnsemble::zeros(64, 2), opts, NoiseStream(77));
    const auto t2 = simulate(model, ParticleEnsemble::zeros(64, 2), opts, NoiseStream(77));
    REQUIRE(t1.snapshots.size() == t2.snapshots.size());
    for (std::size_t s = 0; s < t1.snapshots.size(); ++s)
        CHECK((t1.snapshots[s] - t2.snapshots[s]).norm() == 0.0);
}

TEST_CASE("simulate: worker count does not change the trajectory") {
    const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.3, 1.0);
    // large enough to engage the parallel particle path
    SimulateOptions opts;
    opts.T = 0.02;
    opts.dt = 1e-3;
    Eigen::MatrixXd terminal[3];
    int idx = 0;
    for (int workers : {1, 2, 8}) {
        opts.workers = workers;
        const auto traj = simulate(model, ParticleEnsemble::zeros(5000, 1), opts, NoiseStream(3));
        terminal[idx++] = traj.snapshots.back();
    }
    CHECK((terminal[0] - terminal[1]).norm() == 0.0);
    CHECK((terminal[0] - terminal[2]).norm() == 0.0);
}

TEST_CASE("simulate: symmetric initial data with odd drift keeps the mean at zero") {
    const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.0, 0.5);
    Eigen::MatrixXd init(2000, 1);
    const NoiseStream draw(13);
    for (int i = 0; i < 1000; ++i) {
        const double v = draw.gaussian(static_cast<std::uint64_t>(i), 0, 0);
        init(2 * i, 0) = v;
        init(2 * i + 1, 0) = -v;
    }
    ParticleEnsemble ens;
    ens.states = init;
    SimulateOptions opts;
    opts.T = 2.0;
    opts.dt = 1e-3;
    const auto traj = simulate(model, ens, opts, NoiseStream(29));
    CHECK(std::abs(traj.snapshots.back().mean()) < 0.05);
}

TEST_CASE("simulate: ensemble mean follows the linear mean dynamics") {
    // dm/dt = -(nu i^2 + a - b) m for mode i
    const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.3, 0.2);
    ParticleEnsemble ens = ParticleEnsemble::constant(4000, Eigen::VectorXd::Ones(1));
    SimulateOptions opts;
    opts.T = 1.0;
    opts.dt = 1e-3;
    const auto traj = simulate(model, ens, opts, NoiseStream(31));
    const double want = std::exp(-0.7);
    CHECK(traj.snapshots.back().mean() == doctest::Approx(want).epsilon(0.03));
}

TEST_CASE("synchronous pair: identical ensembles stay glued") {
    const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.2, 1.0);
    SimulateOptions opts;
    opts.T = 0.3;
    opts.dt = 1e-3;
    opts.keep_snapshots = false;
    const auto ens = ParticleEnsemble::gaussian(128, 1, Eigen::VectorXd::Zero(1), 1.0, NoiseStream(7));
    const auto pair = simulate_synchronous_pair(model, ens, ens, opts, NoiseStream(8));
    for (double d : pair.mean_sq_diff) CHECK(d == 0.0);
}

TEST_CASE("synchronous pair: mf-ou contraction at rate 2a") {
    const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.0, 0.6);
    SimulateOptions opts;
    opts.T = 2.0;
    opts.dt = 1e-3;
    opts.taming = false;
    opts.keep_snapshots = false;
    const auto a = ParticleEnsemble::gaussian(256, 1, Eigen::VectorXd::Zero(1), 1.0, NoiseStream(9));
    const auto b = ParticleEnsemble::constant(256, Eigen::VectorXd::Constant(1, 2.0));
    const auto pair = simulate_synchronous_pair(model, a, b, opts, NoiseStream(10));
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < pair.times.size(); ++i) {
        ts.push_back(pair.times[i]);
        ys.push_back(std::log(pair.mean_sq_diff[i]));
    }
    const double slope = fit_line(ts, ys).slope;
    CHECK(slope == doctest::Approx(-2.0).epsilon(0.02));
}

TEST_CASE("synchronous pair: additive noise cancels in the difference") {
    SimulateOptions opts;
    opts.T = 0.5;
    opts.dt = 1e-3;
    opts.taming = false;
    opts.keep_snapshots = false;
    const auto a = ParticleEnsemble::gaussian(64, 1, Eigen::VectorXd::Zero(1), 1.0, NoiseStream(11));
    const auto b = ParticleEnsemble::gaussian(64, 1, Eigen::VectorXd::Ones(1), 0.5, NoiseStream(12));
    std::vector<double> runs[2];
    int idx = 0;
    for (double sigma : {0.3, 1.0}) {
        const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.25, sigma);
        runs[idx++] = simulate_synchronous_pair(model, a, b, opts, NoiseStream(13)).mean_sq_diff;
    }
    REQUIRE(runs[0].size() == runs[1].size());
    for (std::size_t i = 0; i < runs[0].size(); ++i)
        CHECK(runs[0][i] == doctest::Approx(runs[1][i]).epsilon(1e-12));
}

TEST_CASE("lyapunov generator: closed forms for V = |x|^2") {
    const LyapunovSpec v = LyapunovSpec::squared_norm();
    {
        const SpectralModel model = SpectralModel::mf_ou(2, 0.0, 1.0, 0.0, 0.0);
        Eigen::VectorXd x(2);
        x << 0.6, 0.8;  // ||x|| = 1
        CHECK(lyapunov_generator(model, v, x, MeasureSummary::zero(2)) ==
              doctest::Approx(-2.0).epsilon(1e-13));
    }
    {
        const SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.0, 1.0);
        Eigen::VectorXd x(1);
        x << 1.7;
        CHECK(lyapunov_generator(model, v, x, MeasureSummary::zero(1)) ==
              doctest::Approx(-2.0 * 1.7 * 1.7 + 1.0).epsilon(1e-13));
        CHECK(lyapunov_generator(model, v, Eigen::VectorXd::Zero(1), MeasureSummary::zero(1)) ==
              doctest::Approx(1.0).epsilon(1e-13));  // (1/2) tr(g g^T Hess V(0)) = sigma^2 k
    }
}

TEST_CASE("blow-up carries the offending particle and time") {
    SpectralModel model = SpectralModel::mf_ou(1, 0.0, 1.0, 0.0, 0.0);
    model.drift_profiles[0] = ScalarProfile::from_terms({{ScalarTerm::Kind::Poly, 1.0, 9.0, 0}});
    ParticleEnsemble ens = ParticleEnsemble::constant(4, Eigen::VectorXd::Constant(1, 3.0));
    SimulateOptions opts;
    opts.T = 2.0;
    opts.dt = 1e-2;
    opts.taming = false;
    bool thrown = false;
    try {
        simulate(model, ens, opts, NoiseStream(1));
    } catch (const BlowUpError& e) {
        thrown = true;
        CHECK(e.particle >= 0);
        CHECK(e.time > 0.0);
    }
    CHECK(thrown);
}

TEST_CASE("regression: mf-holder survives the long tamed run" * doctest::timeout(300)) {
    const SpectralModel model =
        SpectralModel::mf_holder(1, 0.0, 1.0, 0.5, 0.6, 0.25, 0.4, 0.4, 0.8, 100.0);
    SimulateOptions opts;
    opts.T = 50.0;
    opts.dt = 1e-3;
    opts.taming = true;
    opts.keep_snapshots = false;
    opts.stride = 1000;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        ParticleEnsemble ens = ParticleEnsemble::zeros(1000, 1);
        CHECK_NOTHROW(simulate(model, ens, opts, NoiseStream(seed)));
    }
}

TEST_CASE("dt guard: step beyond the configured maximum is rejected") {
    const SpectralModel model = SpectralModel::mf_ou(1, 0, 1, 0, 1);
    ParticleEnsemble ens = ParticleEnsemble::zeros(2, 1);
    StepOptions opts;
    opts.dt = 0.5;  // above the 1e-2 default
    CHECK_THROWS_AS(step_tamed_em_inplace(model, ens, opts, NoiseStream(1), 0), ArgumentError);
}
