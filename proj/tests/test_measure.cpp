#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "mvlab/assignment.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/noise.hpp"

using namespace mvlab;

namespace {

EmpiricalMeasure points_1d(std::initializer_list<double> xs) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(xs.size()), 1);
    int i = 0;
    for (double x : xs) pts(i++, 0) = x;
    return EmpiricalMeasure(std::move(pts));
}

EmpiricalMeasure random_measure(NoiseStream s, std::uint64_t tag, int n, int dim, double scale) {
    Eigen::MatrixXd pts(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j)
            pts(i, j) = scale * s.gaussian(tag * 1000 + static_cast<std::uint64_t>(i), 0,
                                           static_cast<std::uint32_t>(j));
    return EmpiricalMeasure(std::move(pts));
}

double brute_force_quasi(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         const LyapunovSpec& v) {
    const int n = mu.size();
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0;
        for (int i = 0; i < n; ++i)
            acc += v.phi((mu.points().row(i) - nu.points().row(perm[static_cast<std::size_t>(i)])).norm());
        best = std::min(best, acc / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("weighted_total_norm: dirac and two-point examples") {
    CHECK(weighted_total_norm(points_1d({0})) == doctest::Approx(1.0));
    CHECK(weighted_total_norm(points_1d({1})) == doctest::Approx(2.0));
    CHECK(weighted_total_norm(points_1d({0, 1})) == doctest::Approx(std::sqrt(2.5)));
    Eigen::MatrixXd pts(1, 3);
    pts << 0.6, 0.0, 0.8;  // ||x|| = 1
    CHECK(weighted_total_norm(EmpiricalMeasure(pts)) == doctest::Approx(2.0));
}

TEST_CASE("weighted_total_norm: respects nonuniform weights") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0, 1;
    Eigen::VectorXd w(2);
    w << 0.25, 0.75;
    CHECK(weighted_total_norm(EmpiricalMeasure(pts, w)) ==
          doctest::Approx(std::sqrt(0.25 + 0.75 * 4.0)));
}

TEST_CASE("w1_sorted_1d: sorted matching beats the crossing") {
    CHECK(w1_sorted_1d(points_1d({0, 2}), points_1d({1, 3})) == doctest::Approx(1.0));
    CHECK(w1_sorted_1d(points_1d({3, 1, 2}), points_1d({2, 3, 1})) == doctest::Approx(0.0));
    CHECK(w1_sorted_1d(points_1d({0}), points_1d({5})) == doctest::Approx(5.0));
}

TEST_CASE("w1_sorted_1d: triangle inequality on random triples") {
    NoiseStream s(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_measure(s, 3 * static_cast<std::uint64_t>(trial), 16, 1, 2.0);
        const auto b = random_measure(s, 3 * static_cast<std::uint64_t>(trial) + 1, 16, 1, 2.0);
        const auto c = random_measure(s, 3 * static_cast<std::uint64_t>(trial) + 2, 16, 1, 2.0);
        CHECK(w1_sorted_1d(a, c) <= w1_sorted_1d(a, b) + w1_sorted_1d(b, c) + 1e-10);
    }
}

TEST_CASE("quasi_distance_assignment: two-point oracle and trivial couplings") {
    const LyapunovSpec v = LyapunovSpec::squared_norm();
    CHECK(quasi_distance_assignment(points_1d({0, 2}), points_1d({1, 3}), v) ==
          doctest::Approx(1.0));
    const auto mu = points_1d({-1, 0.5, 2});
    CHECK(quasi_distance_assignment(mu, mu, v) == doctest::Approx(0.0));
    CHECK(quasi_distance_assignment(points_1d({1}), points_1d({4}), v) == doctest::Approx(9.0));
}

TEST_CASE("quasi_distance_assignment: equals exhaustive minimum for n <= 6") {
    NoiseStream s(41);
    const LyapunovSpec v2 = LyapunovSpec::squared_norm();
    const LyapunovSpec v3 = LyapunovSpec::power_norm(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 5;
        const int dim = 1 + trial % 3;
        const auto mu = random_measure(s, 2 * static_cast<std::uint64_t>(trial), n, dim, 1.5);
        const auto nu = random_measure(s, 2 * static_cast<std::uint64_t>(trial) + 1, n, dim, 1.5);
        const LyapunovSpec& v = (trial % 2) ? v3 : v2;
        const double got = quasi_distance_assignment(mu, nu, v);
        const double want = brute_force_quasi(mu, nu, v);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("quasi_distance_assignment: symmetric for radial V") {
    NoiseStream s(43);
    const LyapunovSpec v = LyapunovSpec::squared_norm();
    for (int trial = 0; trial < 50; ++trial) {
        const auto mu = random_measure(s, 2 * static_cast<std::uint64_t>(trial), 12, 2, 1.0);
        const auto nu = random_measure(s, 2 * static_cast<std::uint64_t>(trial) + 1, 12, 2, 1.0);
        CHECK(quasi_distance_assignment(mu, nu, v) ==
              doctest::Approx(quasi_distance_assignment(nu, mu, v)).epsilon(1e-12));
    }
}

TEST_CASE("quasi_distance_assignment: zero iff point multisets coincide") {
    const LyapunovSpec v = LyapunovSpec::squared_norm();
    const auto mu = points_1d({0.5, -1, 3, 3});
    const auto shuffled = points_1d({3, 0.5, 3, -1});
    CHECK(quasi_distance_assignment(mu, shuffled, v) == doctest::Approx(0.0));
    const auto off = points_1d({3, 0.5, 3, -1.0001});
    CHECK(quasi_distance_assignment(mu, off, v) > 0.0);
}

TEST_CASE("quasi_distance_assignment: cap and shape errors") {
    const LyapunovSpec v = LyapunovSpec::squared_norm();
    const auto big_a = random_measure(NoiseStream(1), 0, 20, 1, 1.0);
    const auto big_b = random_measure(NoiseStream(2), 1, 20, 1, 1.0);
    CHECK_THROWS_AS(quasi_distance_assignment(big_a, big_b, v, 16), ResourceError);
    CHECK_THROWS_AS(quasi_distance_assignment(points_1d({0, 1}), points_1d({0}), v),
                    UnsupportedInputError);
    Eigen::MatrixXd pts(2, 1);
    pts << 0, 1;
    Eigen::VectorXd w(2);
    w << 0.3, 0.7;
    CHECK_THROWS_AS(
        quasi_distance_assignment(EmpiricalMeasure(pts, w), points_1d({0, 1}), v),
        UnsupportedInputError);
    CHECK_THROWS_AS(w1_sorted_1d(EmpiricalMeasure(pts, w), points_1d({0, 1})),
                    UnsupportedInputError);
}

TEST_CASE("bl_distance_bounds: trivial, dirac pair, and duality direction") {
    const auto [lo0, hi0] = bl_distance_bounds(points_1d({0.3, -2}), points_1d({0.3, -2}));
    CHECK(lo0 == doctest::Approx(0.0));
    CHECK(hi0 == doctest::Approx(0.0));

    const auto [lo1, hi1] = bl_distance_bounds(points_1d({0}), points_1d({1}));
    CHECK(hi1 == doctest::Approx(1.0));
    CHECK(lo1 <= hi1);
    CHECK(lo1 > 0.0);

    NoiseStream s(47);
    for (int trial = 0; trial < 1000; ++trial) {
        const int dim = 1 + trial % 3;
        const auto mu = random_measure(s, 2 * static_cast<std::uint64_t>(trial), 8, dim, 1.2);
        const auto nu = random_measure(s, 2 * static_cast<std::uint64_t>(trial) + 1, 8, dim, 1.2);
        const auto [lo, hi] = bl_distance_bounds(mu, nu);
        CHECK(lo <= hi + 1e-12);
    }
}

TEST_CASE("empirical measure validation") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0, 1;
    Eigen::VectorXd w(2);
    w << 0.5, 0.6;  // sums to 1.1
    CHECK_THROWS_AS(EmpiricalMeasure(pts, w), ArgumentError);
    w << -0.1, 1.1;
    CHECK_THROWS_AS(EmpiricalMeasure(pts, w), ArgumentError);
}

TEST_CASE("assignment solver: rectangular or non-finite input rejected") {
    CHECK_THROWS_AS(solve_assignment(Eigen::MatrixXd::Zero(2, 3)), ArgumentError);
    Eigen::MatrixXd nanc = Eigen::MatrixXd::Zero(2, 2);
    nanc(0, 0) = std::nan("");
    CHECK_THROWS_AS(solve_assignment(nanc), ArgumentError);
}
