#include "mvlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvlab/assignment.hpp"
#include "mvlab/csv.hpp"
#include "mvlab/errors.hpp"

namespace mvlab {

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd points) : points_(std::move(points)) {
    weights_ = Eigen::VectorXd::Constant(points_.rows(), 1.0 / static_cast<double>(points_.rows()));
    uniform_ = true;
    validate();
}

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    uniform_ = false;
    if (weights_.size() > 0) {
        const double w0 = weights_[0];
        uniform_ = ((weights_.array() - w0).abs() < 1e-15).all();
    }
    validate();
}

void EmpiricalMeasure::validate() const {
    if (points_.rows() == 0) throw ArgumentError("EmpiricalMeasure: empty support");
    if (!points_.allFinite()) throw ArgumentError("EmpiricalMeasure: points must be finite");
    if (weights_.size() != points_.rows())
        throw ArgumentError("EmpiricalMeasure: weights/points size mismatch");
    if ((weights_.array() < 0).any()) throw ArgumentError("EmpiricalMeasure: negative weight");
    if (std::abs(weights_.sum() - 1.0) > 1e-12)
        throw ArgumentError("EmpiricalMeasure: weights must sum to 1 (within 1e-12)");
}

Eigen::VectorXd EmpiricalMeasure::mean() const {
    return points_.transpose() * weights_;
}

double EmpiricalMeasure::second_moment() const {
    return points_.rowwise().squaredNorm().dot(weights_);
}

MeasureSummary EmpiricalMeasure::summary() const {
    MeasureSummary s;
    s.mean = mean();
    s.second_moment = second_moment();
    s.sample_handle = this;
    return s;
}

EmpiricalMeasure EmpiricalMeasure::subsample(int cap) const {
    if (size() <= cap) return *this;
    if (!uniform_) throw UnsupportedInputError("subsample: uniform weights required");
    Eigen::MatrixXd pts(cap, dim());
    for (int i = 0; i < cap; ++i) {
        const auto idx = static_cast<Eigen::Index>(
            static_cast<long long>(i) * size() / cap);
        pts.row(i) = points_.row(idx);
    }
    return EmpiricalMeasure(std::move(pts));
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Eigen::VectorXd& x) {
    Eigen::MatrixXd pts(1, x.size());
    pts.row(0) = x;
    return EmpiricalMeasure(std::move(pts));
}

double weighted_total_norm(const EmpiricalMeasure& mu) {
    double acc = 0;
    for (int i = 0; i < mu.size(); ++i) {
        const double r = mu.points().row(i).norm();
        acc += mu.weights()[i] * (1.0 + r) * (1.0 + r);
    }
    return std::sqrt(acc);
}

namespace {

void require_transport_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() != nu.size())
        throw UnsupportedInputError("transport ops require equal support sizes");
    if (mu.dim() != nu.dim())
        throw UnsupportedInputError("transport ops require equal dimensions");
    if (!mu.uniform() || !nu.uniform())
        throw UnsupportedInputError("transport ops require uniform weights");
}

}  // namespace

double w1_sorted_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require_transport_pair(mu, nu);
    if (mu.dim() != 1) throw UnsupportedInputError("w1_sorted_1d: 1-d measures required");
    std::vector<double> a(static_cast<std::size_t>(mu.size()));
    std::vector<double> b(static_cast<std::size_t>(nu.size()));
    for (int i = 0; i < mu.size(); ++i) a[static_cast<std::size_t>(i)] = mu.points()(i, 0);
    for (int i = 0; i < nu.size(); ++i) b[static_cast<std::size_t>(i)] = nu.points()(i, 0);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

double quasi_distance_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 const LyapunovSpec& V, int cap) {
    require_transport_pair(mu, nu);
    const int n = mu.size();
    if (n > cap)
        throw ResourceError("quasi_distance_assignment: support size " + std::to_string(n) +
                            " exceeds cap " + std::to_string(cap));
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost(i, j) = V.phi((mu.points().row(i) - nu.points().row(j)).norm());
    return solve_assignment(cost).cost / static_cast<double>(n);
}

std::pair<double, double> bl_distance_bounds(const EmpiricalMeasure& mu,
                                             const EmpiricalMeasure& nu) {
    require_transport_pair(mu, nu);
    const int n = mu.size();
    const int k = mu.dim();

    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost(i, j) = (mu.points().row(i) - nu.points().row(j)).norm();
    const double upper = solve_assignment(cost).cost / static_cast<double>(n);

    // Admissible test family: Lip <= c and weighted sup <= c/4 (since
    // r/(1+r)^2 <= 1/4), so the BL norm is at most 1.25c; c = 0.8 keeps it <= 1.
    const double scale = 0.8;
    double lower = 0;
    auto gap = [&](auto&& fn) {
        double a = 0, b = 0;
        for (int i = 0; i < n; ++i) {
            a += fn(mu.points().row(i));
            b += fn(nu.points().row(i));
        }
        return std::abs(a - b) / static_cast<double>(n);
    };
    for (int j = 0; j < k; ++j)
        lower = std::max(lower, gap([&](const auto& row) { return scale * row[j]; }));
    for (double clip : {0.5, 1.0, 2.0, 5.0, 10.0})
        lower = std::max(lower,
                         gap([&](const auto& row) { return scale * std::min(row.norm(), clip); }));
    lower = std::min(lower, upper);  // duality guarantees this; guard against roundoff
    return {lower, upper};
}

void write_measure_csv(const EmpiricalMeasure& mu, const std::filesystem::path& path) {
    std::vector<std::string> header;
    for (int j = 0; j < mu.dim(); ++j) header.push_back("x_" + std::to_string(j + 1));
    CsvWriter csv(path, header);
    std::vector<double> row(static_cast<std::size_t>(mu.dim()));
    for (int i = 0; i < mu.size(); ++i) {
        for (int j = 0; j < mu.dim(); ++j) row[static_cast<std::size_t>(j)] = mu.points()(i, j);
        csv.row(row);
    }
}

}  // namespace mvlab
