#ifndef MVLAB_MEASURE_HPP
#define MVLAB_MEASURE_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <utility>

#include "mvlab/lyapunov.hpp"
#include "mvlab/model.hpp"

namespace mvlab {

// Weighted sample set standing in for a probability measure with finite
// weighted norm; weights default to uniform and must sum to 1.
class EmpiricalMeasure {
  public:
    EmpiricalMeasure() = default;
    explicit EmpiricalMeasure(Eigen::MatrixXd points);  // uniform weights
    EmpiricalMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights);

    int size() const { return static_cast<int>(points_.rows()); }
    int dim() const { return static_cast<int>(points_.cols()); }
    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    bool uniform() const { return uniform_; }

    Eigen::VectorXd mean() const;
    double second_moment() const;  // E ||x||^2
    MeasureSummary summary() const;

    // Deterministic stride subsample with at most cap points (uniform only).
    EmpiricalMeasure subsample(int cap) const;

    static EmpiricalMeasure dirac(const Eigen::VectorXd& x);

  private:
    void validate() const;
    Eigen::MatrixXd points_;  // one row per sample
    Eigen::VectorXd weights_;
    bool uniform_ = true;
};

// [ sum_i w_i (1 + ||x_i||)^2 ]^{1/2}.
double weighted_total_norm(const EmpiricalMeasure& mu);

// Exact 1-d 1-Wasserstein distance via sorted matching (uniform weights,
// equal support sizes).
double w1_sorted_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Exact min over permutations of (1/n) sum V(x_i - y_{pi(i)}) by optimal
// linear assignment; supports up to `cap` points.
double quasi_distance_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 const LyapunovSpec& V, int cap = 512);

// Certified (lower, upper) bounds on the bounded-Lipschitz-type metric:
// upper = W1 by optimal assignment, lower = best admissible test function
// from a fixed family (coordinate maps and clipped radial maps, scaled so the
// weighted-sup + Lipschitz norm stays <= 1).
std::pair<double, double> bl_distance_bounds(const EmpiricalMeasure& mu,
                                             const EmpiricalMeasure& nu);

// One row per point, columns x_1..x_k.
void write_measure_csv(const EmpiricalMeasure& mu, const std::filesystem::path& path);

}  // namespace mvlab

#endif
