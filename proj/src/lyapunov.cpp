#include "mvlab/lyapunov.hpp"

#include <cmath>

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {
constexpr double kRadialEps = 1e-12;
}

double LyapunovSpec::phi(double r) const {
    if (profile == Profile::SquaredNorm) return r * r;
    return std::pow(r, power);
}

double LyapunovSpec::dphi(double r) const {
    if (profile == Profile::SquaredNorm) return 2.0 * r;
    return power * std::pow(r, power - 1.0);
}

double LyapunovSpec::ddphi(double r) const {
    if (profile == Profile::SquaredNorm) return 2.0;
    return power * (power - 1.0) * std::pow(r, power - 2.0);
}

Eigen::VectorXd LyapunovSpec::gradient(const Eigen::VectorXd& x) const {
    const double r = x.norm();
    if (r < kRadialEps) return Eigen::VectorXd::Zero(x.size());
    return (dphi(r) / r) * x;
}

double LyapunovSpec::half_hessian_trace(const Eigen::VectorXd& x, const Eigen::MatrixXd& g) const {
    // Hess V = phi'' xx^T/r^2 + (phi'/r)(I - xx^T/r^2); feed it g g^T.
    const double r = x.norm();
    const double tr_ggt = g.squaredNorm();
    if (r < kRadialEps) {
        if (profile == Profile::SquaredNorm || power == 2.0) return tr_ggt;
        return 0.0;  // p > 2: Hessian vanishes at the origin
    }
    const double quad = (g.transpose() * x).squaredNorm() / (r * r);  // x^T g g^T x / r^2
    return 0.5 * (ddphi(r) * quad + dphi(r) / r * (tr_ggt - quad));
}

LyapunovSpec LyapunovSpec::squared_norm(double delta_star, double delta0, double c) {
    LyapunovSpec v;
    v.profile = Profile::SquaredNorm;
    v.power = 2.0;
    v.delta_star = delta_star;
    v.delta0 = delta0;
    v.c = c;
    return v;
}

LyapunovSpec LyapunovSpec::power_norm(double p, double delta_star, double delta0, double c) {
    if (p < 2.0) throw ArgumentError("LyapunovSpec: power profile requires p >= 2");
    LyapunovSpec v;
    v.profile = Profile::PowerNorm;
    v.power = p;
    v.delta_star = delta_star;
    v.delta0 = delta0;
    v.c = c;
    return v;
}

}  // namespace mvlab
