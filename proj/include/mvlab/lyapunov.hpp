#ifndef MVLAB_LYAPUNOV_HPP
#define MVLAB_LYAPUNOV_HPP

#include <Eigen/Dense>

namespace mvlab {

// Radial Lyapunov function V(x) = phi(||x||) with phi(0) = 0 and phi
// nondecreasing, together with the dissipativity constants used by the
// ergodicity and limit-theorem experiments.
struct LyapunovSpec {
    enum class Profile { SquaredNorm, PowerNorm };

    Profile profile = Profile::SquaredNorm;
    double power = 2.0;  // exponent p >= 2 for PowerNorm

    double delta = 0;       // target contraction rate
    double delta_star = 0;  // dissipation rate
    double delta0 = 0;      // dissipation offset
    double c = 1.0;         // scaling in V(x - y) <= M [V(cx) + V(cy)]
    double delta1 = 0;      // gradient-diffusion constants
    double delta2 = 0;
    double kappa = 1.0;

    // c* = c^2 for c >= 1, c otherwise.
    double c_star() const { return c >= 1.0 ? c * c : c; }

    double phi(double r) const;
    double dphi(double r) const;
    double ddphi(double r) const;

    double value(const Eigen::VectorXd& x) const { return phi(x.norm()); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    // (1/2) tr(Hess V(x) g g^T) for the generator's Ito correction.
    double half_hessian_trace(const Eigen::VectorXd& x, const Eigen::MatrixXd& g) const;

    static LyapunovSpec squared_norm(double delta_star = 0, double delta0 = 0, double c = 1.0);
    static LyapunovSpec power_norm(double p, double delta_star = 0, double delta0 = 0,
                                   double c = 1.0);
};

}  // namespace mvlab

#endif
