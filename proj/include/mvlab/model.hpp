#ifndef MVLAB_MODEL_HPP
#define MVLAB_MODEL_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mvlab/errors.hpp"

namespace mvlab {

class EmpiricalMeasure;

// Constants of the coercivity / growth / Holder assumptions the probes check.
struct AssumptionConstants {
    double lambda1 = 0;
    double lambda2 = 1;
    double big_m = 1;
    double alpha = 1;   // drift Holder exponent, in (0, 1]
    double beta = 1;    // diffusion Holder exponent, in (1/2, 1]
    void validate() const;
};

// Weak-monotonicity modulus: increasing, concave, continuous on [0,1) with
// g_fn(0) = 0.
struct ModulusSpec {
    std::function<double(double)> g_fn;
    std::string name = "linear";

    void validate_shape(int grid_points = 65) const;

    static ModulusSpec linear();     // r       (Osgood-divergent)
    static ModulusSpec sqrt_mod();   // sqrt(r) (Osgood-convergent)
};

// Finite statistics through which coefficients read the law of the state.
struct MeasureSummary {
    Eigen::VectorXd mean;
    double second_moment = 0;  // E ||x||^2
    const EmpiricalMeasure* sample_handle = nullptr;

    void validate() const;
    // Upper surrogate for the weighted measure norm, 1 + sqrt(E||x||^2).
    double norm_surrogate() const;
    static MeasureSummary zero(int dim);
};

// One term of a per-mode scalar coefficient profile.
struct ScalarTerm {
    enum class Kind { Const, Poly, AbsPow, SignAbsPow, AbsCapPow };
    Kind kind = Kind::Const;
    double coef = 0;
    double exponent = 1;
    double cap = 100;  // only AbsCapPow

    double eval(double x) const;
};

// Per-mode scalar profile: a term table, or a tabulated function (used for
// mollified coefficients) with linear interpolation and exact slope-n
// extension outside the table window.
class ScalarProfile {
  public:
    ScalarProfile() = default;

    static ScalarProfile from_terms(std::vector<ScalarTerm> terms);
    static ScalarProfile tabulated(Eigen::VectorXd grid, Eigen::VectorXd values, double lipschitz);

    double operator()(double x) const;
    bool is_tabulated() const { return tabulated_; }
    const std::vector<ScalarTerm>& terms() const { return terms_; }

  private:
    std::vector<ScalarTerm> terms_;
    bool tabulated_ = false;
    Eigen::VectorXd grid_;
    Eigen::VectorXd values_;
    double lipschitz_ = 0;
};

// Galerkin-truncated mean-field model on the first k Dirichlet sine modes of
// (0, pi). States are mode coefficients in R^k; the linear part is
// nu * diag(-1, -4, ..., -k^2). Drift and diffusion are diagonal-by-mode:
//   f_i(x, mu) = profile_i(x_i) + mean_gain_i * mean_i(mu)
//   g_ii(x)    = diff_profile_i(x_i)          (i < min(k, m))
struct SpectralModel {
    int k = 1;
    int m = 1;
    double nu = 0;
    double coercivity_p = 2;
    AssumptionConstants constants;
    ModulusSpec modulus = ModulusSpec::linear();

    std::vector<ScalarProfile> drift_profiles;
    Eigen::VectorXd mean_gain;
    std::vector<ScalarProfile> diff_profiles;

    std::string name = "custom";

    void validate() const;

    // Catalog families.
    static SpectralModel mf_ou(int k, double nu, double a, double b, double sigma);
    static SpectralModel mf_holder(int k, double nu, double a, double c, double alpha, double b,
                                   double sigma0, double sigma1, double beta, double x_cap = 100);
};

// nu * Lambda x + f(x, mu).
Eigen::VectorXd eval_drift(const SpectralModel& model, const Eigen::VectorXd& x,
                           const MeasureSummary& mu);

// f(x, mu) alone (no spectral Laplacian), used by the Holder probes.
Eigen::VectorXd eval_f(const SpectralModel& model, const Eigen::VectorXd& x,
                       const MeasureSummary& mu);

// k x m diffusion matrix.
Eigen::MatrixXd eval_diffusion(const SpectralModel& model, const Eigen::VectorXd& x,
                               const MeasureSummary& mu);

// Pasch-Hausdorff envelope F^n(y) = inf_z [F(z) + n |y - z|] of every scalar
// profile, computed on a uniform grid over [-window, window]. The result is
// n-Lipschitz, sits below the original, and converges to it pointwise on
// compacts as n grows.
SpectralModel mollify(const SpectralModel& model, int n, double window = 10.0,
                      int grid_points = 4001);

// Largest sup-deviation of the mollified coefficients from the originals over
// [-radius, radius]: (drift gap, diffusion gap).
std::pair<double, double> mollification_gaps(const SpectralModel& original,
                                             const SpectralModel& mollified, double radius,
                                             int probe_points = 2001);

struct AssumptionProbe {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    MeasureSummary mu;
    MeasureSummary nu;
};

struct OsgoodDiagnostic {
    std::vector<double> epsilons;
    std::vector<double> integrals;      // int_eps^1 dr / G(r)
    double threshold = 50.0;
    bool divergent = false;
    std::vector<double> ratio_grid;     // r where G(r)/sqrt(r) is sampled
    std::vector<double> ratio_values;   // recorded, never gated on
    bool ratio_vanishes = false;
};

struct AssumptionReport {
    double coercivity_margin = 0;        // worst <F(x,mu), x> - lambda1(...) - M
    double growth_margin = 0;            // worst ||F|| v ||g|| - lambda2(...) - M
    double drift_holder_margin = 0;      // worst <f(x,mu)-f(y,nu), x-y> - lambda1(...)
    double diffusion_holder_margin = 0;  // worst ||g(x,mu)-g(y,nu)|| - lambda2(...)
    int local_pairs = 0;                 // probes with ||x-y|| <= 1 and d <= 1
    bool pass = false;
    OsgoodDiagnostic osgood;
};

AssumptionReport probe_assumptions(const SpectralModel& model,
                                   const std::vector<AssumptionProbe>& probes);

// Osgood divergence diagnostic alone (also run by probe_assumptions).
OsgoodDiagnostic osgood_diagnostic(const ModulusSpec& modulus,
                                   std::vector<double> epsilons = {}, double threshold = 50.0);

}  // namespace mvlab

#endif
