#include "mvlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvlab {

void AssumptionConstants::validate() const {
    if (!(lambda2 > 0)) throw ArgumentError("AssumptionConstants: lambda2 must be > 0");
    if (!(big_m > 0)) throw ArgumentError("AssumptionConstants: M must be > 0");
    if (!(alpha > 0 && alpha <= 1)) throw ArgumentError("AssumptionConstants: alpha must be in (0,1]");
    if (!(beta > 0.5 && beta <= 1))
        throw ArgumentError("AssumptionConstants: beta must be in (1/2,1]");
}

void ModulusSpec::validate_shape(int grid_points) const {
    if (!g_fn) throw ArgumentError("ModulusSpec: missing g_fn");
    if (std::abs(g_fn(0.0)) > 1e-12) throw ArgumentError("ModulusSpec: G(0) must be 0");
    const double hi = 1.0 - 1e-9;
    double prev = g_fn(0.0);
    for (int i = 1; i < grid_points; ++i) {
        const double r = hi * static_cast<double>(i) / (grid_points - 1);
        const double v = g_fn(r);
        if (!(v >= 0) || !std::isfinite(v)) throw ArgumentError("ModulusSpec: G must be finite and >= 0");
        if (v + 1e-12 < prev) throw ArgumentError("ModulusSpec: G must be nondecreasing");
        prev = v;
    }
    // midpoint concavity on the sampled grid
    for (int i = 0; i + 2 < grid_points; i += 2) {
        const double a = hi * static_cast<double>(i) / (grid_points - 1);
        const double b = hi * static_cast<double>(i + 2) / (grid_points - 1);
        const double mid = 0.5 * (a + b);
        if (g_fn(mid) + 1e-10 < 0.5 * (g_fn(a) + g_fn(b)))
            throw ArgumentError("ModulusSpec: G fails the midpoint concavity test");
    }
}

ModulusSpec ModulusSpec::linear() {
    ModulusSpec s;
    s.g_fn = [](double r) { return r; };
    s.name = "linear";
    return s;
}

ModulusSpec ModulusSpec::sqrt_mod() {
    ModulusSpec s;
    s.g_fn = [](double r) { return std::sqrt(r); };
    s.name = "sqrt";
    return s;
}

void MeasureSummary::validate() const {
    if (!mean.allFinite()) throw ArgumentError("MeasureSummary: mean must be finite");
    if (!(second_moment >= 0)) throw ArgumentError("MeasureSummary: second moment must be >= 0");
    if (second_moment + 1e-9 < mean.squaredNorm())
        throw ArgumentError("MeasureSummary: second moment below ||mean||^2");
}

double MeasureSummary::norm_surrogate() const { return 1.0 + std::sqrt(second_moment); }

MeasureSummary MeasureSummary::zero(int dim) {
    MeasureSummary s;
    s.mean = Eigen::VectorXd::Zero(dim);
    s.second_moment = 0;
    return s;
}

double ScalarTerm::eval(double x) const {
    switch (kind) {
        case Kind::Const:
            return coef;
        case Kind::Poly:
            return coef * std::pow(x, exponent);
        case Kind::AbsPow:
            return coef * std::pow(std::abs(x), exponent);
        case Kind::SignAbsPow: {
            const double s = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
            return coef * s * std::pow(std::abs(x), exponent);
        }
        case Kind::AbsCapPow:
            return coef * std::pow(std::min(std::abs(x), cap), exponent);
    }
    return 0;
}

ScalarProfile ScalarProfile::from_terms(std::vector<ScalarTerm> terms) {
    ScalarProfile p;
    p.terms_ = std::move(terms);
    return p;
}

ScalarProfile ScalarProfile::tabulated(Eigen::VectorXd grid, Eigen::VectorXd values,
                                       double lipschitz) {
    if (grid.size() != values.size() || grid.size() < 2)
        throw ArgumentError("ScalarProfile: tabulated profile needs >= 2 nodes");
    ScalarProfile p;
    p.tabulated_ = true;
    p.grid_ = std::move(grid);
    p.values_ = std::move(values);
    p.lipschitz_ = lipschitz;
    return p;
}

double ScalarProfile::operator()(double x) const {
    if (!tabulated_) {
        double s = 0;
        for (const auto& t : terms_) s += t.eval(x);
        return s;
    }
    const double lo = grid_[0], hi = grid_[grid_.size() - 1];
    // outside the window the envelope is exactly linear with slope +-n
    if (x <= lo) return values_[0] + lipschitz_ * (lo - x);
    if (x >= hi) return values_[values_.size() - 1] + lipschitz_ * (x - hi);
    const double h = (hi - lo) / static_cast<double>(grid_.size() - 1);
    const auto i = static_cast<Eigen::Index>((x - lo) / h);
    const auto j = std::min(i + 1, grid_.size() - 1);
    const double frac = h > 0 ? (x - grid_[i]) / h : 0.0;
    return values_[i] * (1.0 - frac) + values_[j] * frac;
}

void SpectralModel::validate() const {
    if (k < 1) throw ArgumentError("SpectralModel: k must be >= 1");
    if (m < 1) throw ArgumentError("SpectralModel: m must be >= 1");
    if (!(nu >= 0)) throw ArgumentError("SpectralModel: nu must be >= 0");
    if (!(coercivity_p >= 2)) throw ArgumentError("SpectralModel: p must be >= 2");
    if (static_cast<int>(drift_profiles.size()) != k)
        throw ArgumentError("SpectralModel: need one drift profile per mode");
    if (static_cast<int>(diff_profiles.size()) != std::min(k, m))
        throw ArgumentError("SpectralModel: need one diffusion profile per active mode");
    if (mean_gain.size() != k) throw ArgumentError("SpectralModel: mean_gain size mismatch");
    constants.validate();
    modulus.validate_shape();
}

SpectralModel SpectralModel::mf_ou(int k, double nu, double a, double b, double sigma) {
    SpectralModel mod;
    mod.k = k;
    mod.m = k;
    mod.nu = nu;
    mod.name = "mf-ou";
    mod.mean_gain = Eigen::VectorXd::Constant(k, b);
    for (int i = 0; i < k; ++i) {
        mod.drift_profiles.push_back(
            ScalarProfile::from_terms({{ScalarTerm::Kind::Poly, -a, 1.0, 0}}));
        mod.diff_profiles.push_back(
            ScalarProfile::from_terms({{ScalarTerm::Kind::Const, sigma, 0, 0}}));
    }
    mod.constants.alpha = 1.0;
    mod.constants.beta = 1.0;
    mod.constants.lambda1 = std::max(0.0, b);
    mod.constants.lambda2 =
        std::max({std::abs(a), std::abs(b), sigma, 1e-6}) + nu * static_cast<double>(k) * k;
    mod.constants.big_m = sigma * std::sqrt(static_cast<double>(k)) + 1.0;
    mod.modulus = ModulusSpec::linear();
    mod.validate();
    return mod;
}

SpectralModel SpectralModel::mf_holder(int k, double nu, double a, double c, double alpha,
                                       double b, double sigma0, double sigma1, double beta,
                                       double x_cap) {
    SpectralModel mod;
    mod.k = k;
    mod.m = k;
    mod.nu = nu;
    mod.name = "mf-holder";
    mod.mean_gain = Eigen::VectorXd::Constant(k, b);
    for (int i = 0; i < k; ++i) {
        mod.drift_profiles.push_back(ScalarProfile::from_terms(
            {{ScalarTerm::Kind::Poly, -a, 1.0, 0}, {ScalarTerm::Kind::SignAbsPow, -c, alpha, 0}}));
        mod.diff_profiles.push_back(ScalarProfile::from_terms(
            {{ScalarTerm::Kind::Const, sigma0, 0, 0},
             {ScalarTerm::Kind::AbsCapPow, sigma1, beta, x_cap}}));
    }
    const double root_k = std::sqrt(static_cast<double>(k));
    mod.constants.alpha = alpha;
    mod.constants.beta = beta;
    // an expansive kink (c < 0) is one-sided Holder with constant
    // |c| 2^{1-alpha} via |sign(x)|x|^a - sign(y)|y|^a| <= 2^{1-a} |x-y|^a
    mod.constants.lambda1 =
        std::max(0.0, b) + (c < 0 ? -c * std::pow(2.0, 1.0 - alpha) : 0.0);
    mod.constants.lambda2 = std::abs(a) + std::abs(b) + std::abs(c) * root_k +
                            sigma1 * std::pow(static_cast<double>(k), 0.5 * (1.0 - beta)) +
                            nu * static_cast<double>(k) * k + sigma0;
    mod.constants.big_m =
        std::abs(c) * root_k + root_k * (sigma0 + sigma1 * std::pow(x_cap, beta)) + 1.0;
    mod.modulus = ModulusSpec::linear();
    mod.validate();
    return mod;
}

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw ModelEvalError(std::string(what) + " produced a non-finite value at mode " +
                                 std::to_string(i + 1));
    }
}

}  // namespace

Eigen::VectorXd eval_f(const SpectralModel& model, const Eigen::VectorXd& x,
                       const MeasureSummary& mu) {
    if (x.size() != model.k) throw ArgumentError("eval_f: state dimension mismatch");
    Eigen::VectorXd f(model.k);
    for (int i = 0; i < model.k; ++i)
        f[i] = model.drift_profiles[static_cast<std::size_t>(i)](x[i]) + model.mean_gain[i] * mu.mean[i];
    check_finite(f, "drift f");
    return f;
}

Eigen::VectorXd eval_drift(const SpectralModel& model, const Eigen::VectorXd& x,
                           const MeasureSummary& mu) {
    Eigen::VectorXd b = eval_f(model, x, mu);
    if (model.nu != 0) {
        for (int i = 0; i < model.k; ++i) {
            const double lam = static_cast<double>(i + 1) * static_cast<double>(i + 1);
            b[i] -= model.nu * lam * x[i];
        }
    }
    check_finite(b, "drift");
    return b;
}

Eigen::MatrixXd eval_diffusion(const SpectralModel& model, const Eigen::VectorXd& x,
                               const MeasureSummary& mu) {
    (void)mu;  // catalog diffusion reads the state only
    if (x.size() != model.k) throw ArgumentError("eval_diffusion: state dimension mismatch");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(model.k, model.m);
    const int active = std::min(model.k, model.m);
    for (int i = 0; i < active; ++i) {
        const double v = model.diff_profiles[static_cast<std::size_t>(i)](x[i]);
        if (!std::isfinite(v))
            throw ModelEvalError("diffusion g produced a non-finite value at mode " +
                                 std::to_string(i + 1));
        g(i, i) = v;
    }
    return g;
}

namespace {

// Exact discrete Pasch-Hausdorff transform on a uniform grid: two sweeps.
Eigen::VectorXd envelope_values(const Eigen::VectorXd& vals, double h, double n) {
    Eigen::VectorXd env = vals;
    for (Eigen::Index i = 1; i < env.size(); ++i)
        env[i] = std::min(env[i], env[i - 1] + n * h);
    for (Eigen::Index i = env.size() - 2; i >= 0; --i)
        env[i] = std::min(env[i], env[i + 1] + n * h);
    return env;
}

ScalarProfile mollify_profile(const ScalarProfile& profile, int n, double window,
                              int grid_points) {
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_points, -window, window);
    Eigen::VectorXd vals(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        vals[i] = profile(grid[i]);
        if (!std::isfinite(vals[i]))
            throw MollifyError("coefficient is not finite on the probe window (x = " +
                               std::to_string(grid[i]) + ")");
    }
    const double h = 2.0 * window / static_cast<double>(grid_points - 1);
    return ScalarProfile::tabulated(std::move(grid), envelope_values(vals, h, n),
                                    static_cast<double>(n));
}

}  // namespace

SpectralModel mollify(const SpectralModel& model, int n, double window, int grid_points) {
    if (n < 1) throw ArgumentError("mollify: level n must be >= 1");
    if (grid_points < 3) throw ArgumentError("mollify: need at least 3 grid points");
    SpectralModel out = model;
    for (auto& p : out.drift_profiles) p = mollify_profile(p, n, window, grid_points);
    for (auto& p : out.diff_profiles) p = mollify_profile(p, n, window, grid_points);
    out.name = model.name + "|env" + std::to_string(n);
    return out;
}

std::pair<double, double> mollification_gaps(const SpectralModel& original,
                                             const SpectralModel& mollified, double radius,
                                             int probe_points) {
    double drift_gap = 0, diff_gap = 0;
    for (int i = 0; i < probe_points; ++i) {
        const double x =
            -radius + 2.0 * radius * static_cast<double>(i) / (probe_points - 1);
        for (std::size_t j = 0; j < original.drift_profiles.size(); ++j)
            drift_gap = std::max(drift_gap,
                                 std::abs(original.drift_profiles[j](x) -
                                          mollified.drift_profiles[j](x)));
        for (std::size_t j = 0; j < original.diff_profiles.size(); ++j)
            diff_gap = std::max(diff_gap, std::abs(original.diff_profiles[j](x) -
                                                   mollified.diff_profiles[j](x)));
    }
    return {drift_gap, diff_gap};
}

OsgoodDiagnostic osgood_diagnostic(const ModulusSpec& modulus, std::vector<double> epsilons,
                                   double threshold) {
    OsgoodDiagnostic diag;
    diag.threshold = threshold;
    diag.epsilons = epsilons.empty()
                        ? std::vector<double>{1e-2, 1e-4, 1e-6, 1e-12, 1e-18, 1e-24, 1e-30}
                        : std::move(epsilons);
    // int_eps^1 dr / G(r) with r = e^s: int_{ln eps}^0 e^s / G(e^s) ds.
    for (double eps : diag.epsilons) {
        const double s_lo = std::log(eps);
        const int steps = std::max(64, static_cast<int>(std::ceil(-s_lo * 200.0)));
        const double ds = -s_lo / static_cast<double>(steps);
        double acc = 0;
        auto integrand = [&](double s) {
            const double r = std::exp(s);
            const double g = modulus.g_fn(std::min(r, 1.0 - 1e-12));
            return g > 0 ? r / g : 0.0;
        };
        double prev = integrand(s_lo);
        for (int i = 1; i <= steps; ++i) {
            const double cur = integrand(s_lo + ds * static_cast<double>(i));
            acc += 0.5 * (prev + cur) * ds;
            prev = cur;
        }
        diag.integrals.push_back(acc);
    }
    bool increasing = true;
    for (std::size_t i = 1; i < diag.integrals.size(); ++i)
        increasing = increasing && diag.integrals[i] > diag.integrals[i - 1] + 1e-12;
    diag.divergent = increasing && diag.integrals.back() > threshold;
    diag.ratio_grid = {1e-4, 1e-8, 1e-12};
    for (double r : diag.ratio_grid) diag.ratio_values.push_back(modulus.g_fn(r) / std::sqrt(r));
    diag.ratio_vanishes = true;
    for (std::size_t i = 1; i < diag.ratio_values.size(); ++i)
        diag.ratio_vanishes = diag.ratio_vanishes && diag.ratio_values[i] <= diag.ratio_values[i - 1] + 1e-12;
    diag.ratio_vanishes = diag.ratio_vanishes && diag.ratio_values.back() < 0.5 * diag.ratio_values.front() + 1e-12;
    return diag;
}

AssumptionReport probe_assumptions(const SpectralModel& model,
                                   const std::vector<AssumptionProbe>& probes) {
    if (probes.empty()) throw ArgumentError("probe_assumptions: empty probe set");
    const auto& c = model.constants;
    AssumptionReport rep;
    rep.coercivity_margin = -std::numeric_limits<double>::infinity();
    rep.growth_margin = -std::numeric_limits<double>::infinity();
    rep.drift_holder_margin = -std::numeric_limits<double>::infinity();
    rep.diffusion_holder_margin = -std::numeric_limits<double>::infinity();

    for (const auto& p : probes) {
        const Eigen::VectorXd bx = eval_drift(model, p.x, p.mu);
        const Eigen::MatrixXd gx = eval_diffusion(model, p.x, p.mu);
        const double mu_norm = p.mu.norm_surrogate();

        const double coer = bx.dot(p.x) -
                            c.lambda1 * (p.x.squaredNorm() + mu_norm * mu_norm) - c.big_m;
        rep.coercivity_margin = std::max(rep.coercivity_margin, coer);

        const double growth = std::max(bx.norm(), gx.norm()) -
                              c.lambda2 * (p.x.norm() + mu_norm) - c.big_m;
        rep.growth_margin = std::max(rep.growth_margin, growth);

        // local Holder clauses: only pairs with ||x-y|| <= 1 and d <= 1
        const Eigen::VectorXd diff = p.x - p.y;
        const double r = diff.norm();
        const double dmean = (p.mu.mean - p.nu.mean).norm();
        const double dm2 = std::sqrt(std::max(p.mu.second_moment, 0.0)) -
                           std::sqrt(std::max(p.nu.second_moment, 0.0));
        const double d = std::sqrt(dmean * dmean + dm2 * dm2);
        if (r <= 1.0 && d <= 1.0) {
            ++rep.local_pairs;
            const Eigen::VectorXd fx = eval_f(model, p.x, p.mu);
            const Eigen::VectorXd fy = eval_f(model, p.y, p.nu);
            const double drift_m =
                (fx - fy).dot(diff) - c.lambda1 * (std::pow(r, c.alpha + 1.0) + d * d);
            rep.drift_holder_margin = std::max(rep.drift_holder_margin, drift_m);

            const Eigen::MatrixXd gy = eval_diffusion(model, p.y, p.nu);
            const double diff_m =
                (gx - gy).norm() - c.lambda2 * (std::pow(r, c.beta) + d);
            rep.diffusion_holder_margin = std::max(rep.diffusion_holder_margin, diff_m);
        }
    }
    if (rep.local_pairs == 0)
        throw ArgumentError("probe_assumptions: no local pairs (need ||x-y|| <= 1)");

    rep.osgood = osgood_diagnostic(model.modulus);
    rep.pass = rep.coercivity_margin <= 0 && rep.growth_margin <= 0 &&
               rep.drift_holder_margin <= 0 && rep.diffusion_holder_margin <= 0;
    return rep;
}

}  // namespace mvlab
