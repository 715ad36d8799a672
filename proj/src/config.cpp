#include "mvlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mvlab/csv.hpp"
#include "mvlab/errors.hpp"

namespace mvlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

class KeyValues {
  public:
    explicit KeyValues(const std::string& text) {
        std::stringstream ss(text);
        std::string line;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                violations.push_back({"line " + std::to_string(lineno),
                                      "expected `key = value`, got: " + line});
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (values_.count(key))
                violations.push_back({key, "duplicate key"});
            values_[key] = val;
        }
    }

    std::optional<std::string> raw(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& dflt) {
        return raw(key).value_or(dflt);
    }

    bool get_bool(const std::string& key, bool dflt) {
        auto v = raw(key);
        if (!v) return dflt;
        if (*v == "on" || *v == "true" || *v == "1") return true;
        if (*v == "off" || *v == "false" || *v == "0") return false;
        violations.push_back({key, "expected on/off"});
        return dflt;
    }

    double get_double(const std::string& key, double dflt) {
        auto v = raw(key);
        if (!v) return dflt;
        try {
            std::size_t pos = 0;
            const double x = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("trailing");
            return x;
        } catch (const std::exception&) {
            violations.push_back({key, "not a number: " + *v});
            return dflt;
        }
    }

    long long get_int(const std::string& key, long long dflt) {
        auto v = raw(key);
        if (!v) return dflt;
        try {
            std::size_t pos = 0;
            const long long x = std::stoll(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("trailing");
            return x;
        } catch (const std::exception&) {
            violations.push_back({key, "not an integer: " + *v});
            return dflt;
        }
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> dflt) {
        auto v = raw(key);
        if (!v) return dflt;
        std::vector<double> out;
        for (const auto& part : split(*v, ',')) {
            try {
                out.push_back(std::stod(part));
            } catch (const std::exception&) {
                violations.push_back({key, "not a number in list: " + part});
                return dflt;
            }
        }
        return out;
    }

    void finish() {
        for (const auto& [key, value] : values_) {
            (void)value;
            if (!used_.count(key)) violations.push_back({key, "unknown key"});
        }
    }

    std::vector<ConfigViolation> violations;

  private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

void require(std::vector<ConfigViolation>& out, bool ok, const std::string& key,
             const std::string& condition) {
    if (!ok) out.push_back({key, condition});
}

}  // namespace

std::pair<std::vector<ScalarTerm>, double> parse_terms(const std::string& text) {
    std::vector<ScalarTerm> terms;
    double mean_gain = 0;
    for (const auto& part : split(text, ';')) {
        if (part.empty()) continue;
        std::stringstream ss(part);
        double coef = 0;
        std::string spec;
        if (!(ss >> coef >> spec))
            throw ConfigError("term `" + part + "`: expected `<coef> <kind>[^exp]`");
        std::string rest;
        if (ss >> rest) throw ConfigError("term `" + part + "`: trailing input");

        double exponent = 1.0;
        const auto caret = spec.find('^');
        std::string kind = spec;
        if (caret != std::string::npos) {
            kind = spec.substr(0, caret);
            try {
                exponent = std::stod(spec.substr(caret + 1));
            } catch (const std::exception&) {
                throw ConfigError("term `" + part + "`: bad exponent");
            }
        }
        if (kind == "mean") {
            mean_gain += coef;
        } else if (kind == "const") {
            terms.push_back({ScalarTerm::Kind::Const, coef, 0, 0});
        } else if (kind == "x") {
            terms.push_back({ScalarTerm::Kind::Poly, coef, exponent, 0});
        } else if (kind == "abs") {
            terms.push_back({ScalarTerm::Kind::AbsPow, coef, exponent, 0});
        } else if (kind == "sign_abs") {
            terms.push_back({ScalarTerm::Kind::SignAbsPow, coef, exponent, 0});
        } else if (kind == "abs_cap") {
            terms.push_back({ScalarTerm::Kind::AbsCapPow, coef, exponent, 100.0});
        } else {
            throw ConfigError("term `" + part +
                              "`: unknown kind (use const, x, abs, sign_abs, abs_cap, mean)");
        }
    }
    return {terms, mean_gain};
}

namespace {

ExperimentConfig parse_and_validate(const std::string& text) {
    KeyValues kv(text);
    ExperimentConfig cfg;

    cfg.kind = kv.get_string("kind", "");
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    cfg.workers = static_cast<int>(kv.get_int("workers", 1));
    cfg.out_dir = kv.get_string("out_dir", "out");

    cfg.model_name = kv.get_string("model", "mf-ou");
    cfg.k = static_cast<int>(kv.get_int("model.k", 1));
    cfg.nu = kv.get_double("model.nu", 0.0);
    cfg.a = kv.get_double("model.a", 1.0);
    cfg.b = kv.get_double("model.b", 0.0);
    cfg.sigma = kv.get_double("model.sigma", 1.0);
    cfg.hol_c = kv.get_double("model.c", 0.5);
    cfg.hol_alpha = kv.get_double("model.alpha", 0.6);
    cfg.hol_sigma0 = kv.get_double("model.sigma0", 0.4);
    cfg.hol_sigma1 = kv.get_double("model.sigma1", 0.4);
    cfg.hol_beta = kv.get_double("model.beta", 0.8);
    cfg.x_cap = kv.get_double("model.x_cap", 100.0);
    cfg.custom_drift = kv.get_string("custom.drift", "");
    cfg.custom_diff = kv.get_string("custom.diff", "");
    cfg.custom_alpha = kv.get_double("custom.alpha", 1.0);
    cfg.custom_beta = kv.get_double("custom.beta", 1.0);
    for (int i = 1; i <= cfg.k; ++i) {
        cfg.custom_drift_per_mode.push_back(
            kv.get_string("custom.drift." + std::to_string(i), ""));
        cfg.custom_diff_per_mode.push_back(
            kv.get_string("custom.diff." + std::to_string(i), ""));
    }

    cfg.n_particles = static_cast<int>(kv.get_int("n_particles", 1000));
    cfg.dt = kv.get_double("dt", 1e-3);
    cfg.dt_max = kv.get_double("dt_max", 1e-2);
    cfg.T = kv.get_double("T", 10.0);
    cfg.burn_in = kv.get_double("burn_in", 20.0);
    cfg.taming = kv.get_bool("taming", true);
    cfg.replicas = static_cast<int>(kv.get_int("replicas", 200));
    cfg.x0 = kv.get_double("x0", 0.0);

    cfg.lyap_profile = kv.get_string("lyap.profile", "squared");
    cfg.lyap_power = kv.get_double("lyap.power", 2.0);
    cfg.delta = kv.get_double("lyap.delta", 0.0);
    cfg.delta_star = kv.get_double("lyap.delta_star", 2.0);
    cfg.delta0 = kv.get_double("lyap.delta0", 1.0);
    cfg.lyap_c = kv.get_double("lyap.c", 1.0);
    cfg.delta1 = kv.get_double("lyap.delta1", 0.0);
    cfg.delta2 = kv.get_double("lyap.delta2", 0.0);
    cfg.kappa = kv.get_double("lyap.kappa", 1.0);

    cfg.observable = kv.get_string("observable", "coord:1");
    cfg.observable_mean = kv.get_double("observable.mean", 0.0);

    cfg.mixing_t0 = kv.get_double("mixing.t0", 1.0);
    cfg.mixing_expected_rate = kv.get_double("mixing.expected_rate", -1.0);
    cfg.mixing_rate_tol = kv.get_double("mixing.rate_tol", 0.1);
    cfg.mixing_m_cap = kv.get_double("mixing.m_cap", 2.0);
    cfg.mixing_x0 = kv.get_double("mixing.x0", 2.0);

    cfg.coupling_theta_list = kv.get_list("coupling.theta_list", {0.2, 0.1, 0.05});
    cfg.coupling_vartheta = kv.get_double("coupling.vartheta", 0.25);
    cfg.coupling_ell = kv.get_double("coupling.ell", 0.03);
    cfg.coupling_radius = kv.get_double("coupling.radius", 8.0);
    cfg.coupling_T = kv.get_double("coupling.T", 2.0);
    cfg.coupling_n_particles = static_cast<int>(kv.get_int("coupling.n_particles", 32));
    cfg.coupling_mollify_level = static_cast<int>(kv.get_int("coupling.mollify_level", 0));
    cfg.coupling_g_min = kv.get_double("coupling.g_min", 1e-6);
    cfg.coupling_per_replica = kv.get_bool("coupling.per_replica", false);

    cfg.slln_k = static_cast<int>(kv.get_int("slln.k", 1));
    cfg.slln_t_grid = kv.get_list("slln.t_grid", {10, 20, 40, 80, 160});
    cfg.slln_slope_tol = kv.get_double("slln.slope_tol", 0.15);
    cfg.slln_dt = kv.get_double("slln.dt", 1e-2);

    cfg.clt_t_grid = kv.get_list("clt.t_grid", {25, 50, 100, 200});
    cfg.clt_ks_tol = kv.get_double("clt.ks_tol", 0.05);
    cfg.clt_dt = kv.get_double("clt.dt", 1e-2);

    kv.finish();
    auto violations = kv.violations;

    const std::set<std::string> kinds = {"simulate", "coupling", "mixing",
                                         "slln",     "clt",      "selftest"};
    if (cfg.kind.empty()) {
        violations.push_back(
            {"kind", "missing; allowed kinds: simulate, coupling, mixing, slln, clt, selftest"});
    } else if (!kinds.count(cfg.kind)) {
        violations.push_back({"kind", "unrecognized `" + cfg.kind +
                                          "`; allowed kinds: simulate, coupling, mixing, slln, "
                                          "clt, selftest"});
    }

    const std::set<std::string> models = {"mf-ou", "mf-holder", "custom"};
    if (!models.count(cfg.model_name))
        violations.push_back({"model", "unknown model `" + cfg.model_name +
                                           "`; catalog: mf-ou, mf-holder, custom"});

    require(violations, cfg.k >= 1, "model.k", "basis size must be >= 1");
    require(violations, cfg.nu >= 0, "model.nu", "viscosity must be >= 0");
    if (cfg.model_name == "mf-holder") {
        require(violations, cfg.hol_alpha > 0 && cfg.hol_alpha <= 1, "model.alpha",
                "Holder drift continuity requires alpha in (0, 1]");
        require(violations, cfg.hol_beta > 0.5 && cfg.hol_beta <= 1, "model.beta",
                "Holder diffusion continuity requires beta in (1/2, 1]");
        require(violations, cfg.hol_sigma0 > 0, "model.sigma0",
                "diffusion floor must be > 0 (right-inverse requirement)");
        require(violations, cfg.x_cap > 0, "model.x_cap", "growth cap must be > 0");
    }
    if (cfg.model_name == "custom") {
        require(violations, cfg.custom_alpha > 0 && cfg.custom_alpha <= 1, "custom.alpha",
                "Holder drift continuity requires alpha in (0, 1]");
        require(violations, cfg.custom_beta > 0.5 && cfg.custom_beta <= 1, "custom.beta",
                "Holder diffusion continuity requires beta in (1/2, 1]");
    }

    require(violations, cfg.n_particles >= 1, "n_particles", "need at least one particle");
    require(violations, cfg.dt > 0, "dt", "time step must be > 0");
    require(violations, cfg.dt <= cfg.dt_max, "dt",
            "time step must not exceed dt_max = " + format_double(cfg.dt_max));
    require(violations, cfg.T > 0, "T", "horizon must be > 0");
    require(violations, cfg.burn_in > 0, "burn_in", "burn-in must be > 0");
    require(violations, cfg.replicas >= 1, "replicas", "need at least one replica");
    require(violations, cfg.workers >= 1, "workers", "need at least one worker");

    require(violations, cfg.lyap_profile == "squared" || cfg.lyap_profile == "power",
            "lyap.profile", "profile must be `squared` or `power`");
    if (cfg.lyap_profile == "power")
        require(violations, cfg.lyap_power >= 2, "lyap.power", "radial power must be >= 2");
    require(violations, cfg.delta_star > 0, "lyap.delta_star", "dissipation rate must be > 0");
    require(violations, cfg.delta0 >= 0, "lyap.delta0", "dissipation offset must be >= 0");
    require(violations, cfg.lyap_c > 0, "lyap.c", "scaling constant must be > 0");

    if (cfg.kind == "coupling") {
        const double alpha = cfg.model_name == "mf-holder" ? cfg.hol_alpha : cfg.custom_alpha;
        const double beta = cfg.model_name == "mf-holder" ? cfg.hol_beta : cfg.custom_beta;
        const double vcap = std::min(alpha, 2.0 * beta - 1.0);
        require(violations, cfg.coupling_vartheta > 0 && cfg.coupling_vartheta < vcap,
                "coupling.vartheta",
                "gain exponent must lie in (0, min(alpha, 2 beta - 1)) = (0, " +
                    format_double(vcap) + ")");
        require(violations, cfg.coupling_ell > 0, "coupling.ell", "tail exponent must be > 0");
        // admissible window for ell: (0, (beta + d(1 - vartheta) - 1)/3), d < 1/2
        const double ell_cap = (beta + 0.49 * (1.0 - cfg.coupling_vartheta) - 1.0) / 3.0;
        if (ell_cap > 0 && cfg.coupling_ell >= ell_cap)
            cfg.warnings.push_back("coupling.ell = " + format_double(cfg.coupling_ell) +
                                   " is outside the admissible window (0, " +
                                   format_double(ell_cap) + "); tail fit may degrade");
        require(violations, cfg.coupling_radius > 0, "coupling.radius",
                "compact-exit radius must be > 0");
        require(violations, cfg.coupling_T > 0, "coupling.T", "horizon must be > 0");
        require(violations, cfg.coupling_n_particles >= 1, "coupling.n_particles",
                "need at least one particle");
        require(violations, cfg.coupling_mollify_level >= 0, "coupling.mollify_level",
                "level must be >= 1, or 0 for automatic selection");
        require(violations, cfg.coupling_g_min > 0, "coupling.g_min",
                "right-inverse floor must be > 0");
        for (double th : cfg.coupling_theta_list)
            require(violations, th > 0, "coupling.theta_list", "theta* values must be > 0");
    }

    if (cfg.kind == "slln") {
        require(violations, cfg.slln_k >= 1, "slln.k", "moment order must be >= 1");
        require(violations, cfg.slln_dt > 0 && cfg.slln_dt <= cfg.dt_max, "slln.dt",
                "time step must be in (0, dt_max]");
        require(violations, cfg.slln_t_grid.size() >= 2 &&
                                std::is_sorted(cfg.slln_t_grid.begin(), cfg.slln_t_grid.end()),
                "slln.t_grid", "need a sorted grid with >= 2 points");
        // Moment-rate constant: warn (not abort) when nonpositive.
        const double kk = cfg.slln_k;
        const double delta_hat =
            2.0 * kk * cfg.delta_star -
            (2.0 * kk - 1.0) * (cfg.delta0 + 2.0 * cfg.delta1 * cfg.delta1 * kk +
                                2.0 * cfg.delta2 * cfg.delta2 * (kk - 1.0));
        if (delta_hat <= 0)
            cfg.warnings.push_back(
                "slln moment-rate constant 2k delta* - (2k-1)[delta0 + 2 delta1^2 k + 2 delta2^2 "
                "(k-1)] = " +
                format_double(delta_hat) + " is not positive; the t^-k moment rate is not covered");
    }

    if (cfg.kind == "clt") {
        require(violations, cfg.clt_dt > 0 && cfg.clt_dt <= cfg.dt_max, "clt.dt",
                "time step must be in (0, dt_max]");
        require(violations, cfg.clt_t_grid.size() >= 1 &&
                                std::is_sorted(cfg.clt_t_grid.begin(), cfg.clt_t_grid.end()),
                "clt.t_grid", "need a sorted nonempty grid");
        require(violations, cfg.clt_ks_tol > 0, "clt.ks_tol", "tolerance must be > 0");
    }

    if (cfg.kind == "mixing") {
        require(violations, cfg.mixing_t0 > 0, "mixing.t0", "t0 must be > 0");
        require(violations, cfg.mixing_m_cap > 0, "mixing.m_cap", "M cap must be > 0");
    }

    if (!violations.empty()) {
        std::string msg = "config invalid:";
        for (const auto& v : violations) msg += "\n  " + v.key + ": " + v.message;
        throw ConfigError(msg);
    }

    if (cfg.model_name == "custom") {
        // parse errors surface now, with the key context
        try {
            for (int i = 0; i < cfg.k; ++i) {
                const std::string& d = cfg.custom_drift_per_mode[static_cast<std::size_t>(i)];
                const std::string& gtxt = cfg.custom_diff_per_mode[static_cast<std::size_t>(i)];
                parse_terms(d.empty() ? cfg.custom_drift : d);
                parse_terms(gtxt.empty() ? cfg.custom_diff : gtxt);
            }
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("config invalid:\n  custom model: ") + e.what());
        }
    }
    return cfg;
}

}  // namespace

ExperimentConfig config_from_text(const std::string& text) { return parse_and_validate(text); }

ExperimentConfig validate_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_and_validate(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto num = [&](const std::string& key, double v) { kv.emplace_back(key, format_double(v)); };
    auto str = [&](const std::string& key, const std::string& v) {
        if (!v.empty()) kv.emplace_back(key, v);
    };
    auto flag = [&](const std::string& key, bool v) { kv.emplace_back(key, v ? "on" : "off"); };
    auto list = [&](const std::string& key, const std::vector<double>& v) {
        std::string joined;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) joined += ", ";
            joined += format_double(v[i]);
        }
        kv.emplace_back(key, joined);
    };

    str("kind", cfg.kind);
    kv.emplace_back("seed", std::to_string(cfg.seed));
    num("workers", cfg.workers);
    str("out_dir", cfg.out_dir);
    str("model", cfg.model_name);
    num("model.k", cfg.k);
    num("model.nu", cfg.nu);
    num("model.a", cfg.a);
    num("model.b", cfg.b);
    num("model.sigma", cfg.sigma);
    num("model.c", cfg.hol_c);
    num("model.alpha", cfg.hol_alpha);
    num("model.sigma0", cfg.hol_sigma0);
    num("model.sigma1", cfg.hol_sigma1);
    num("model.beta", cfg.hol_beta);
    num("model.x_cap", cfg.x_cap);
    str("custom.drift", cfg.custom_drift);
    str("custom.diff", cfg.custom_diff);
    if (cfg.model_name == "custom") {
        num("custom.alpha", cfg.custom_alpha);
        num("custom.beta", cfg.custom_beta);
        for (int i = 0; i < cfg.k; ++i) {
            str("custom.drift." + std::to_string(i + 1),
                cfg.custom_drift_per_mode[static_cast<std::size_t>(i)]);
            str("custom.diff." + std::to_string(i + 1),
                cfg.custom_diff_per_mode[static_cast<std::size_t>(i)]);
        }
    }
    num("n_particles", cfg.n_particles);
    num("dt", cfg.dt);
    num("dt_max", cfg.dt_max);
    num("T", cfg.T);
    num("burn_in", cfg.burn_in);
    flag("taming", cfg.taming);
    num("replicas", cfg.replicas);
    num("x0", cfg.x0);
    str("lyap.profile", cfg.lyap_profile);
    num("lyap.power", cfg.lyap_power);
    num("lyap.delta", cfg.delta);
    num("lyap.delta_star", cfg.delta_star);
    num("lyap.delta0", cfg.delta0);
    num("lyap.c", cfg.lyap_c);
    num("lyap.delta1", cfg.delta1);
    num("lyap.delta2", cfg.delta2);
    num("lyap.kappa", cfg.kappa);
    str("observable", cfg.observable);
    num("observable.mean", cfg.observable_mean);
    num("mixing.t0", cfg.mixing_t0);
    num("mixing.expected_rate", cfg.mixing_expected_rate);
    num("mixing.rate_tol", cfg.mixing_rate_tol);
    num("mixing.m_cap", cfg.mixing_m_cap);
    num("mixing.x0", cfg.mixing_x0);
    list("coupling.theta_list", cfg.coupling_theta_list);
    num("coupling.vartheta", cfg.coupling_vartheta);
    num("coupling.ell", cfg.coupling_ell);
    num("coupling.radius", cfg.coupling_radius);
    num("coupling.T", cfg.coupling_T);
    num("coupling.n_particles", cfg.coupling_n_particles);
    num("coupling.mollify_level", cfg.coupling_mollify_level);
    num("coupling.g_min", cfg.coupling_g_min);
    flag("coupling.per_replica", cfg.coupling_per_replica);
    num("slln.k", cfg.slln_k);
    list("slln.t_grid", cfg.slln_t_grid);
    num("slln.slope_tol", cfg.slln_slope_tol);
    num("slln.dt", cfg.slln_dt);
    list("clt.t_grid", cfg.clt_t_grid);
    num("clt.ks_tol", cfg.clt_ks_tol);
    num("clt.dt", cfg.clt_dt);
    return kv;
}

std::string config_echo_text(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [key, value] : config_echo(cfg)) out += key + " = " + value + "\n";
    return out;
}

SpectralModel build_model(const ExperimentConfig& cfg) {
    if (cfg.model_name == "mf-ou")
        return SpectralModel::mf_ou(cfg.k, cfg.nu, cfg.a, cfg.b, cfg.sigma);
    if (cfg.model_name == "mf-holder")
        return SpectralModel::mf_holder(cfg.k, cfg.nu, cfg.a, cfg.hol_c, cfg.hol_alpha, cfg.b,
                                        cfg.hol_sigma0, cfg.hol_sigma1, cfg.hol_beta, cfg.x_cap);
    // custom expression-table model
    SpectralModel model;
    model.k = cfg.k;
    model.m = cfg.k;
    model.nu = cfg.nu;
    model.name = "custom";
    model.mean_gain = Eigen::VectorXd::Zero(cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
        const std::string& d = cfg.custom_drift_per_mode[static_cast<std::size_t>(i)];
        const std::string& g = cfg.custom_diff_per_mode[static_cast<std::size_t>(i)];
        auto [dterms, dmean] = parse_terms(d.empty() ? cfg.custom_drift : d);
        auto [gterms, gmean] = parse_terms(g.empty() ? cfg.custom_diff : g);
        if (gmean != 0) throw ConfigError("custom.diff: mean terms are not supported in g");
        model.drift_profiles.push_back(ScalarProfile::from_terms(std::move(dterms)));
        model.diff_profiles.push_back(ScalarProfile::from_terms(std::move(gterms)));
        model.mean_gain[i] = dmean;
    }
    model.constants.alpha = cfg.custom_alpha;
    model.constants.beta = cfg.custom_beta;
    model.constants.lambda1 = std::max(0.0, model.mean_gain.cwiseAbs().maxCoeff());
    model.constants.lambda2 = 1.0;
    model.constants.big_m = 1.0;
    model.validate();
    return model;
}

LyapunovSpec build_lyapunov(const ExperimentConfig& cfg) {
    LyapunovSpec v = cfg.lyap_profile == "power"
                         ? LyapunovSpec::power_norm(cfg.lyap_power, cfg.delta_star, cfg.delta0,
                                                    cfg.lyap_c)
                         : LyapunovSpec::squared_norm(cfg.delta_star, cfg.delta0, cfg.lyap_c);
    v.delta = cfg.delta;
    v.delta1 = cfg.delta1;
    v.delta2 = cfg.delta2;
    v.kappa = cfg.kappa;
    return v;
}

ObservableSpec build_observable(const ExperimentConfig& cfg) {
    ObservableSpec obs;
    if (cfg.observable.rfind("coord:", 0) == 0) {
        const int j = std::stoi(cfg.observable.substr(6));
        if (j < 1 || j > cfg.k)
            throw ConfigError("observable coordinate out of range 1.." + std::to_string(cfg.k));
        obs = ObservableSpec::coordinate(j - 1, cfg.observable_mean);
    } else if (cfg.observable == "norm2") {
        obs = ObservableSpec::norm_sq();
        obs.declared_mean = cfg.observable_mean;
    } else {
        throw ConfigError("unknown observable `" + cfg.observable +
                          "` (use coord:<j> or norm2)");
    }
    return obs;
}

}  // namespace mvlab
