#ifndef NETMIG_SIMULATE_HPP
#define NETMIG_SIMULATE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "netmig/csv.hpp"
#include "netmig/dataset.hpp"
#include "netmig/design.hpp"
#include "netmig/errors.hpp"
#include "netmig/panel.hpp"
#include "netmig/rng.hpp"
#include "netmig/spatial.hpp"
#include "netmig/weights.hpp"

namespace netmig {

/// Generator settings for synthetic panels and cross-sections. The six
/// coefficients follow the design column order const, r_diff, d_diff,
/// a_share, s_diff, f_diff. The exogenous-shape fields control the raw
/// series; defaults keep every raw column positive and every rate inside
/// its valid range.
struct SimConfig {
    int n_regions = 20;
    int n_periods = 10;
    std::vector<double> true_coefficients;
    double sigma_e = 0.0; // idiosyncratic noise scale
    double sigma_u = 0.0; // region effect scale
    double rho = 0.0;     // spatial lag coefficient (cross-section scenarios)
    double lambda = 0.0;  // spatial error coefficient (cross-section scenarios)
    std::uint64_t master_seed = 1;
    int replications = 200;

    double growth_log_mean = 0.02; // levels evolve by exp(N(mean, sd)) factors
    double growth_log_sd = 0.25;
    double unemployment_low = 0.05;
    double unemployment_high = 0.75;
    double agri_share_low = 0.05;
    double agri_share_high = 0.65;

    void validate() const {
        if (n_regions < 2) throw InputError("sim config: n_regions must be >= 2");
        if (n_periods < 2) throw InputError("sim config: n_periods must be >= 2");
        if (sigma_e < 0.0 || sigma_u < 0.0) throw InputError("sim config: sigmas must be >= 0");
        if (rho != 0.0 && lambda != 0.0)
            throw InputError("sim config: at most one of rho/lambda may be nonzero");
        if (replications < 1) throw InputError("sim config: replications must be >= 1");
        if (growth_log_sd < 0.0) throw InputError("sim config: growth_log_sd must be >= 0");
    }
};

/// Panel generated together with the exact regression inputs it encodes, for
/// round-trip verification against the dataset pipeline.
struct SimulatedPanel {
    PanelDataset panel;
    DesignMatrix intended_design;   // regressors before noise enters anywhere
    Eigen::VectorXd region_effects; // one per region, order of `panel.regions()`
};

namespace detail {

inline void check_rate_ranges(const SimConfig& c) {
    if (!(c.unemployment_low < c.unemployment_high) || c.unemployment_low < 0.0 ||
        c.unemployment_high > 1.0)
        throw InfeasibleBackSolveError(
            "simulate_panel: unemployment range must satisfy 0 <= low < high <= 1");
    if (!(c.agri_share_low < c.agri_share_high) || c.agri_share_low < 0.0 ||
        c.agri_share_high > 1.0)
        throw InfeasibleBackSolveError(
            "simulate_panel: agricultural share range must satisfy 0 <= low < high <= 1");
}

} // namespace detail

/// Draw a synthetic balanced panel whose raw columns back-solve the intended
/// regression exactly: levels evolve multiplicatively (growth rates stay
/// above -1), rates are drawn inside their valid ranges, the response
/// sm_pa = X beta + u_region + eps is stored as net_migration = sm_pa *
/// active_pop. Reconstructing the variables from the returned panel
/// reproduces `intended_design` up to roundoff.
inline SimulatedPanel simulate_panel_detailed(const SimConfig& config,
                                              const std::vector<Region>& regions) {
    config.validate();
    detail::check_rate_ranges(config);
    if (static_cast<int>(regions.size()) != config.n_regions)
        throw DimensionMismatchError("simulate_panel: regions list does not match n_regions");
    if (config.true_coefficients.size() != 6)
        throw InputError("simulate_panel: needs 6 coefficients (const, r_diff, d_diff, a_share, "
                         "s_diff, f_diff)");
    if (config.rho != 0.0 || config.lambda != 0.0)
        throw InputError("simulate_panel: spatial parameters do not enter the panel generator");

    const std::size_t n = static_cast<std::size_t>(config.n_regions);
    const std::size_t ny = static_cast<std::size_t>(config.n_periods);
    std::vector<int> years;
    for (std::size_t t = 0; t < ny; ++t) years.push_back(2000 + static_cast<int>(t));

    Rng rng(derive_seed(config.master_seed, 0));
    std::vector<Observation> obs(n * ny);
    // Fixed draw order: per region, initial levels, then per year the level
    // growth factors and the rate draws.
    for (std::size_t r = 0; r < n; ++r) {
        double active = 4.0e5 * std::exp(rng.normal(0.0, 0.5));
        double output = 5.0e9 * std::exp(rng.normal(0.0, 0.7));
        double total_emp = 3.0e5 * std::exp(rng.normal(0.0, 0.5));
        double wage = 100.0 * std::exp(rng.normal(0.0, 0.2));
        double housing = 1.5e5 * std::exp(rng.normal(0.0, 0.5));
        for (std::size_t t = 0; t < ny; ++t) {
            if (t > 0) {
                output *= std::exp(rng.normal(config.growth_log_mean, config.growth_log_sd));
                wage *= std::exp(rng.normal(config.growth_log_mean, config.growth_log_sd));
                housing *= std::exp(rng.normal(config.growth_log_mean, config.growth_log_sd));
                active *= std::exp(rng.normal(0.0, 0.02));
                total_emp *= std::exp(rng.normal(0.0, 0.05));
            }
            Observation& o = obs[r * ny + t];
            o.net_migration = 0.0;
            o.active_pop = active;
            o.real_output = output;
            o.unemployment_rate = rng.uniform(config.unemployment_low, config.unemployment_high);
            o.agri_employment =
                rng.uniform(config.agri_share_low, config.agri_share_high) * total_emp;
            o.total_employment = total_emp;
            o.wage_index = wage;
            o.housing_stock = housing;
        }
    }

    // The regressors are whatever the dataset pipeline derives from the raw
    // series; the response is then composed from them, so reconstruction is
    // exact by construction.
    PanelDataset provisional(regions, years, obs);
    const MigrationVariables vars = build_migration_variables(provisional);
    DesignMatrix design = to_panel_design(vars);

    Eigen::VectorXd beta(6);
    for (int j = 0; j < 6; ++j) beta(j) = config.true_coefficients[static_cast<std::size_t>(j)];

    Eigen::VectorXd effects(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r)
        effects(static_cast<Eigen::Index>(r)) = config.sigma_u > 0.0 ? rng.normal(0.0, config.sigma_u) : 0.0;

    design.response = design.regressors * beta;
    const std::size_t nt = ny - 1;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t t = 0; t < nt; ++t) {
            const Eigen::Index row = static_cast<Eigen::Index>(r * nt + t);
            double y = design.response(row) + effects(static_cast<Eigen::Index>(r));
            if (config.sigma_e > 0.0) y += rng.normal(0.0, config.sigma_e);
            design.response(row) = y;
            obs[r * ny + (t + 1)].net_migration = y * obs[r * ny + (t + 1)].active_pop;
        }
    }

    SimulatedPanel out{PanelDataset(regions, years, std::move(obs)), std::move(design),
                       std::move(effects)};
    return out;
}

inline PanelDataset simulate_panel(const SimConfig& config, const std::vector<Region>& regions) {
    return simulate_panel_detailed(config, regions).panel;
}

/// Spatial-lag cross-section y = (I - rho W)^{-1} (X beta + eps) by direct
/// linear solve; X is an intercept plus standard-normal columns.
inline DesignMatrix simulate_sar_cross_section(int n, const SpatialWeights& w, double rho,
                                               const Eigen::VectorXd& beta, double sigma,
                                               std::uint64_t seed) {
    if (n != static_cast<int>(w.n()))
        throw DimensionMismatchError("simulate_sar_cross_section: n does not match weights");
    if (beta.size() < 1) throw InputError("simulate_sar_cross_section: beta must be nonempty");
    if (sigma < 0.0) throw InputError("simulate_sar_cross_section: sigma must be >= 0");

    Rng rng(seed);
    const Eigen::Index k = beta.size();
    DesignMatrix d;
    d.regressors.resize(n, k);
    d.column_names.push_back("const");
    for (Eigen::Index j = 1; j < k; ++j) d.column_names.push_back("x" + std::to_string(j));
    for (Eigen::Index i = 0; i < n; ++i) {
        d.regressors(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < k; ++j) d.regressors(i, j) = rng.normal();
    }
    Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
    if (sigma > 0.0)
        for (Eigen::Index i = 0; i < n; ++i) eps(i) = rng.normal(0.0, sigma);

    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) - rho * w.matrix;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
        throw SingularSystemError("simulate_sar_cross_section: I - rho W is singular at rho = " +
                                  std::to_string(rho));
    d.response = lu.solve(d.regressors * beta + eps);
    for (const auto& id : w.region_order) d.row_keys.push_back(RowKey{id, 0});
    d.validate();
    return d;
}

/// Spatial-error cross-section y = X beta + (I - lambda W)^{-1} xi.
inline DesignMatrix simulate_sem_cross_section(int n, const SpatialWeights& w, double lambda,
                                               const Eigen::VectorXd& beta, double sigma,
                                               std::uint64_t seed) {
    if (n != static_cast<int>(w.n()))
        throw DimensionMismatchError("simulate_sem_cross_section: n does not match weights");
    if (beta.size() < 1) throw InputError("simulate_sem_cross_section: beta must be nonempty");
    if (sigma < 0.0) throw InputError("simulate_sem_cross_section: sigma must be >= 0");

    Rng rng(seed);
    const Eigen::Index k = beta.size();
    DesignMatrix d;
    d.regressors.resize(n, k);
    d.column_names.push_back("const");
    for (Eigen::Index j = 1; j < k; ++j) d.column_names.push_back("x" + std::to_string(j));
    for (Eigen::Index i = 0; i < n; ++i) {
        d.regressors(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < k; ++j) d.regressors(i, j) = rng.normal();
    }
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
    if (sigma > 0.0)
        for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.normal(0.0, sigma);

    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - lambda * w.matrix;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
        throw SingularSystemError("simulate_sem_cross_section: I - lambda W is singular at lambda = " +
                                  std::to_string(lambda));
    d.response = d.regressors * beta + lu.solve(xi);
    for (const auto& id : w.region_order) d.row_keys.push_back(RowKey{id, 0});
    d.validate();
    return d;
}

/// Generic balanced panel y_it = intercept + x_it' slopes + u_i + eps_it with
/// standard-normal regressors. Used by estimator recovery studies that do not
/// need the migration variable structure.
inline DesignMatrix simulate_generic_panel(int n_regions, int n_periods, double intercept,
                                           const Eigen::VectorXd& slopes, double sigma_u,
                                           double sigma_e, std::uint64_t seed) {
    if (n_regions < 2 || n_periods < 2)
        throw InputError("simulate_generic_panel: needs >= 2 regions and >= 2 periods");
    if (slopes.size() < 1) throw InputError("simulate_generic_panel: needs >= 1 slope");
    if (sigma_u < 0.0 || sigma_e < 0.0)
        throw InputError("simulate_generic_panel: sigmas must be >= 0");

    Rng rng(seed);
    const Eigen::Index rows = static_cast<Eigen::Index>(n_regions) * n_periods;
    const Eigen::Index ks = slopes.size();
    DesignMatrix d;
    d.regressors.resize(rows, ks + 1);
    d.response.resize(rows);
    d.column_names.push_back("const");
    for (Eigen::Index j = 0; j < ks; ++j) d.column_names.push_back("x" + std::to_string(j + 1));

    Eigen::Index row = 0;
    for (int i = 0; i < n_regions; ++i) {
        const double u = sigma_u > 0.0 ? rng.normal(0.0, sigma_u) : 0.0;
        char id[16];
        std::snprintf(id, sizeof id, "P%03d", i + 1);
        for (int t = 0; t < n_periods; ++t, ++row) {
            d.regressors(row, 0) = 1.0;
            double y = intercept + u;
            for (Eigen::Index j = 0; j < ks; ++j) {
                const double x = rng.normal();
                d.regressors(row, j + 1) = x;
                y += slopes(j) * x;
            }
            if (sigma_e > 0.0) y += rng.normal(0.0, sigma_e);
            d.response(row) = y;
            d.row_keys.push_back(RowKey{id, t + 1});
        }
    }
    d.validate();
    return d;
}

enum class McEstimator { Ols, FixedEffects, RandomEffects, Sar, Sem };

inline const char* to_string(McEstimator e) {
    switch (e) {
        case McEstimator::Ols: return "ols";
        case McEstimator::FixedEffects: return "fe";
        case McEstimator::RandomEffects: return "re";
        case McEstimator::Sar: return "sar";
        case McEstimator::Sem: return "sem";
    }
    return "?";
}

inline McEstimator parse_estimator(const std::string& s) {
    if (s == "ols") return McEstimator::Ols;
    if (s == "fe") return McEstimator::FixedEffects;
    if (s == "re") return McEstimator::RandomEffects;
    if (s == "sar") return McEstimator::Sar;
    if (s == "sem") return McEstimator::Sem;
    throw ParseError("unknown estimator '" + s + "' (expected ols|fe|re|sar|sem)");
}

struct McParameterSummary {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double estimate_sd = 0.0;  // dispersion across replications
    double mc_std_error = 0.0; // sd / sqrt(replications used)
    double coverage95 = 0.0;   // share of reps whose 95% CI covers truth
};

struct McSummary {
    McEstimator estimator = McEstimator::Ols;
    std::vector<McParameterSummary> parameters;
    int replications_requested = 0;
    int replications_used = 0;
    int replications_failed = 0;
};

namespace detail {

struct McDraw {
    Eigen::VectorXd estimates;
    Eigen::VectorXd std_errors;
};

/// z such that a normal 95% interval is estimate +/- z * se.
inline double coverage_z() { return normal_upper_quantile(0.025); }

inline McSummary aggregate_mc(McEstimator estimator, const std::vector<std::string>& names,
                              const Eigen::VectorXd& truth, const std::vector<McDraw>& draws,
                              int requested, int failed) {
    McSummary s;
    s.estimator = estimator;
    s.replications_requested = requested;
    s.replications_failed = failed;
    s.replications_used = static_cast<int>(draws.size());
    if (draws.size() < 1) throw DegenerateSampleError("monte carlo: every replication failed");

    const double z = coverage_z();
    const double used = static_cast<double>(draws.size());
    for (Eigen::Index p = 0; p < truth.size(); ++p) {
        McParameterSummary ps;
        ps.name = names[static_cast<std::size_t>(p)];
        ps.truth = truth(p);
        double sum = 0.0, sumsq_err = 0.0, covered = 0.0;
        for (const auto& d : draws) {
            sum += d.estimates(p);
            const double err = d.estimates(p) - truth(p);
            sumsq_err += err * err;
            if (std::isfinite(d.std_errors(p)) && std::abs(err) <= z * d.std_errors(p))
                covered += 1.0;
        }
        ps.mean_estimate = sum / used;
        ps.bias = ps.mean_estimate - truth(p);
        ps.rmse = std::sqrt(sumsq_err / used);
        double ss = 0.0;
        for (const auto& d : draws) {
            const double dev = d.estimates(p) - ps.mean_estimate;
            ss += dev * dev;
        }
        ps.estimate_sd = std::sqrt(ss / used);
        ps.mc_std_error = ps.estimate_sd / std::sqrt(used);
        ps.coverage95 = covered / used;
        s.parameters.push_back(std::move(ps));
    }
    return s;
}

} // namespace detail

/// Repeated simulate-and-estimate study. Replication r draws its data from
/// the seed derived for stream r, so any replication can be reproduced in
/// isolation; `seed_override` substitutes that scheme (used by degenerate
/// determinism checks). Spatial estimators require `weights`. Failures of
/// individual replications are counted, not fatal.
inline McSummary monte_carlo_recovery(const SimConfig& config, McEstimator estimator,
                                      const SpatialWeights* weights = nullptr,
                                      const std::function<std::uint64_t(int)>& seed_override = {}) {
    config.validate();
    if (config.replications < 2) throw InputError("monte carlo: needs >= 2 replications");

    const bool spatial = estimator == McEstimator::Sar || estimator == McEstimator::Sem;
    if (spatial && !weights)
        throw InputError("monte carlo: spatial estimators need a weights matrix");

    std::vector<std::string> names;
    Eigen::VectorXd truth;
    std::vector<Region> regions;
    Eigen::VectorXd beta;

    if (spatial) {
        if (config.true_coefficients.empty())
            throw InputError("monte carlo: true_coefficients must be set");
        beta.resize(static_cast<Eigen::Index>(config.true_coefficients.size()));
        for (std::size_t j = 0; j < config.true_coefficients.size(); ++j)
            beta(static_cast<Eigen::Index>(j)) = config.true_coefficients[j];
        const double param = estimator == McEstimator::Sar ? config.rho : config.lambda;
        truth.resize(beta.size() + 1);
        truth(0) = param;
        truth.segment(1, beta.size()) = beta;
        names.push_back(estimator == McEstimator::Sar ? "rho" : "lambda");
        names.push_back("const");
        for (Eigen::Index j = 1; j < beta.size(); ++j) names.push_back("x" + std::to_string(j));
    } else {
        regions = synthetic_regions(config.n_regions);
        if (config.true_coefficients.size() != 6)
            throw InputError("monte carlo: panel estimators need 6 coefficients");
        const std::vector<std::string> cols = {"const",   "r_diff", "d_diff",
                                               "a_share", "s_diff", "f_diff"};
        const bool drop_const = estimator == McEstimator::FixedEffects;
        for (std::size_t j = drop_const ? 1u : 0u; j < cols.size(); ++j) {
            names.push_back(cols[j]);
        }
        truth.resize(static_cast<Eigen::Index>(names.size()));
        for (std::size_t j = 0; j < names.size(); ++j)
            truth(static_cast<Eigen::Index>(j)) =
                config.true_coefficients[j + (drop_const ? 1u : 0u)];
    }

    std::optional<SpatialContext> ctx;
    if (spatial) ctx.emplace(*weights);

    std::vector<detail::McDraw> draws;
    draws.reserve(static_cast<std::size_t>(config.replications));
    int failed = 0;
    for (int r = 0; r < config.replications; ++r) {
        const std::uint64_t seed =
            seed_override ? seed_override(r)
                          : derive_seed(config.master_seed, static_cast<std::uint64_t>(r));
        try {
            detail::McDraw draw;
            if (estimator == McEstimator::Sar) {
                const DesignMatrix d = simulate_sar_cross_section(
                    static_cast<int>(weights->n()), *weights, config.rho, beta, config.sigma_e, seed);
                const SpatialFit fit = ml_sar(d, *ctx);
                draw.estimates.resize(truth.size());
                draw.std_errors.resize(truth.size());
                draw.estimates(0) = fit.rho_or_lambda;
                draw.std_errors(0) = fit.rho_std_error;
                draw.estimates.segment(1, beta.size()) = fit.coefficients;
                draw.std_errors.segment(1, beta.size()) = fit.coefficient_std_errors;
            } else if (estimator == McEstimator::Sem) {
                const DesignMatrix d = simulate_sem_cross_section(
                    static_cast<int>(weights->n()), *weights, config.lambda, beta, config.sigma_e,
                    seed);
                const SpatialFit fit = ml_sem(d, *ctx);
                draw.estimates.resize(truth.size());
                draw.std_errors.resize(truth.size());
                draw.estimates(0) = fit.rho_or_lambda;
                draw.std_errors(0) = fit.rho_std_error;
                draw.estimates.segment(1, beta.size()) = fit.coefficients;
                draw.std_errors.segment(1, beta.size()) = fit.coefficient_std_errors;
            } else {
                SimConfig rep = config;
                rep.master_seed = seed;
                const PanelDataset panel = simulate_panel(rep, regions);
                const DesignMatrix d = to_panel_design(build_migration_variables(panel));
                if (estimator == McEstimator::Ols) {
                    const OlsFit fit = ols_fit(d);
                    draw.estimates = fit.coefficients;
                    draw.std_errors = fit.std_errors;
                } else if (estimator == McEstimator::FixedEffects) {
                    const PanelFit fit = fe_lsdv(d);
                    draw.estimates = fit.slope_coefficients;
                    draw.std_errors = fit.slope_std_errors;
                } else {
                    const PanelFit fit = re_gls(d);
                    draw.estimates.resize(truth.size());
                    draw.std_errors.resize(truth.size());
                    draw.estimates(0) = fit.intercept;
                    draw.std_errors(0) = fit.intercept_std_error;
                    draw.estimates.segment(1, fit.slope_coefficients.size()) = fit.slope_coefficients;
                    draw.std_errors.segment(1, fit.slope_coefficients.size()) = fit.slope_std_errors;
                }
            }
            draws.push_back(std::move(draw));
        } catch (const Error&) {
            ++failed;
        }
    }
    return detail::aggregate_mc(estimator, names, truth, draws, config.replications, failed);
}

/// Scenario file: `key = value` lines, '#' comments. Keys mirror the
/// SimConfig fields plus `estimator`; `true_coefficients` is comma-separated.
struct Scenario {
    SimConfig config;
    McEstimator estimator = McEstimator::Ols;
};

inline Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);

    Scenario sc;
    std::vector<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t");
            return s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ParseError(ctx + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(ctx + ": empty key");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ParseError(ctx + ": duplicate key '" + key + "'");
        seen.push_back(key);

        SimConfig& c = sc.config;
        if (key == "estimator") {
            sc.estimator = parse_estimator(value);
        } else if (key == "n_regions") {
            c.n_regions = static_cast<int>(csv::parse_long(value, ctx + " " + key));
        } else if (key == "n_periods") {
            c.n_periods = static_cast<int>(csv::parse_long(value, ctx + " " + key));
        } else if (key == "true_coefficients") {
            c.true_coefficients.clear();
            std::size_t start = 0;
            while (start <= value.size()) {
                auto comma = value.find(',', start);
                if (comma == std::string::npos) comma = value.size();
                c.true_coefficients.push_back(
                    csv::parse_double(trim(value.substr(start, comma - start)), ctx + " " + key));
                start = comma + 1;
            }
        } else if (key == "sigma_e") {
            c.sigma_e = csv::parse_double(value, ctx + " " + key);
        } else if (key == "sigma_u") {
            c.sigma_u = csv::parse_double(value, ctx + " " + key);
        } else if (key == "rho") {
            c.rho = csv::parse_double(value, ctx + " " + key);
        } else if (key == "lambda") {
            c.lambda = csv::parse_double(value, ctx + " " + key);
        } else if (key == "master_seed") {
            c.master_seed = static_cast<std::uint64_t>(csv::parse_long(value, ctx + " " + key));
        } else if (key == "replications") {
            c.replications = static_cast<int>(csv::parse_long(value, ctx + " " + key));
        } else if (key == "growth_log_mean") {
            c.growth_log_mean = csv::parse_double(value, ctx + " " + key);
        } else if (key == "growth_log_sd") {
            c.growth_log_sd = csv::parse_double(value, ctx + " " + key);
        } else if (key == "unemployment_low") {
            c.unemployment_low = csv::parse_double(value, ctx + " " + key);
        } else if (key == "unemployment_high") {
            c.unemployment_high = csv::parse_double(value, ctx + " " + key);
        } else if (key == "agri_share_low") {
            c.agri_share_low = csv::parse_double(value, ctx + " " + key);
        } else if (key == "agri_share_high") {
            c.agri_share_high = csv::parse_double(value, ctx + " " + key);
        } else {
            throw ParseError(ctx + ": unknown key '" + key + "'");
        }
    }
    return sc;
}

/// Recovery summary as CSV with full double precision.
inline void save_mc_summary_csv(const McSummary& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path);
    out << "parameter,truth,mean_estimate,bias,rmse,estimate_sd,mc_std_error,coverage95,"
           "replications_used,replications_failed\n";
    char buf[512];
    for (const auto& p : s.parameters) {
        std::snprintf(buf, sizeof buf,
                      "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", p.name.c_str(),
                      p.truth, p.mean_estimate, p.bias, p.rmse, p.estimate_sd, p.mc_std_error,
                      p.coverage95, s.replications_used, s.replications_failed);
        out << buf;
    }
}

/// Panel CSV in the loader's schema.
inline void save_panel_csv(const PanelDataset& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path);
    out << "region_id,year,net_migration,active_pop,real_output,unemployment_rate,"
           "agri_employment,total_employment,wage_index,housing_stock\n";
    char buf[768];
    for (std::size_t r = 0; r < panel.n_regions(); ++r) {
        for (std::size_t t = 0; t < panel.n_years(); ++t) {
            const Observation& o = panel.at(r, t);
            std::snprintf(buf, sizeof buf,
                          "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          panel.regions()[r].id.c_str(), panel.years()[t], o.net_migration,
                          o.active_pop, o.real_output, o.unemployment_rate, o.agri_employment,
                          o.total_employment, o.wage_index, o.housing_stock);
            out << buf;
        }
    }
}

} // namespace netmig

#endif // NETMIG_SIMULATE_HPP
