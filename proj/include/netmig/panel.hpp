#ifndef NETMIG_PANEL_HPP
#define NETMIG_PANEL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "netmig/design.hpp"
#include "netmig/distributions.hpp"
#include "netmig/errors.hpp"
#include "netmig/lsq.hpp"

namespace netmig {

enum class PanelMethod { Lsdv, Gls };

/// Panel estimate. Slope entries exclude the intercept and any unit dummies;
/// LSDV carries per-region intercepts, GLS carries the common intercept and
/// the Swamy-Arora variance components.
struct PanelFit {
    PanelMethod method = PanelMethod::Lsdv;

    std::vector<std::string> slope_names;
    Eigen::VectorXd slope_coefficients;
    Eigen::MatrixXd slope_covariance;
    Eigen::VectorXd slope_std_errors;
    Eigen::VectorXd slope_t_stats;
    Eigen::VectorXd slope_p_values;

    std::vector<std::string> region_order;
    Eigen::VectorXd region_effects; // LSDV: per-region intercepts

    // GLS pieces (zero/unused for LSDV except sigma2_e)
    double intercept = 0.0;
    double intercept_std_error = 0.0;
    double intercept_t_stat = 0.0;
    double intercept_p_value = 1.0;
    double sigma2_u = 0.0;
    double sigma2_e = 0.0;
    double theta = 0.0;
    bool sigma2_u_clamped = false;

    Eigen::VectorXd residuals; // LSDV scale for FE, quasi-demeaned scale for GLS
    double r_squared = 0.0;
    bool r_squared_defined = true;
    double see = 0.0;
    Eigen::Index df = 0;
    Eigen::Index n_regions = 0;
    Eigen::Index n_periods = 0;
};

namespace detail {

struct PanelLayout {
    std::vector<std::string> region_order;
    std::vector<std::vector<Eigen::Index>> rows_per_region; // each sorted by year
    Eigen::Index n_periods = 0;
    Eigen::Index intercept_col = -1;
    std::vector<Eigen::Index> slope_cols;
    std::vector<std::string> slope_names;
};

inline PanelLayout panel_layout(const DesignMatrix& design) {
    design.validate();
    if (design.row_keys.empty())
        throw DimensionMismatchError("panel estimators need region-year row keys");
    PanelLayout layout;
    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (Eigen::Index r = 0; r < design.n(); ++r)
        groups[design.row_keys[static_cast<std::size_t>(r)].region_id].push_back(r);
    for (auto& [id, rows] : groups) {
        std::sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) {
            return design.row_keys[static_cast<std::size_t>(a)].year <
                   design.row_keys[static_cast<std::size_t>(b)].year;
        });
        layout.region_order.push_back(id);
        layout.rows_per_region.push_back(rows);
    }
    if (layout.region_order.size() < 2)
        throw DimensionMismatchError("panel estimators need at least 2 regions");
    layout.n_periods = static_cast<Eigen::Index>(layout.rows_per_region.front().size());
    for (const auto& rows : layout.rows_per_region)
        if (static_cast<Eigen::Index>(rows.size()) != layout.n_periods)
            throw UnbalancedPanelError("panel estimators require a balanced panel");
    if (layout.n_periods < 2)
        throw DimensionMismatchError("panel estimators need at least 2 usable periods");

    layout.intercept_col = design.intercept_column();
    for (Eigen::Index j = 0; j < design.k(); ++j) {
        if (j == layout.intercept_col) continue;
        layout.slope_cols.push_back(j);
        layout.slope_names.push_back(design.column_names[static_cast<std::size_t>(j)]);
    }
    if (layout.slope_cols.empty())
        throw RankDeficientError("panel estimators need at least one non-constant regressor");
    return layout;
}

struct GroupMeans {
    Eigen::VectorXd y_mean;   // per region
    Eigen::MatrixXd x_mean;   // n_regions x k_slopes
};

inline GroupMeans group_means(const DesignMatrix& design, const PanelLayout& layout) {
    const Eigen::Index g = static_cast<Eigen::Index>(layout.region_order.size());
    const Eigen::Index ks = static_cast<Eigen::Index>(layout.slope_cols.size());
    GroupMeans m;
    m.y_mean = Eigen::VectorXd::Zero(g);
    m.x_mean = Eigen::MatrixXd::Zero(g, ks);
    for (Eigen::Index i = 0; i < g; ++i) {
        const auto& rows = layout.rows_per_region[static_cast<std::size_t>(i)];
        for (Eigen::Index r : rows) {
            m.y_mean(i) += design.response(r);
            for (Eigen::Index s = 0; s < ks; ++s)
                m.x_mean(i, s) += design.regressors(r, layout.slope_cols[static_cast<std::size_t>(s)]);
        }
        m.y_mean(i) /= static_cast<double>(rows.size());
        m.x_mean.row(i) /= static_cast<double>(rows.size());
    }
    return m;
}

} // namespace detail

/// Fixed effects by the within transformation; numerically identical to OLS
/// with explicit region dummies. Slope variance uses df = n - k - n_regions.
inline PanelFit fe_lsdv(const DesignMatrix& design) {
    const auto layout = detail::panel_layout(design);
    const auto means = detail::group_means(design, layout);
    const Eigen::Index n = design.n();
    const Eigen::Index g = static_cast<Eigen::Index>(layout.region_order.size());
    const Eigen::Index ks = static_cast<Eigen::Index>(layout.slope_cols.size());

    Eigen::VectorXd y_w(n);
    Eigen::MatrixXd x_w(n, ks);
    for (Eigen::Index i = 0; i < g; ++i) {
        for (Eigen::Index r : layout.rows_per_region[static_cast<std::size_t>(i)]) {
            y_w(r) = design.response(r) - means.y_mean(i);
            for (Eigen::Index s = 0; s < ks; ++s)
                x_w(r, s) = design.regressors(r, layout.slope_cols[static_cast<std::size_t>(s)]) -
                            means.x_mean(i, s);
        }
    }
    for (Eigen::Index s = 0; s < ks; ++s) {
        const double base =
            design.regressors.col(layout.slope_cols[static_cast<std::size_t>(s)]).norm();
        if (x_w.col(s).norm() <= 1e-12 * std::max(1.0, base))
            throw RankDeficientError("regressor '" + layout.slope_names[static_cast<std::size_t>(s)] +
                                     "' is constant within every region");
    }

    DesignMatrix within;
    within.response = y_w;
    within.regressors = x_w;
    within.column_names = layout.slope_names;
    within.row_keys = design.row_keys;
    within.validate();
    auto factor = factorize_design(within);

    PanelFit fit;
    fit.method = PanelMethod::Lsdv;
    fit.slope_names = layout.slope_names;
    fit.region_order = layout.region_order;
    fit.n_regions = g;
    fit.n_periods = layout.n_periods;
    fit.slope_coefficients = factor->solve(y_w);
    fit.residuals = y_w - x_w * fit.slope_coefficients;

    fit.df = n - ks - g;
    if (fit.df <= 0) throw RankDeficientError("fixed effects leave no residual degrees of freedom");
    const double ssr = fit.residuals.squaredNorm();
    fit.sigma2_e = ssr / static_cast<double>(fit.df);
    fit.see = std::sqrt(fit.sigma2_e);
    fit.slope_covariance = fit.sigma2_e * factor->xtx_inverse;
    fit.slope_std_errors = fit.slope_covariance.diagonal().array().sqrt();
    fit.slope_t_stats.resize(ks);
    fit.slope_p_values.resize(ks);
    for (Eigen::Index s = 0; s < ks; ++s) {
        fit.slope_t_stats(s) = fit.slope_coefficients(s) / fit.slope_std_errors(s);
        fit.slope_p_values(s) = t_two_sided_p(fit.slope_t_stats(s), static_cast<double>(fit.df));
    }

    fit.region_effects = means.y_mean - means.x_mean * fit.slope_coefficients;

    const double y_mean_all = design.response.mean();
    const double tss = (design.response.array() - y_mean_all).square().sum();
    if (tss > 0.0) {
        fit.r_squared = 1.0 - ssr / tss;
        fit.r_squared_defined = true;
    } else {
        fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        fit.r_squared_defined = false;
    }
    return fit;
}

/// Random effects by feasible GLS with Swamy-Arora components: sigma2_e from
/// the within residuals, sigma2_u from the between regression (clamped at
/// zero), then OLS on theta-quasi-demeaned data.
inline PanelFit re_gls(const DesignMatrix& design) {
    const auto layout = detail::panel_layout(design);
    if (layout.intercept_col < 0)
        throw DimensionMismatchError("random effects estimator requires an intercept column");
    const auto means = detail::group_means(design, layout);
    const Eigen::Index n = design.n();
    const Eigen::Index g = static_cast<Eigen::Index>(layout.region_order.size());
    const Eigen::Index ks = static_cast<Eigen::Index>(layout.slope_cols.size());
    const double T = static_cast<double>(layout.n_periods);

    // Within variance component.
    const PanelFit fe = fe_lsdv(design);
    const double sigma2_e = fe.sigma2_e;
    if (!(sigma2_e > 0.0))
        throw DegenerateSampleError("re_gls: within residual variance is zero");

    // Between regression on region means.
    if (g <= ks + 1)
        throw RankDeficientError("between regression needs n_regions > k_slopes + 1");
    DesignMatrix between;
    between.response = means.y_mean;
    between.regressors.resize(g, ks + 1);
    between.regressors.col(0).setOnes();
    between.regressors.rightCols(ks) = means.x_mean;
    between.column_names.push_back("const");
    for (const auto& nm : layout.slope_names) between.column_names.push_back(nm);
    between.validate();
    auto between_factor = factorize_design(between);
    const Eigen::VectorXd b_between = between_factor->solve(means.y_mean);
    const double ssr_between = (means.y_mean - between.regressors * b_between).squaredNorm();
    const double sigma2_between = ssr_between / static_cast<double>(g - ks - 1);

    PanelFit fit;
    fit.method = PanelMethod::Gls;
    fit.slope_names = layout.slope_names;
    fit.region_order = layout.region_order;
    fit.n_regions = g;
    fit.n_periods = layout.n_periods;
    fit.sigma2_e = sigma2_e;
    fit.sigma2_u = sigma2_between - sigma2_e / T;
    if (fit.sigma2_u < 0.0) {
        fit.sigma2_u = 0.0;
        fit.sigma2_u_clamped = true;
    }
    fit.theta = 1.0 - std::sqrt(sigma2_e / (sigma2_e + T * fit.sigma2_u));

    // Quasi-demeaned regression; the intercept column becomes (1 - theta).
    DesignMatrix quasi;
    quasi.response = design.response;
    quasi.regressors = design.regressors;
    quasi.column_names = design.column_names;
    quasi.row_keys = design.row_keys;
    for (Eigen::Index i = 0; i < g; ++i) {
        for (Eigen::Index r : layout.rows_per_region[static_cast<std::size_t>(i)]) {
            quasi.response(r) -= fit.theta * means.y_mean(i);
            quasi.regressors(r, layout.intercept_col) -= fit.theta * 1.0;
            for (Eigen::Index s = 0; s < ks; ++s)
                quasi.regressors(r, layout.slope_cols[static_cast<std::size_t>(s)]) -=
                    fit.theta * means.x_mean(i, s);
        }
    }
    const OlsFit gls = ols_fit(quasi);

    fit.df = gls.df;
    fit.residuals = gls.residuals;
    fit.see = gls.see;
    fit.r_squared = gls.r_squared;
    fit.r_squared_defined = gls.r_squared_defined;

    fit.slope_coefficients.resize(ks);
    fit.slope_std_errors.resize(ks);
    fit.slope_t_stats.resize(ks);
    fit.slope_p_values.resize(ks);
    fit.slope_covariance.resize(ks, ks);
    for (Eigen::Index s = 0; s < ks; ++s) {
        const Eigen::Index col = layout.slope_cols[static_cast<std::size_t>(s)];
        fit.slope_coefficients(s) = gls.coefficients(col);
        fit.slope_std_errors(s) = gls.std_errors(col);
        fit.slope_t_stats(s) = gls.t_stats(col);
        fit.slope_p_values(s) = gls.p_values(col);
        for (Eigen::Index u = 0; u < ks; ++u)
            fit.slope_covariance(s, u) =
                gls.sigma2 * gls.hat_inputs->xtx_inverse(col, layout.slope_cols[static_cast<std::size_t>(u)]);
    }
    fit.intercept = gls.coefficients(layout.intercept_col);
    fit.intercept_std_error = gls.std_errors(layout.intercept_col);
    fit.intercept_t_stat = gls.t_stats(layout.intercept_col);
    fit.intercept_p_value = gls.p_values(layout.intercept_col);
    return fit;
}

enum class PreferredModel { FixedEffects, RandomEffects };

struct HausmanResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    PreferredModel preferred = PreferredModel::RandomEffects;
    bool degenerate_flag = false; // covariance difference not positive definite
};

/// H = (b_FE - b_RE)' [V_FE - V_RE]^+ (b_FE - b_RE), chi-square(df) with df
/// the number of compared slopes. A Moore-Penrose pseudo-inverse is used when
/// the covariance difference is not positive definite, with the flag set.
/// `restrict_to` optionally limits the comparison to a subset of slopes.
inline HausmanResult hausman_test(const PanelFit& fe, const PanelFit& re, double alpha = 0.05,
                                  const std::vector<std::string>& restrict_to = {}) {
    if (fe.slope_names != re.slope_names)
        throw DimensionMismatchError("hausman_test: fits have different slope sets");

    std::vector<Eigen::Index> idx;
    if (restrict_to.empty()) {
        for (Eigen::Index s = 0; s < fe.slope_coefficients.size(); ++s) idx.push_back(s);
    } else {
        for (const auto& name : restrict_to) {
            auto it = std::find(fe.slope_names.begin(), fe.slope_names.end(), name);
            if (it == fe.slope_names.end())
                throw DimensionMismatchError("hausman_test: unknown slope '" + name + "'");
            idx.push_back(static_cast<Eigen::Index>(it - fe.slope_names.begin()));
        }
    }
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());

    Eigen::VectorXd d(m);
    Eigen::MatrixXd v(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        d(a) = fe.slope_coefficients(idx[a]) - re.slope_coefficients(idx[a]);
        for (Eigen::Index b = 0; b < m; ++b)
            v(a, b) = fe.slope_covariance(idx[a], idx[b]) - re.slope_covariance(idx[a], idx[b]);
    }
    v = 0.5 * (v + v.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    const double tol = std::max(scale, 1.0e-300) * 1e-12;

    HausmanResult result;
    result.df = static_cast<int>(m);
    Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(ev(i)) > tol) {
            inv_ev(i) = 1.0 / ev(i);
        } else {
            result.degenerate_flag = true; // rank deficient difference
        }
        if (ev(i) < -tol) result.degenerate_flag = true;
    }
    const Eigen::VectorXd z = es.eigenvectors().transpose() * d;
    result.statistic = (z.array().square() * inv_ev.array()).sum();
    result.p_value = chi2_sf(result.statistic, static_cast<double>(m));
    result.preferred =
        result.p_value > alpha ? PreferredModel::RandomEffects : PreferredModel::FixedEffects;
    return result;
}

} // namespace netmig

#endif // NETMIG_PANEL_HPP
