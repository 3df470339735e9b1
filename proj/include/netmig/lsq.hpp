#ifndef NETMIG_LSQ_HPP
#define NETMIG_LSQ_HPP

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "netmig/design.hpp"
#include "netmig/distributions.hpp"
#include "netmig/errors.hpp"

namespace netmig {

/// Cached orthogonal decomposition of a regressor matrix. Downstream tests
/// (heteroskedasticity, spatial LM) reuse it for auxiliary regressions and
/// annihilator products instead of refactorizing.
struct DesignFactor {
    Eigen::MatrixXd x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    Eigen::MatrixXd xtx_inverse;
    Eigen::Index intercept_col = -1;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index k() const { return x.cols(); }
    bool has_intercept() const { return intercept_col >= 0; }

    /// Least-squares coefficients for an arbitrary response on the same X.
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const { return qr.solve(y); }

    /// Annihilator product M v = v - X (X'X)^{-1} X' v.
    Eigen::VectorXd annihilate(const Eigen::VectorXd& v) const { return v - x * qr.solve(v); }
};

inline std::shared_ptr<const DesignFactor> factorize_design(const DesignMatrix& design) {
    auto f = std::make_shared<DesignFactor>();
    f->x = design.regressors;
    f->qr.compute(f->x);
    if (f->qr.rank() < design.k()) {
        // Columns outside the leading pivots are the linearly dependent ones.
        const auto& perm = f->qr.colsPermutation().indices();
        std::string names;
        for (Eigen::Index i = f->qr.rank(); i < design.k(); ++i) {
            if (!names.empty()) names += ", ";
            names += design.column_names[static_cast<std::size_t>(perm[i])];
        }
        throw RankDeficientError("design is rank deficient; dependent columns: " + names);
    }
    const Eigen::Index k = design.k();
    Eigen::MatrixXd r = f->qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd inner = rinv * rinv.transpose();
    const auto& p = f->qr.colsPermutation();
    f->xtx_inverse = p * inner * p.transpose();
    f->intercept_col = design.intercept_column();
    return f;
}

struct OlsFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values; // two-sided, Student t with df = n - k
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted;
    double sigma2 = 0.0;     // e'e / (n - k)
    double see = 0.0;        // sqrt(sigma2)
    double r_squared = 0.0;
    bool r_squared_defined = true;
    Eigen::Index df = 0;     // n - k
    std::vector<std::string> column_names;
    std::shared_ptr<const DesignFactor> hat_inputs;

    Eigen::Index n() const { return residuals.size(); }
    Eigen::Index k() const { return coefficients.size(); }
};

enum class Decision { Reject, Retain };

struct TestStat {
    std::string name;
    double statistic = 0.0;
    int df = -1; // -1 means not applicable
    double p_value = 1.0;
    Decision decision_at_5pct = Decision::Retain;
};

inline TestStat make_chi2_stat(std::string name, double statistic, int df) {
    TestStat t;
    t.name = std::move(name);
    t.statistic = statistic;
    t.df = df;
    t.p_value = chi2_sf(statistic, static_cast<double>(df));
    t.decision_at_5pct = t.p_value < 0.05 ? Decision::Reject : Decision::Retain;
    return t;
}

/// Minimize ||y - X b||^2 through a column-pivoted Householder QR. The
/// normal-equations inverse is never formed to solve; (X'X)^{-1} is derived
/// from the triangular factor only for covariance reporting.
inline OlsFit ols_fit(const DesignMatrix& design) {
    design.validate();
    auto factor = factorize_design(design);

    OlsFit fit;
    fit.hat_inputs = factor;
    fit.column_names = design.column_names;
    fit.coefficients = factor->solve(design.response);
    fit.fitted = design.regressors * fit.coefficients;
    fit.residuals = design.response - fit.fitted;

    const Eigen::Index n = design.n();
    const Eigen::Index k = design.k();
    fit.df = n - k;
    const double ssr = fit.residuals.squaredNorm();
    fit.sigma2 = ssr / static_cast<double>(fit.df);
    fit.see = std::sqrt(fit.sigma2);

    fit.std_errors = (fit.sigma2 * factor->xtx_inverse.diagonal().array()).sqrt();
    fit.t_stats.resize(k);
    fit.p_values.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        fit.t_stats(j) = fit.coefficients(j) / fit.std_errors(j);
        fit.p_values(j) = t_two_sided_p(fit.t_stats(j), static_cast<double>(fit.df));
    }

    double tss;
    if (factor->has_intercept()) {
        const double mean = design.response.mean();
        tss = (design.response.array() - mean).matrix().squaredNorm();
    } else {
        tss = design.response.squaredNorm();
    }
    const double y_scale = design.response.cwiseAbs().maxCoeff();
    if (tss <= 1e-24 * static_cast<double>(n) * (1.0 + y_scale * y_scale)) {
        fit.r_squared_defined = false;
        fit.r_squared = std::numeric_limits<double>::quiet_NaN();
    } else {
        fit.r_squared_defined = true;
        fit.r_squared = 1.0 - ssr / tss;
    }
    return fit;
}

/// Gaussian log-likelihood of the fit at the ML variance e'e/n.
inline double gaussian_log_likelihood(const OlsFit& fit) {
    const double n = static_cast<double>(fit.n());
    const double sigma2_ml = fit.residuals.squaredNorm() / n;
    return -0.5 * n * (std::log(2.0 * M_PI) + 1.0 + std::log(sigma2_ml));
}

namespace detail {

inline void check_fit_matches_design(const OlsFit& fit, const DesignMatrix& design) {
    if (!fit.hat_inputs || fit.hat_inputs->n() != design.n() || fit.hat_inputs->k() != design.k() ||
        fit.column_names != design.column_names)
        throw DimensionMismatchError("fit was not produced from this design");
}

struct CentralMoments {
    double mean, m2, m3, m4;
};

inline CentralMoments central_moments(const Eigen::VectorXd& v) {
    CentralMoments cm{};
    const double n = static_cast<double>(v.size());
    cm.mean = v.mean();
    const Eigen::ArrayXd d = v.array() - cm.mean;
    cm.m2 = d.square().sum() / n;
    cm.m3 = d.cube().sum() / n;
    cm.m4 = d.square().square().sum() / n;
    return cm;
}

} // namespace detail

/// JB = n (S^2/6 + (K-3)^2/24) against chi-square(2), with moment-estimator
/// skewness and kurtosis.
inline TestStat jarque_bera(const Eigen::VectorXd& residuals) {
    const Eigen::Index n = residuals.size();
    if (n < 4) throw DegenerateSampleError("jarque_bera: needs at least 4 residuals");
    const auto cm = detail::central_moments(residuals);
    const double dev_scale = (residuals.array() - cm.mean).abs().maxCoeff();
    if (!(cm.m2 > 0.0) || dev_scale <= 1e-14 * residuals.cwiseAbs().maxCoeff())
        throw DegenerateSampleError("jarque_bera: residuals have zero variance");
    const double skew = cm.m3 / std::pow(cm.m2, 1.5);
    const double kurt = cm.m4 / (cm.m2 * cm.m2);
    const double jb =
        static_cast<double>(n) * (skew * skew / 6.0 + (kurt - 3.0) * (kurt - 3.0) / 24.0);
    return make_chi2_stat("JB", jb, 2);
}

/// Breusch-Pagan LM form: half the explained sum of squares of the regression
/// of e_i^2 / (e'e/n) on the original regressors; chi-square(k - 1).
inline TestStat breusch_pagan(const OlsFit& fit, const DesignMatrix& design) {
    detail::check_fit_matches_design(fit, design);
    const auto& factor = *fit.hat_inputs;
    const int aux_df = static_cast<int>(design.k()) - (factor.has_intercept() ? 1 : 0);
    if (aux_df < 1)
        throw RankDeficientError("breusch_pagan: auxiliary regression has no slope regressors");

    const double n = static_cast<double>(design.n());
    const double sigma2_ml = fit.residuals.squaredNorm() / n;
    if (!(sigma2_ml > 0.0)) throw DegenerateSampleError("breusch_pagan: zero residual variance");
    const Eigen::VectorXd g = fit.residuals.array().square() / sigma2_ml;
    // Squares constant up to rounding carry no heteroskedasticity signal; the
    // auxiliary regression would only fit that rounding noise.
    const double tss_g = (g.array() - g.mean()).square().sum();
    if (tss_g <= 1e-24 * n * g.mean() * g.mean()) return make_chi2_stat("BP", 0.0, aux_df);
    const Eigen::VectorXd g_hat = factor.x * factor.solve(g);
    const double ess = (g_hat.array() - g.mean()).square().sum();
    return make_chi2_stat("BP", 0.5 * ess, aux_df);
}

/// Koenker-Bassett studentized variant: n * R^2 of the regression of e^2 on
/// the regressors; chi-square(k - 1).
inline TestStat koenker_bassett(const OlsFit& fit, const DesignMatrix& design) {
    detail::check_fit_matches_design(fit, design);
    const auto& factor = *fit.hat_inputs;
    const int aux_df = static_cast<int>(design.k()) - (factor.has_intercept() ? 1 : 0);
    if (aux_df < 1)
        throw RankDeficientError("koenker_bassett: auxiliary regression has no slope regressors");

    const Eigen::VectorXd q = fit.residuals.array().square();
    const double tss = (q.array() - q.mean()).square().sum();
    // Constant squares up to rounding: R2 of noise on noise is arbitrary, the
    // honest statistic is zero.
    const double n_obs = static_cast<double>(design.n());
    if (tss <= 1e-24 * n_obs * q.mean() * q.mean())
        return make_chi2_stat("KB", 0.0, aux_df);
    const Eigen::VectorXd q_hat = factor.x * factor.solve(q);
    const double ess = (q_hat.array() - q.mean()).square().sum();
    const double r2_aux = ess / tss;
    return make_chi2_stat("KB", n_obs * r2_aux, aux_df);
}

} // namespace netmig

#endif // NETMIG_LSQ_HPP
