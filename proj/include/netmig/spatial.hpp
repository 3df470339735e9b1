#ifndef NETMIG_SPATIAL_HPP
#define NETMIG_SPATIAL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netmig/design.hpp"
#include "netmig/distributions.hpp"
#include "netmig/errors.hpp"
#include "netmig/lsq.hpp"
#include "netmig/weights.hpp"

namespace netmig {

struct MoranResult {
    double i_value = 0.0;
    double expected_i = 0.0; // -1/(n-1)
    double variance_i = 0.0; // under the normality assumption
    double z_score = 0.0;
    double p_value = 1.0; // two-sided normal
};

/// Global Moran's I of a residual vector:
///   I = (n/S0) (z'Wz)/(z'z), z the deviations from the mean,
/// with expectation and variance under the normality assumption.
inline MoranResult morans_i(const Eigen::VectorXd& residuals, const SpatialWeights& w) {
    const Eigen::Index n = residuals.size();
    if (n != w.n()) throw DimensionMismatchError("morans_i: residual length does not match weights");
    const Eigen::VectorXd z = residuals.array() - residuals.mean();
    const double zz = z.squaredNorm();
    if (!(zz > 0.0)) throw DegenerateSampleError("morans_i: residuals are constant");
    const double s0 = w.total_weight();
    if (!(s0 > 0.0)) throw DegenerateWeightsError("morans_i: weights sum to zero");

    const double nn = static_cast<double>(n);
    MoranResult r;
    r.i_value = (nn / s0) * (z.dot(w.matrix * z)) / zz;
    r.expected_i = -1.0 / (nn - 1.0);

    double s1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double sij = w.matrix(i, j) + w.matrix(j, i);
            s1 += sij * sij;
        }
    s1 *= 0.5;
    double s2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double si = w.matrix.row(i).sum() + w.matrix.col(i).sum();
        s2 += si * si;
    }
    r.variance_i = (nn * nn * s1 - nn * s2 + 3.0 * s0 * s0) / ((nn * nn - 1.0) * s0 * s0) -
                   r.expected_i * r.expected_i;
    r.z_score = (r.i_value - r.expected_i) / std::sqrt(r.variance_i);
    r.p_value = normal_two_sided_p(r.z_score);
    return r;
}

/// Eigenvalue context for one weights matrix: computed once, read-only
/// afterwards. Provides the admissible parameter interval and the
/// log-determinant ln|I - rho W| = sum_i ln|1 - rho w_i|.
class SpatialContext {
public:
    explicit SpatialContext(const SpatialWeights& w) : w_(w) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(w.matrix, /*computeEigenvectors=*/false);
        eigenvalues_ = es.eigenvalues();
        const double scale = eigenvalues_.cwiseAbs().maxCoeff();
        double omega_min = std::numeric_limits<double>::infinity();
        double omega_max = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
            if (std::abs(eigenvalues_(i).imag()) <= 1e-8 * std::max(scale, 1.0)) {
                omega_min = std::min(omega_min, eigenvalues_(i).real());
                omega_max = std::max(omega_max, eigenvalues_(i).real());
            }
        }
        if (!(omega_max > 0.0))
            throw DegenerateWeightsError("spatial context: no positive real eigenvalue");
        if (!(omega_min < 0.0))
            throw DegenerateWeightsError("spatial context: no negative real eigenvalue");
        lower_ = 1.0 / omega_min;
        upper_ = 1.0 / omega_max;
    }

    const SpatialWeights& weights() const { return w_; }
    double lower() const { return lower_; }
    double upper() const { return upper_; }

    double log_det(double rho) const {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i)
            sum += std::log(std::abs(std::complex<double>(1.0, 0.0) - rho * eigenvalues_(i)));
        return sum;
    }

private:
    const SpatialWeights& w_;
    Eigen::VectorXcd eigenvalues_;
    double lower_ = 0.0;
    double upper_ = 0.0;
};

/// Expand a per-region weights matrix to one aligned with arbitrary
/// (region, year) row keys: rows are neighbors iff their regions are
/// neighbors and their years are equal. With T distinct years this is the
/// I_T block expansion permuted into row-key order; with one year it is a
/// reordering of W itself.
inline SpatialWeights weights_for_row_keys(const SpatialWeights& w,
                                           const std::vector<RowKey>& keys) {
    std::map<std::string, Eigen::Index> index;
    for (Eigen::Index i = 0; i < w.n(); ++i) index[w.region_order[static_cast<std::size_t>(i)]] = i;

    const Eigen::Index m = static_cast<Eigen::Index>(keys.size());
    SpatialWeights out;
    out.matrix = Eigen::MatrixXd::Zero(m, m);
    bool multi_year = false;
    for (std::size_t a = 1; a < keys.size(); ++a)
        if (keys[a].year != keys[0].year) multi_year = true;
    for (std::size_t a = 0; a < keys.size(); ++a) {
        const auto it = index.find(keys[a].region_id);
        if (it == index.end())
            throw UnknownRegionError("weights_for_row_keys: region '" + keys[a].region_id +
                                     "' not in weights matrix");
        out.region_order.push_back(multi_year ? keys[a].region_id + "#" + std::to_string(keys[a].year)
                                              : keys[a].region_id);
    }
    for (std::size_t a = 0; a < keys.size(); ++a) {
        for (std::size_t b = 0; b < keys.size(); ++b) {
            if (a == b || keys[a].year != keys[b].year) continue;
            out.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                w.matrix(index.at(keys[a].region_id), index.at(keys[b].region_id));
        }
    }
    out.standardized = w.standardized;
    out.validate();
    return out;
}

enum class SpatialModel { Sar, Sem };

struct SpatialFit {
    SpatialModel model = SpatialModel::Sar;
    double rho_or_lambda = 0.0;
    double rho_std_error = 0.0;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd coefficient_std_errors;
    std::vector<std::string> column_names;
    double sigma2 = 0.0; // ML variance, e'e/n
    double log_likelihood = 0.0;
    double interval_lower = 0.0;
    double interval_upper = 0.0;
};

namespace detail {

/// Golden-section maximization with a final three-point quadratic polish.
/// `f` must be unimodal on [lo, hi]; tolerance applies to the argument.
template <class F>
double maximize_scalar(F&& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol * 0.25) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    double x_best = (f1 > f2) ? x1 : x2;
    double f_best = std::max(f1, f2);
    // Quadratic refinement through (x-h, x, x+h).
    const double h = std::max(tol, (b - a) * 0.5);
    const double xm = x_best - h, xp = x_best + h;
    if (xm > lo && xp < hi) {
        const double fm = f(xm), fp = f(xp);
        const double denom = fm - 2.0 * f_best + fp;
        if (denom < 0.0) {
            const double step = 0.5 * h * (fm - fp) / denom;
            const double cand = x_best + step;
            if (cand > lo && cand < hi) {
                const double fc = f(cand);
                if (fc > f_best) {
                    x_best = cand;
                    f_best = fc;
                }
            }
        }
    }
    return x_best;
}

/// Central-difference Hessian of f at x with per-coordinate steps h.
template <class F>
Eigen::MatrixXd numeric_hessian(F&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
    const Eigen::Index m = x.size();
    Eigen::MatrixXd hess(m, m);
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h(i);
        xm(i) -= h(i);
        hess(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h(i) * h(i));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
            xpp(i) += h(i); xpp(j) += h(j);
            xpm(i) += h(i); xpm(j) -= h(j);
            xmp(i) -= h(i); xmp(j) += h(j);
            xmm(i) -= h(i); xmm(j) -= h(j);
            hess(i, j) = hess(j, i) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h(i) * h(j));
        }
    }
    return hess;
}

/// Fills std errors from the inverse negative Hessian of the full
/// log-likelihood; parameter order (rho, beta..., sigma2).
template <class FullLl>
void spatial_std_errors(SpatialFit& fit, FullLl&& full_ll, double interval_width) {
    const Eigen::Index k = fit.coefficients.size();
    Eigen::VectorXd x(k + 2), h(k + 2);
    x(0) = fit.rho_or_lambda;
    h(0) = 1e-5 * interval_width;
    for (Eigen::Index j = 0; j < k; ++j) {
        x(j + 1) = fit.coefficients(j);
        h(j + 1) = 1e-5 * (1.0 + std::abs(fit.coefficients(j)));
    }
    x(k + 1) = fit.sigma2;
    h(k + 1) = std::min(1e-5 * (1.0 + fit.sigma2), 0.5 * fit.sigma2);

    const Eigen::MatrixXd hess = numeric_hessian(full_ll, x, h);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(-hess);
    fit.coefficient_std_errors = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    fit.rho_std_error = std::numeric_limits<double>::quiet_NaN();
    if (!lu.isInvertible()) return;
    const Eigen::MatrixXd cov = lu.inverse();
    if (cov(0, 0) > 0.0) fit.rho_std_error = std::sqrt(cov(0, 0));
    for (Eigen::Index j = 0; j < k; ++j)
        if (cov(j + 1, j + 1) > 0.0) fit.coefficient_std_errors(j) = std::sqrt(cov(j + 1, j + 1));
}

inline void check_boundary(double value, double lo, double hi, const char* model) {
    if (value - lo <= 1e-6 || hi - value <= 1e-6)
        throw OptimizerAtBoundaryError(std::string(model) +
                                       ": estimate at admissible interval boundary: " +
                                       std::to_string(value));
}

} // namespace detail

/// Concentrated SAR log-likelihood
///   ln L(rho) = -(n/2)(ln 2pi + 1) - (n/2) ln sigma2(rho) + ln|I - rho W|
/// where sigma2(rho) is the ML variance from regressing (y - rho Wy) on X.
class SarProfile {
public:
    SarProfile(const DesignMatrix& design, const SpatialContext& ctx) : ctx_(ctx), n_(design.n()) {
        design.validate();
        auto factor = factorize_design(design);
        const Eigen::VectorXd wy = ctx.weights().matrix * design.response;
        e0_ = factor->annihilate(design.response);
        el_ = factor->annihilate(wy);
    }

    double operator()(double rho) const {
        const double n = static_cast<double>(n_);
        const double sigma2 = (e0_ - rho * el_).squaredNorm() / n;
        return -0.5 * n * (std::log(2.0 * M_PI) + 1.0 + std::log(sigma2)) + ctx_.log_det(rho);
    }

private:
    const SpatialContext& ctx_;
    Eigen::Index n_;
    Eigen::VectorXd e0_, el_;
};

/// Concentrated SEM log-likelihood: at each lambda the spatially filtered
/// variables (I - lambda W)y, (I - lambda W)X are re-fit by least squares.
class SemProfile {
public:
    SemProfile(const DesignMatrix& design, const SpatialContext& ctx)
        : ctx_(ctx), y_(design.response), x_(design.regressors) {
        design.validate();
        factorize_design(design); // rank check only
        wy_ = ctx.weights().matrix * y_;
        wx_ = ctx.weights().matrix * x_;
    }

    double sigma2_at(double lambda, Eigen::VectorXd* beta_out = nullptr) const {
        const Eigen::MatrixXd xf = x_ - lambda * wx_;
        const Eigen::VectorXd yf = y_ - lambda * wy_;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(xf);
        const Eigen::VectorXd beta = qr.solve(yf);
        if (beta_out) *beta_out = beta;
        return (yf - xf * beta).squaredNorm() / static_cast<double>(y_.size());
    }

    double operator()(double lambda) const {
        const double n = static_cast<double>(y_.size());
        return -0.5 * n * (std::log(2.0 * M_PI) + 1.0 + std::log(sigma2_at(lambda))) +
               ctx_.log_det(lambda);
    }

private:
    const SpatialContext& ctx_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd wy_;
    Eigen::MatrixXd wx_;
};

/// Maximum-likelihood spatial lag model y = rho W y + X beta + eps.
inline SpatialFit ml_sar(const DesignMatrix& design, const SpatialContext& ctx) {
    const double lo = ctx.lower(), hi = ctx.upper();
    SarProfile profile(design, ctx);
    const double margin = 1e-8 * (hi - lo);
    const double rho = detail::maximize_scalar(profile, lo + margin, hi - margin, 1e-8);
    detail::check_boundary(rho, lo, hi, "ml_sar");

    auto factor = factorize_design(design);
    const Eigen::VectorXd wy = ctx.weights().matrix * design.response;
    const Eigen::VectorXd y_star = design.response - rho * wy;

    SpatialFit fit;
    fit.model = SpatialModel::Sar;
    fit.rho_or_lambda = rho;
    fit.column_names = design.column_names;
    fit.coefficients = factor->solve(y_star);
    const Eigen::VectorXd resid = y_star - design.regressors * fit.coefficients;
    const double n = static_cast<double>(design.n());
    fit.sigma2 = resid.squaredNorm() / n;
    fit.log_likelihood = profile(rho);
    fit.interval_lower = lo;
    fit.interval_upper = hi;

    const Eigen::MatrixXd& x = design.regressors;
    const Eigen::VectorXd& y = design.response;
    auto full_ll = [&](const Eigen::VectorXd& t) {
        const double r = t(0);
        const double s2 = t(t.size() - 1);
        const Eigen::VectorXd beta = t.segment(1, x.cols());
        const Eigen::VectorXd e = y - r * wy - x * beta;
        return -0.5 * n * std::log(2.0 * M_PI * s2) + ctx.log_det(r) -
               e.squaredNorm() / (2.0 * s2);
    };
    detail::spatial_std_errors(fit, full_ll, hi - lo);
    return fit;
}

/// Maximum-likelihood spatial error model y = X beta + u, u = lambda W u + xi.
inline SpatialFit ml_sem(const DesignMatrix& design, const SpatialContext& ctx) {
    const double lo = ctx.lower(), hi = ctx.upper();
    SemProfile profile(design, ctx);
    const double margin = 1e-8 * (hi - lo);
    const double lambda =
        detail::maximize_scalar([&](double l) { return profile(l); }, lo + margin, hi - margin, 1e-8);
    detail::check_boundary(lambda, lo, hi, "ml_sem");

    SpatialFit fit;
    fit.model = SpatialModel::Sem;
    fit.rho_or_lambda = lambda;
    fit.column_names = design.column_names;
    Eigen::VectorXd beta;
    fit.sigma2 = profile.sigma2_at(lambda, &beta);
    fit.coefficients = beta;
    fit.log_likelihood = profile(lambda);
    fit.interval_lower = lo;
    fit.interval_upper = hi;

    const Eigen::MatrixXd& x = design.regressors;
    const Eigen::VectorXd& y = design.response;
    const Eigen::MatrixXd& wmat = ctx.weights().matrix;
    const double n = static_cast<double>(design.n());
    auto full_ll = [&](const Eigen::VectorXd& t) {
        const double l = t(0);
        const double s2 = t(t.size() - 1);
        const Eigen::VectorXd beta_t = t.segment(1, x.cols());
        const Eigen::VectorXd u = y - x * beta_t;
        const Eigen::VectorXd e = u - l * (wmat * u);
        return -0.5 * n * std::log(2.0 * M_PI * s2) + ctx.log_det(l) -
               e.squaredNorm() / (2.0 * s2);
    };
    detail::spatial_std_errors(fit, full_ll, hi - lo);
    return fit;
}

inline SpatialFit ml_sar(const DesignMatrix& design, const SpatialWeights& w) {
    SpatialContext ctx(w);
    return ml_sar(design, ctx);
}

inline SpatialFit ml_sem(const DesignMatrix& design, const SpatialWeights& w) {
    SpatialContext ctx(w);
    return ml_sem(design, ctx);
}

namespace detail {

/// Shared ingredients of the four LM statistics, all scaled by the ML
/// variance sigma2 = e'e/n:
///   T = tr(W'W + WW),  d = e'Wy/sigma2,  g = e'We/sigma2,
///   D = (WXb)'M(WXb)/sigma2 + T.
struct LmParts {
    double t = 0.0;
    double d = 0.0;
    double g = 0.0;
    double big_d = 0.0;
};

inline LmParts lm_parts(const OlsFit& fit, const DesignMatrix& design, const SpatialWeights& w,
                        std::vector<std::string>* warnings) {
    check_fit_matches_design(fit, design);
    if (w.n() != design.n())
        throw DimensionMismatchError("lm tests: weights size does not match design rows");
    if (!w.standardized && warnings)
        warnings->push_back("weights matrix is not row-standardized; LM tests assume it is");

    LmParts p;
    const Eigen::MatrixXd& wm = w.matrix;
    p.t = (wm.array().square()).sum() + (wm.array() * wm.transpose().array()).sum();
    if (!(p.t > 0.0)) throw DegenerateWeightsError("lm tests: tr(W'W + WW) is zero");

    const double n = static_cast<double>(design.n());
    const double sigma2 = fit.residuals.squaredNorm() / n;
    if (!(sigma2 > 0.0)) throw DegenerateSampleError("lm tests: zero residual variance");

    p.d = fit.residuals.dot(wm * design.response) / sigma2;
    p.g = fit.residuals.dot(wm * fit.residuals) / sigma2;

    const Eigen::VectorXd wxb = wm * fit.fitted;
    const Eigen::VectorXd m_wxb = fit.hat_inputs->annihilate(wxb);
    p.big_d = wxb.dot(m_wxb) / sigma2 + p.t;
    return p;
}

inline void require_robust_defined(const LmParts& p, const char* which) {
    if (p.big_d - p.t <= 1e-12 * p.big_d)
        throw NumericalBreakdownError(std::string(which) +
                                      ": D <= T, robust statistic undefined for this design");
}

} // namespace detail

/// LM test for an omitted spatial lag: d^2 / D against chi-square(1).
inline TestStat lm_lag(const OlsFit& fit, const DesignMatrix& design, const SpatialWeights& w,
                       std::vector<std::string>* warnings = nullptr) {
    const auto p = detail::lm_parts(fit, design, w, warnings);
    return make_chi2_stat("LM_lag", p.d * p.d / p.big_d, 1);
}

/// LM test for spatial error autocorrelation: g^2 / T against chi-square(1).
inline TestStat lm_error(const OlsFit& fit, const DesignMatrix& design, const SpatialWeights& w,
                         std::vector<std::string>* warnings = nullptr) {
    const auto p = detail::lm_parts(fit, design, w, warnings);
    return make_chi2_stat("LM_err", p.g * p.g / p.t, 1);
}

/// Robust LM lag test: (d - g)^2 / (D - T).
inline TestStat robust_lm_lag(const OlsFit& fit, const DesignMatrix& design, const SpatialWeights& w,
                              std::vector<std::string>* warnings = nullptr) {
    const auto p = detail::lm_parts(fit, design, w, warnings);
    detail::require_robust_defined(p, "robust_lm_lag");
    const double num = p.d - p.g;
    return make_chi2_stat("RLM_lag", num * num / (p.big_d - p.t), 1);
}

/// Robust LM error test: (g - (T/D) d)^2 / (T (1 - T/D)).
inline TestStat robust_lm_error(const OlsFit& fit, const DesignMatrix& design,
                                const SpatialWeights& w,
                                std::vector<std::string>* warnings = nullptr) {
    const auto p = detail::lm_parts(fit, design, w, warnings);
    detail::require_robust_defined(p, "robust_lm_error");
    const double ratio = p.t / p.big_d;
    const double num = p.g - ratio * p.d;
    return make_chi2_stat("RLM_err", num * num / (p.t * (1.0 - ratio)), 1);
}

enum class SpecChoice { Ols, Sar, Sem };

struct SpecTrailEntry {
    std::string test;
    double statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct SpecSearchResult {
    SpecChoice chosen = SpecChoice::Ols;
    std::vector<SpecTrailEntry> trail;
    double significance_level = 0.05;
};

/// Re-derive the choice from a recorded trail; the decision must be a pure
/// function of the trail.
inline SpecChoice replay_spec_trail(const std::vector<SpecTrailEntry>& trail) {
    auto find = [&](const std::string& name) -> const SpecTrailEntry* {
        for (const auto& e : trail)
            if (e.test == name) return &e;
        return nullptr;
    };
    const auto* lag = find("LM_lag");
    const auto* err = find("LM_err");
    if (!lag || !err) throw DimensionMismatchError("spec trail missing LM entries");
    if (!lag->significant && !err->significant) return SpecChoice::Ols;
    if (lag->significant != err->significant)
        return lag->significant ? SpecChoice::Sar : SpecChoice::Sem;
    const auto* rlag = find("RLM_lag");
    const auto* rerr = find("RLM_err");
    if (!rlag || !rerr) throw DimensionMismatchError("spec trail missing robust LM entries");
    return rlag->p_value <= rerr->p_value ? SpecChoice::Sar : SpecChoice::Sem;
}

/// Forward specification search: OLS first, then the LM pair decides whether
/// a spatial model is needed, with the robust pair breaking the tie when
/// both raw tests reject.
inline SpecSearchResult spec_search(const DesignMatrix& design, const SpatialWeights& w,
                                    double alpha = 0.05,
                                    std::vector<std::string>* warnings = nullptr) {
    SpecSearchResult result;
    result.significance_level = alpha;
    const OlsFit fit = ols_fit(design);

    auto record = [&](const TestStat& t) {
        result.trail.push_back(SpecTrailEntry{t.name, t.statistic, t.p_value, t.p_value < alpha});
    };
    const TestStat lag = lm_lag(fit, design, w, warnings);
    record(lag);
    const TestStat err = lm_error(fit, design, w, nullptr);
    record(err);

    const bool lag_sig = lag.p_value < alpha;
    const bool err_sig = err.p_value < alpha;
    if (lag_sig && err_sig) {
        record(robust_lm_lag(fit, design, w, nullptr));
        record(robust_lm_error(fit, design, w, nullptr));
    }
    result.chosen = replay_spec_trail(result.trail);
    return result;
}

} // namespace netmig

#endif // NETMIG_SPATIAL_HPP
