#ifndef NETMIG_REPORT_HPP
#define NETMIG_REPORT_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "netmig/distributions.hpp"
#include "netmig/lsq.hpp"
#include "netmig/panel.hpp"
#include "netmig/spatial.hpp"

namespace netmig {

/// Star convention from the source tables: * marks significance at 5%,
/// ** marks significance at 10% (but not 5%).
inline std::string significance_stars(double p_value) {
    if (p_value < 0.05) return "*";
    if (p_value < 0.10) return "**";
    return "";
}

namespace detail {

inline std::string format_fixed(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // Collapse the sign of a value that rounds to zero.
    if (s == "-0." + std::string(static_cast<std::size_t>(decimals), '0'))
        s.erase(s.begin());
    return s;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

/// "statistic (p)" cell used across the diagnostic tables.
inline std::string stat_cell(double statistic, double p_value) {
    return format_fixed(statistic) + " (" + format_fixed(p_value) + ")";
}

} // namespace detail

/// Fixed-format text report. Rendering is deterministic: fixed decimal
/// places, '.' decimal separator, LF line endings, widths derived only from
/// the content.
struct ReportDocument {
    struct CoefficientRow {
        std::string name;
        double estimate = 0.0;
        double t_stat = 0.0;
        double p_value = 1.0;
        bool has_t = true;
    };
    struct StatRow {
        std::string label;
        std::string value;
    };

    std::string title;
    std::string equation;
    std::vector<CoefficientRow> coefficients;
    std::vector<StatRow> statistics;
    std::vector<std::string> footnotes;

    std::string render() const {
        std::string out = title + "\n";
        if (!equation.empty()) out += equation + "\n";
        out += "\n";

        if (!coefficients.empty()) {
            std::size_t name_w = 8;
            for (const auto& c : coefficients) name_w = std::max(name_w, c.name.size());
            out += detail::pad_right("variable", name_w) + "  " + detail::pad_left("estimate", 12) +
                   "  " + detail::pad_left("t-stat", 10) + "\n";
            for (const auto& c : coefficients) {
                const std::string est = detail::format_fixed(c.estimate) + significance_stars(c.p_value);
                const std::string t = c.has_t ? "(" + detail::format_fixed(c.t_stat) + ")" : "";
                out += detail::pad_right(c.name, name_w) + "  " + detail::pad_left(est, 12) + "  " +
                       detail::pad_left(t, 10) + "\n";
            }
            out += "\n";
        }

        if (!statistics.empty()) {
            std::size_t label_w = 4;
            for (const auto& s : statistics) label_w = std::max(label_w, s.label.size());
            for (const auto& s : statistics)
                out += detail::pad_right(s.label, label_w) + "  " + s.value + "\n";
            out += "\n";
        }

        for (const auto& f : footnotes) out += f + "\n";
        return out;
    }
};

inline const char* kStarFootnote =
    "* coefficient statistically significant at 5%; ** at 10%";

/// Report for a plain least-squares fit: coefficient rows, then the fit
/// statistics block (degrees of freedom, R2, SEE).
inline ReportDocument report_from_ols(const OlsFit& fit, const std::string& title,
                                      const std::string& equation = "") {
    ReportDocument doc;
    doc.title = title;
    doc.equation = equation;
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        doc.coefficients.push_back({fit.column_names[static_cast<std::size_t>(j)],
                                    fit.coefficients(j), fit.t_stats(j), fit.p_values(j), true});
    }
    doc.statistics.push_back({"G.L.", std::to_string(fit.df)});
    doc.statistics.push_back(
        {"R2", fit.r_squared_defined ? detail::format_fixed(fit.r_squared) : "undefined"});
    doc.statistics.push_back({"SEE", detail::format_fixed(fit.see)});
    doc.footnotes.push_back(kStarFootnote);
    return doc;
}

/// Report for a panel fit in the migration table layout: coefficient rows,
/// then G.L., R2, SEE and (when given) the Hausman row T.H.
inline ReportDocument report_from_panel(const PanelFit& fit, const HausmanResult* hausman,
                                        const std::string& title) {
    ReportDocument doc;
    doc.title = title;
    if (fit.method == PanelMethod::Gls) {
        doc.coefficients.push_back(
            {"const", fit.intercept, fit.intercept_t_stat, fit.intercept_p_value, true});
    }
    for (Eigen::Index j = 0; j < fit.slope_coefficients.size(); ++j) {
        doc.coefficients.push_back({fit.slope_names[static_cast<std::size_t>(j)],
                                    fit.slope_coefficients(j), fit.slope_t_stats(j),
                                    fit.slope_p_values(j), true});
    }
    doc.statistics.push_back({"G.L.", std::to_string(fit.df)});
    doc.statistics.push_back(
        {"R2", fit.r_squared_defined ? detail::format_fixed(fit.r_squared) : "undefined"});
    doc.statistics.push_back({"SEE", detail::format_fixed(fit.see)});
    if (hausman) {
        std::string cell = detail::stat_cell(hausman->statistic, hausman->p_value);
        if (hausman->degenerate_flag) cell += " [pseudo-inverse]";
        doc.statistics.push_back({"T.H.", cell});
    }
    if (fit.method == PanelMethod::Lsdv)
        doc.footnotes.push_back("region intercepts estimated but not shown");
    doc.footnotes.push_back(kStarFootnote);
    return doc;
}

/// Report for a maximum-likelihood spatial fit: the spatial coefficient row
/// first (z-based p-value), then the regression coefficients.
inline ReportDocument report_from_spatial(const SpatialFit& fit, const std::string& title) {
    ReportDocument doc;
    doc.title = title;
    const char* pname = fit.model == SpatialModel::Sar ? "rho (W y)" : "lambda (W e)";
    {
        const double z = fit.rho_or_lambda / fit.rho_std_error;
        doc.coefficients.push_back(
            {pname, fit.rho_or_lambda, z, normal_two_sided_p(z), true});
    }
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        const double z = fit.coefficients(j) / fit.coefficient_std_errors(j);
        doc.coefficients.push_back({fit.column_names[static_cast<std::size_t>(j)],
                                    fit.coefficients(j), z, normal_two_sided_p(z), true});
    }
    doc.statistics.push_back({"logL", detail::format_fixed(fit.log_likelihood)});
    doc.statistics.push_back({"sigma2", detail::format_fixed(fit.sigma2, 6)});
    doc.statistics.push_back({"interval",
                              "(" + detail::format_fixed(fit.interval_lower) + ", " +
                                  detail::format_fixed(fit.interval_upper) + ")"});
    doc.footnotes.push_back("t-stat column holds asymptotic z ratios");
    doc.footnotes.push_back(kStarFootnote);
    return doc;
}

/// Full residual diagnostics of one least-squares fit: normality and
/// heteroskedasticity tests plus the spatial autocorrelation battery.
struct DiagnosticsReport {
    OlsFit fit;
    TestStat jarque_bera;
    TestStat breusch_pagan;
    TestStat koenker_bassett;
    MoranResult moran;
    TestStat lm_lag;
    TestStat robust_lm_lag;
    TestStat lm_error;
    TestStat robust_lm_error;
    std::vector<std::string> warnings;
};

inline DiagnosticsReport run_diagnostics(const DesignMatrix& design, const SpatialWeights& w) {
    DiagnosticsReport rep;
    rep.fit = ols_fit(design);
    rep.jarque_bera = jarque_bera(rep.fit.residuals);
    rep.breusch_pagan = breusch_pagan(rep.fit, design);
    rep.koenker_bassett = koenker_bassett(rep.fit, design);
    rep.moran = morans_i(rep.fit.residuals, w);
    rep.lm_lag = lm_lag(rep.fit, design, w, &rep.warnings);
    rep.robust_lm_lag = robust_lm_lag(rep.fit, design, w, nullptr);
    rep.lm_error = lm_error(rep.fit, design, w, nullptr);
    rep.robust_lm_error = robust_lm_error(rep.fit, design, w, nullptr);
    return rep;
}

/// Battery rendering. The one-line summary keeps the source table's column
/// order JB, BP, KB, M'I, LML, LMRL, LME, LMRE; a detail block follows.
inline ReportDocument report_from_diagnostics(const DiagnosticsReport& rep,
                                              const std::string& title) {
    ReportDocument doc;
    doc.title = title;

    const std::vector<std::pair<std::string, std::string>> cells = {
        {"JB", detail::stat_cell(rep.jarque_bera.statistic, rep.jarque_bera.p_value)},
        {"BP", detail::stat_cell(rep.breusch_pagan.statistic, rep.breusch_pagan.p_value)},
        {"KB", detail::stat_cell(rep.koenker_bassett.statistic, rep.koenker_bassett.p_value)},
        {"M'I", detail::stat_cell(rep.moran.z_score, rep.moran.p_value)},
        {"LML", detail::stat_cell(rep.lm_lag.statistic, rep.lm_lag.p_value)},
        {"LMRL", detail::stat_cell(rep.robust_lm_lag.statistic, rep.robust_lm_lag.p_value)},
        {"LME", detail::stat_cell(rep.lm_error.statistic, rep.lm_error.p_value)},
        {"LMRE", detail::stat_cell(rep.robust_lm_error.statistic, rep.robust_lm_error.p_value)},
    };
    std::string header, values;
    for (const auto& [label, cell] : cells) {
        const std::size_t w = std::max(label.size(), cell.size());
        if (!header.empty()) {
            header += "  ";
            values += "  ";
        }
        header += detail::pad_right(label, w);
        values += detail::pad_right(cell, w);
    }
    doc.statistics.push_back({"battery", header});
    doc.statistics.push_back({"", values});

    auto detail_row = [&](const TestStat& t) {
        std::string v = detail::stat_cell(t.statistic, t.p_value);
        v += t.decision_at_5pct == Decision::Reject ? "  reject at 5%" : "  retain at 5%";
        doc.statistics.push_back({t.name, v});
    };
    detail_row(rep.jarque_bera);
    detail_row(rep.breusch_pagan);
    detail_row(rep.koenker_bassett);
    doc.statistics.push_back(
        {"Moran I", detail::format_fixed(rep.moran.i_value) + "  E[I]=" +
                        detail::format_fixed(rep.moran.expected_i) + "  z=" +
                        detail::format_fixed(rep.moran.z_score) + " (" +
                        detail::format_fixed(rep.moran.p_value) + ")"});
    detail_row(rep.lm_lag);
    detail_row(rep.robust_lm_lag);
    detail_row(rep.lm_error);
    detail_row(rep.robust_lm_error);

    for (const auto& w : rep.warnings) doc.footnotes.push_back("warning: " + w);
    return doc;
}

inline const char* to_string(SpecChoice c) {
    switch (c) {
        case SpecChoice::Ols: return "OLS";
        case SpecChoice::Sar: return "SAR";
        case SpecChoice::Sem: return "SEM";
    }
    return "?";
}

inline ReportDocument report_from_specsearch(const SpecSearchResult& result,
                                             const std::string& title) {
    ReportDocument doc;
    doc.title = title;
    doc.equation = "forward search at alpha = " + detail::format_fixed(result.significance_level);
    for (const auto& e : result.trail) {
        doc.statistics.push_back(
            {e.test, detail::stat_cell(e.statistic, e.p_value) +
                         (e.significant ? "  significant" : "  not significant")});
    }
    doc.statistics.push_back({"chosen", to_string(result.chosen)});
    return doc;
}

} // namespace netmig

#endif // NETMIG_REPORT_HPP
