// Command-line front end: data ingestion, weights construction, estimators,
// diagnostics, specification search and simulation studies.
//
// Exit codes: 0 success, 1 usage error, 2 input error, 3 numerical error.

#include <CLI11.hpp>
#include <json.hpp>

#include <clocale>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <netmig/netmig.hpp>

namespace {

using nlohmann::json;

struct WeightsOptions {
    std::string weights_path;
    std::string regions_path;
    double power = 1.0;
    bool standardize = true;
};

struct DesignOptions {
    std::string panel_path;
    bool include_wage = true;
    bool include_housing = true;
    bool agri_headcount = false;
};

void add_weights_flags(CLI::App* cmd, WeightsOptions& w) {
    cmd->add_option("--weights", w.weights_path, "explicit weights CSV");
    cmd->add_option("--regions", w.regions_path, "regions CSV for inverse-distance weights");
    cmd->add_option("--power", w.power, "inverse-distance exponent")->capture_default_str();
    cmd->add_flag("--no-standardize", [&w](std::int64_t) { w.standardize = false; },
                  "keep raw weights instead of row-standardizing");
}

void add_design_flags(CLI::App* cmd, DesignOptions& d) {
    cmd->add_option("--panel", d.panel_path, "panel CSV")->required();
    cmd->add_flag("--no-wages", [&d](std::int64_t) { d.include_wage = false; },
                  "drop the wage growth differential column");
    cmd->add_flag("--no-housing", [&d](std::int64_t) { d.include_housing = false; },
                  "drop the housing growth differential column");
    cmd->add_flag("--agri-headcount", [&d](std::int64_t) { d.agri_headcount = true; },
                  "use raw agricultural employment instead of its share");
}

netmig::SpatialWeights resolve_weights(const WeightsOptions& opts) {
    if (!opts.weights_path.empty()) {
        netmig::SpatialWeights w = netmig::load_weights_csv(opts.weights_path);
        if (opts.standardize && !w.standardized) w = netmig::row_standardize(w).weights;
        return w;
    }
    if (!opts.regions_path.empty()) {
        const auto regions = netmig::load_regions_csv(opts.regions_path);
        netmig::SpatialWeights w = netmig::inverse_distance_weights(regions, opts.power);
        if (opts.standardize) w = netmig::row_standardize(w).weights;
        return w;
    }
    throw netmig::InputError("spatial analysis needs --weights or --regions");
}

struct BuiltDesign {
    netmig::DesignMatrix design;
    std::vector<netmig::Region> regions; // empty when no regions file given
};

BuiltDesign build_design(const DesignOptions& opts, const std::string& regions_path) {
    BuiltDesign out;
    const std::vector<netmig::Region>* known = nullptr;
    if (!regions_path.empty()) {
        out.regions = netmig::load_regions_csv(regions_path);
        known = &out.regions;
    }
    const netmig::PanelDataset panel = netmig::load_panel_csv(opts.panel_path, known);
    netmig::MigrationVariableOptions mv;
    mv.agri_as_share = !opts.agri_headcount;
    const auto vars = netmig::build_migration_variables(panel, mv);
    out.design = netmig::to_panel_design(vars, opts.include_wage, opts.include_housing);
    return out;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw netmig::ParseError("cannot open for writing: " + path);
    out << content;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw netmig::ParseError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

json test_to_json(const netmig::TestStat& t) {
    return json{{"name", t.name},
                {"statistic", t.statistic},
                {"df", t.df},
                {"p_value", t.p_value},
                {"reject_at_5pct", t.decision_at_5pct == netmig::Decision::Reject}};
}

json ols_to_json(const netmig::OlsFit& fit) {
    json coeffs = json::array();
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        coeffs.push_back({{"name", fit.column_names[static_cast<std::size_t>(j)]},
                          {"estimate", fit.coefficients(j)},
                          {"std_error", fit.std_errors(j)},
                          {"t_stat", fit.t_stats(j)},
                          {"p_value", fit.p_values(j)}});
    }
    json j{{"coefficients", coeffs}, {"df", fit.df},          {"sigma2", fit.sigma2},
           {"see", fit.see},         {"n", fit.residuals.size()}};
    if (fit.r_squared_defined)
        j["r_squared"] = fit.r_squared;
    else
        j["r_squared"] = nullptr;
    return j;
}

json panel_to_json(const netmig::PanelFit& fit) {
    json coeffs = json::array();
    for (Eigen::Index j = 0; j < fit.slope_coefficients.size(); ++j) {
        coeffs.push_back({{"name", fit.slope_names[static_cast<std::size_t>(j)]},
                          {"estimate", fit.slope_coefficients(j)},
                          {"std_error", fit.slope_std_errors(j)},
                          {"t_stat", fit.slope_t_stats(j)},
                          {"p_value", fit.slope_p_values(j)}});
    }
    json j{{"method", fit.method == netmig::PanelMethod::Lsdv ? "fe_lsdv" : "re_gls"},
           {"slopes", coeffs},
           {"df", fit.df},
           {"see", fit.see},
           {"sigma2_e", fit.sigma2_e},
           {"n_regions", fit.n_regions},
           {"n_periods", fit.n_periods}};
    if (fit.r_squared_defined)
        j["r_squared"] = fit.r_squared;
    else
        j["r_squared"] = nullptr;
    if (fit.method == netmig::PanelMethod::Gls) {
        j["intercept"] = {{"estimate", fit.intercept},
                          {"std_error", fit.intercept_std_error},
                          {"t_stat", fit.intercept_t_stat},
                          {"p_value", fit.intercept_p_value}};
        j["sigma2_u"] = fit.sigma2_u;
        j["theta"] = fit.theta;
        j["sigma2_u_clamped"] = fit.sigma2_u_clamped;
    } else {
        json effects = json::array();
        for (Eigen::Index i = 0; i < fit.region_effects.size(); ++i)
            effects.push_back({{"region", fit.region_order[static_cast<std::size_t>(i)]},
                               {"effect", fit.region_effects(i)}});
        j["region_effects"] = effects;
    }
    return j;
}

json spatial_to_json(const netmig::SpatialFit& fit) {
    json coeffs = json::array();
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        coeffs.push_back({{"name", fit.column_names[static_cast<std::size_t>(j)]},
                          {"estimate", fit.coefficients(j)},
                          {"std_error", fit.coefficient_std_errors(j)}});
    }
    return json{{"model", fit.model == netmig::SpatialModel::Sar ? "sar" : "sem"},
                {"spatial_coefficient", fit.rho_or_lambda},
                {"spatial_coefficient_std_error", fit.rho_std_error},
                {"coefficients", coeffs},
                {"sigma2", fit.sigma2},
                {"log_likelihood", fit.log_likelihood},
                {"interval", {fit.interval_lower, fit.interval_upper}}};
}

json hausman_to_json(const netmig::HausmanResult& h) {
    return json{{"statistic", h.statistic},
                {"df", h.df},
                {"p_value", h.p_value},
                {"preferred", h.preferred == netmig::PreferredModel::RandomEffects ? "re" : "fe"},
                {"degenerate", h.degenerate_flag}};
}

std::string out_path(const std::string& dir, const std::string& name) {
    if (!name.empty() && name.front() == '/') return name;
    if (dir.empty() || dir == ".") return name;
    return dir + "/" + name;
}

int run_fit(const std::string& model, const DesignOptions& dopts, const WeightsOptions& wopts,
            double alpha, const std::string& output_dir) {
    const BuiltDesign built = build_design(dopts, wopts.regions_path);
    const netmig::DesignMatrix& design = built.design;

    netmig::ReportDocument doc;
    json sidecar;
    sidecar["alpha"] = alpha;

    if (model == "ols") {
        const netmig::OlsFit fit = netmig::ols_fit(design);
        doc = netmig::report_from_ols(fit, "net migration model (pooled least squares)");
        sidecar["fit"] = ols_to_json(fit);
    } else if (model == "fe" || model == "re") {
        const netmig::PanelFit fe = netmig::fe_lsdv(design);
        const netmig::PanelFit re = netmig::re_gls(design);
        const netmig::HausmanResult h = netmig::hausman_test(fe, re, alpha);
        const netmig::PanelFit& shown = model == "fe" ? fe : re;
        doc = netmig::report_from_panel(&shown == &fe ? fe : re, &h,
                                        model == "fe"
                                            ? "net migration model (fixed effects, LSDV)"
                                            : "net migration model (random effects, GLS)");
        doc.footnotes.push_back(
            h.preferred == netmig::PreferredModel::RandomEffects
                ? "Hausman test retains the random effects specification"
                : "Hausman test rejects random effects in favor of fixed effects");
        sidecar["fit"] = panel_to_json(shown);
        sidecar["hausman"] = hausman_to_json(h);
    } else { // sar | sem
        const netmig::SpatialWeights base = resolve_weights(wopts);
        const netmig::SpatialWeights w = netmig::weights_for_row_keys(base, design.row_keys);
        const netmig::SpatialFit fit = model == "sar"
                                           ? netmig::ml_sar(design, w)
                                           : netmig::ml_sem(design, w);
        doc = netmig::report_from_spatial(
            fit, model == "sar" ? "net migration model (spatial lag, ML)"
                                : "net migration model (spatial error, ML)");
        sidecar["fit"] = spatial_to_json(fit);
    }

    const std::string report = doc.render();
    write_text(out_path(output_dir, "fit_" + model + "_report.txt"), report);
    write_json(out_path(output_dir, "fit_" + model + ".json"), sidecar);
    std::cout << report;
    return 0;
}

int run_diagnose(const DesignOptions& dopts, const WeightsOptions& wopts,
                 const std::string& output_dir) {
    const BuiltDesign built = build_design(dopts, wopts.regions_path);
    const netmig::SpatialWeights base = resolve_weights(wopts);
    const netmig::SpatialWeights w = netmig::weights_for_row_keys(base, built.design.row_keys);

    const netmig::DiagnosticsReport rep = netmig::run_diagnostics(built.design, w);
    const netmig::ReportDocument doc =
        netmig::report_from_diagnostics(rep, "residual diagnostics");

    json sidecar;
    sidecar["fit"] = ols_to_json(rep.fit);
    sidecar["tests"] = {test_to_json(rep.jarque_bera),  test_to_json(rep.breusch_pagan),
                        test_to_json(rep.koenker_bassett), test_to_json(rep.lm_lag),
                        test_to_json(rep.robust_lm_lag), test_to_json(rep.lm_error),
                        test_to_json(rep.robust_lm_error)};
    sidecar["moran"] = {{"i", rep.moran.i_value},
                        {"expected_i", rep.moran.expected_i},
                        {"variance_i", rep.moran.variance_i},
                        {"z", rep.moran.z_score},
                        {"p_value", rep.moran.p_value}};
    sidecar["warnings"] = rep.warnings;

    const std::string report = doc.render();
    write_text(out_path(output_dir, "diagnose_report.txt"), report);
    write_json(out_path(output_dir, "diagnose.json"), sidecar);
    std::cout << report;
    return 0;
}

int run_specsearch(const DesignOptions& dopts, const WeightsOptions& wopts, double alpha,
                   const std::string& output_dir) {
    const BuiltDesign built = build_design(dopts, wopts.regions_path);
    const netmig::SpatialWeights base = resolve_weights(wopts);
    const netmig::SpatialWeights w = netmig::weights_for_row_keys(base, built.design.row_keys);

    const netmig::SpecSearchResult result = netmig::spec_search(built.design, w, alpha);
    const netmig::ReportDocument doc =
        netmig::report_from_specsearch(result, "forward specification search");

    json trail = json::array();
    for (const auto& e : result.trail)
        trail.push_back({{"test", e.test},
                         {"statistic", e.statistic},
                         {"p_value", e.p_value},
                         {"significant", e.significant}});
    json sidecar{{"alpha", result.significance_level},
                 {"chosen", netmig::to_string(result.chosen)},
                 {"trail", trail}};

    const std::string report = doc.render();
    write_text(out_path(output_dir, "specsearch_report.txt"), report);
    write_json(out_path(output_dir, "specsearch.json"), sidecar);
    std::cout << report;
    return 0;
}

int run_simulate(const std::string& scenario_path, bool seed_given, std::uint64_t seed,
                 const std::string& output_dir) {
    netmig::Scenario sc = netmig::parse_scenario_file(scenario_path);
    if (seed_given) sc.config.master_seed = seed;

    netmig::McSummary summary;
    if (sc.estimator == netmig::McEstimator::Sar || sc.estimator == netmig::McEstimator::Sem) {
        const int side = static_cast<int>(std::lround(std::sqrt(double(sc.config.n_regions))));
        if (side * side != sc.config.n_regions)
            throw netmig::InputError(
                "spatial scenarios need a square n_regions (rook lattice side^2)");
        const netmig::SpatialWeights w =
            netmig::row_standardize(netmig::rook_lattice_weights(side, side)).weights;

        Eigen::VectorXd beta(static_cast<Eigen::Index>(sc.config.true_coefficients.size()));
        for (std::size_t j = 0; j < sc.config.true_coefficients.size(); ++j)
            beta(static_cast<Eigen::Index>(j)) = sc.config.true_coefficients[j];
        const double par =
            sc.estimator == netmig::McEstimator::Sar ? sc.config.rho : sc.config.lambda;
        const netmig::DesignMatrix first =
            sc.estimator == netmig::McEstimator::Sar
                ? netmig::simulate_sar_cross_section(sc.config.n_regions, w, par, beta,
                                                     sc.config.sigma_e,
                                                     netmig::derive_seed(sc.config.master_seed, 0))
                : netmig::simulate_sem_cross_section(sc.config.n_regions, w, par, beta,
                                                     sc.config.sigma_e,
                                                     netmig::derive_seed(sc.config.master_seed, 0));
        // First replication's cross-section, for inspection.
        std::ofstream out(out_path(output_dir, "simulated_cross_section.csv"), std::ios::binary);
        if (!out) throw netmig::ParseError("cannot open for writing: simulated_cross_section.csv");
        out << "region_id,y";
        for (const auto& name : first.column_names) out << ',' << name;
        out << '\n';
        char buf[64];
        for (Eigen::Index i = 0; i < first.n(); ++i) {
            out << first.row_keys[static_cast<std::size_t>(i)].region_id;
            std::snprintf(buf, sizeof buf, ",%.17g", first.response(i));
            out << buf;
            for (Eigen::Index j = 0; j < first.k(); ++j) {
                std::snprintf(buf, sizeof buf, ",%.17g", first.regressors(i, j));
                out << buf;
            }
            out << '\n';
        }
        summary = netmig::monte_carlo_recovery(sc.config, sc.estimator, &w);
    } else {
        const auto regions = netmig::synthetic_regions(sc.config.n_regions);
        netmig::SimConfig first_cfg = sc.config;
        first_cfg.master_seed = netmig::derive_seed(sc.config.master_seed, 0);
        const netmig::PanelDataset panel = netmig::simulate_panel(first_cfg, regions);
        netmig::save_panel_csv(panel, out_path(output_dir, "simulated_panel.csv"));
        summary = netmig::monte_carlo_recovery(sc.config, sc.estimator);
    }

    netmig::save_mc_summary_csv(summary, out_path(output_dir, "recovery_summary.csv"));

    std::cout << "estimator: " << netmig::to_string(summary.estimator) << "\n";
    std::cout << "replications: " << summary.replications_used << " used, "
              << summary.replications_failed << " failed\n";
    char buf[256];
    for (const auto& p : summary.parameters) {
        std::snprintf(buf, sizeof buf, "%-10s truth %.4f  mean %.4f  bias %.4f  rmse %.4f  cover95 %.3f\n",
                      p.name.c_str(), p.truth, p.mean_estimate, p.bias, p.rmse, p.coverage95);
        std::cout << buf;
    }
    return 0;
}

int run_weights_export(const WeightsOptions& wopts, const std::string& out_file,
                       const std::string& output_dir) {
    const netmig::SpatialWeights w = resolve_weights(wopts);
    const std::string path = out_path(output_dir, out_file);
    netmig::save_weights_csv(w, path);
    std::cout << "wrote " << path << " (" << w.n() << " regions, "
              << (w.standardized ? "row-standardized" : "raw") << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"net migration regression toolkit"};
    app.require_subcommand(1);

    double alpha = 0.05;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string output_dir = ".";
    app.add_option("--alpha", alpha, "significance level")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "override the scenario master seed");
    app.add_option("--output-dir", output_dir, "directory for generated files")
        ->capture_default_str();

    DesignOptions fit_d, diag_d, search_d;
    WeightsOptions fit_w, diag_w, search_w, export_w;
    std::string fit_model;
    std::string scenario_path;
    std::string export_file = "weights.csv";

    CLI::App* fit = app.add_subcommand("fit", "estimate one model");
    fit->add_option("model", fit_model, "ols|fe|re|sar|sem")
        ->required()
        ->check(CLI::IsMember({"ols", "fe", "re", "sar", "sem"}));
    add_design_flags(fit, fit_d);
    add_weights_flags(fit, fit_w);

    CLI::App* diagnose = app.add_subcommand("diagnose", "residual diagnostic battery");
    add_design_flags(diagnose, diag_d);
    add_weights_flags(diagnose, diag_w);

    CLI::App* specsearch = app.add_subcommand("specsearch", "forward specification search");
    add_design_flags(specsearch, search_d);
    add_weights_flags(specsearch, search_w);

    CLI::App* simulate = app.add_subcommand("simulate", "run a simulation scenario");
    simulate->add_option("scenario", scenario_path, "key = value scenario file")->required();

    CLI::App* weights = app.add_subcommand("weights", "weights matrix utilities");
    weights->require_subcommand(1);
    CLI::App* wexport = weights->add_subcommand("export", "build and save a weights CSV");
    add_weights_flags(wexport, export_w);
    wexport->add_option("--out", export_file, "output file name")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    seed_given = seed_opt->count() > 0;

    try {
        if (fit->parsed()) return run_fit(fit_model, fit_d, fit_w, alpha, output_dir);
        if (diagnose->parsed()) return run_diagnose(diag_d, diag_w, output_dir);
        if (specsearch->parsed()) return run_specsearch(search_d, search_w, alpha, output_dir);
        if (simulate->parsed()) return run_simulate(scenario_path, seed_given, seed, output_dir);
        if (weights->parsed()) return run_weights_export(export_w, export_file, output_dir);
    } catch (const netmig::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == netmig::ErrorKind::Input ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
