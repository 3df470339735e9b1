// End-to-end tests driving the installed binary through std::system.
// Global options (--output-dir, --alpha, --seed) precede the subcommand.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <netmig/weights.hpp>

#include "helpers.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string quoted(const std::string& s) { return "'" + s + "'"; }

CliResult run_cli(const std::string& args, const testutil::TempDir& scratch) {
    static int invocation = 0;
    const std::string tag = std::to_string(invocation++);
    const std::string out_file = scratch.file("stdout_" + tag + ".txt");
    const std::string err_file = scratch.file("stderr_" + tag + ".txt");
    const std::string cmd = quoted(NETMIG_CLI_PATH) + " " + args + " >" + quoted(out_file) +
                            " 2>" + quoted(err_file);
    const int status = std::system(cmd.c_str());
    CliResult r;
    if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    r.out = testutil::read_file(out_file);
    r.err = testutil::read_file(err_file);
    return r;
}

bool exists(const std::string& path) { return std::filesystem::exists(path); }

} // namespace

TEST_CASE("fit re produces a report, a sidecar and identical reruns") {
    testutil::TempDir scratch;
    testutil::TempDir run_a;
    testutil::TempDir run_b;
    const std::string panel = testutil::fixture("panel_small.csv");

    const CliResult a = run_cli("--output-dir " + quoted(run_a.dir()) + " fit re --panel " +
                                    quoted(panel),
                                scratch);
    INFO(a.err);
    REQUIRE(a.exit_code == 0);
    REQUIRE(exists(run_a.file("fit_re_report.txt")));
    REQUIRE(exists(run_a.file("fit_re.json")));

    const std::string report = testutil::read_file(run_a.file("fit_re_report.txt"));
    CHECK(a.out == report);
    CHECK(report.find("random effects") != std::string::npos);
    CHECK(report.find("const") != std::string::npos);
    CHECK(report.find("T.H.") != std::string::npos);
    for (const char* name : {"r_diff", "d_diff", "a_share", "s_diff", "f_diff"})
        CHECK(report.find(name) != std::string::npos);
    CHECK(report.find("Hausman test") != std::string::npos);

    const std::string sidecar = testutil::read_file(run_a.file("fit_re.json"));
    CHECK(sidecar.find("\"hausman\"") != std::string::npos);
    CHECK(sidecar.find("\"preferred\"") != std::string::npos);
    CHECK(sidecar.find("\"theta\"") != std::string::npos);

    const CliResult b = run_cli("--output-dir " + quoted(run_b.dir()) + " fit re --panel " +
                                    quoted(panel),
                                scratch);
    REQUIRE(b.exit_code == 0);
    CHECK(testutil::read_file(run_b.file("fit_re_report.txt")) == report);
    CHECK(testutil::read_file(run_b.file("fit_re.json")) == sidecar);
}

TEST_CASE("fit fe reports region intercepts as absorbed") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) + " fit fe --panel " +
                                    quoted(testutil::fixture("panel_small.csv")),
                                scratch);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const std::string report = testutil::read_file(out.file("fit_fe_report.txt"));
    CHECK(report.find("fixed effects") != std::string::npos);
    CHECK(report.find("region intercepts estimated but not shown") != std::string::npos);
    CHECK(report.find("Hausman test") != std::string::npos);
    const std::string sidecar = testutil::read_file(out.file("fit_fe.json"));
    CHECK(sidecar.find("\"region_effects\"") != std::string::npos);
    CHECK(sidecar.find("\"fe_lsdv\"") != std::string::npos);
}

TEST_CASE("fit ols --no-wages drops the wage column") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) +
                                    " fit ols --no-wages --panel " +
                                    quoted(testutil::fixture("panel_small.csv")),
                                scratch);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const std::string report = testutil::read_file(out.file("fit_ols_report.txt"));
    CHECK(report.find("s_diff") == std::string::npos);
    for (const char* name : {"const", "r_diff", "d_diff", "a_share", "f_diff"})
        CHECK(report.find(name) != std::string::npos);
    for (const char* label : {"G.L.", "R2", "SEE"})
        CHECK(report.find(label) != std::string::npos);
}

TEST_CASE("spatial fits run against inverse-distance weights") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const std::string common = " --panel " + quoted(testutil::fixture("panel_small.csv")) +
                               " --regions " + quoted(testutil::fixture("regions_small.csv"));

    const CliResult sar =
        run_cli("--output-dir " + quoted(out.dir()) + " fit sar" + common, scratch);
    INFO(sar.err);
    REQUIRE(sar.exit_code == 0);
    const std::string sar_report = testutil::read_file(out.file("fit_sar_report.txt"));
    CHECK(sar_report.find("rho (W y)") != std::string::npos);
    CHECK(sar_report.find("logL") != std::string::npos);

    const CliResult sem =
        run_cli("--output-dir " + quoted(out.dir()) + " fit sem" + common, scratch);
    INFO(sem.err);
    REQUIRE(sem.exit_code == 0);
    const std::string sem_report = testutil::read_file(out.file("fit_sem_report.txt"));
    CHECK(sem_report.find("lambda (W e)") != std::string::npos);
}

TEST_CASE("fit sar without any weights source is an input error") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) + " fit sar --panel " +
                                    quoted(testutil::fixture("panel_small.csv")),
                                scratch);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("--weights or --regions") != std::string::npos);
    CHECK_FALSE(exists(out.file("fit_sar_report.txt")));
}

TEST_CASE("diagnose writes the battery and a JSON sidecar") {
    testutil::TempDir scratch;
    testutil::TempDir run_a;
    testutil::TempDir run_b;
    const std::string common = " diagnose --panel " +
                               quoted(testutil::fixture("panel_small.csv")) + " --regions " +
                               quoted(testutil::fixture("regions_small.csv"));

    const CliResult a = run_cli("--output-dir " + quoted(run_a.dir()) + common, scratch);
    INFO(a.err);
    REQUIRE(a.exit_code == 0);
    REQUIRE(exists(run_a.file("diagnose_report.txt")));
    REQUIRE(exists(run_a.file("diagnose.json")));

    const std::string report = testutil::read_file(run_a.file("diagnose_report.txt"));
    const std::vector<std::string> battery = {"JB",  "BP",   "KB",  "M'I",
                                              "LML", "LMRL", "LME", "LMRE"};
    std::size_t prev = 0;
    for (const auto& label : battery) {
        const std::size_t pos = report.find(label);
        REQUIRE(pos != std::string::npos);
        CHECK(pos >= prev);
        prev = pos;
    }
    const std::string sidecar = testutil::read_file(run_a.file("diagnose.json"));
    CHECK(sidecar.find("\"moran\"") != std::string::npos);
    CHECK(sidecar.find("\"tests\"") != std::string::npos);

    const CliResult b = run_cli("--output-dir " + quoted(run_b.dir()) + common, scratch);
    REQUIRE(b.exit_code == 0);
    CHECK(testutil::read_file(run_b.file("diagnose_report.txt")) == report);
    CHECK(testutil::read_file(run_b.file("diagnose.json")) == sidecar);
}

TEST_CASE("specsearch records the decision trail") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) + " specsearch --panel " +
                                    quoted(testutil::fixture("panel_small.csv")) + " --regions " +
                                    quoted(testutil::fixture("regions_small.csv")),
                                scratch);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const std::string report = testutil::read_file(out.file("specsearch_report.txt"));
    CHECK(report.find("forward search at alpha = 0.050") != std::string::npos);
    CHECK(report.find("LM_lag") != std::string::npos);
    CHECK(report.find("LM_err") != std::string::npos);
    const std::string sidecar = testutil::read_file(out.file("specsearch.json"));
    CHECK(sidecar.find("\"chosen\"") != std::string::npos);
    CHECK(sidecar.find("\"trail\"") != std::string::npos);
}

TEST_CASE("simulate runs a panel scenario deterministically") {
    testutil::TempDir scratch;
    testutil::TempDir run_a;
    testutil::TempDir run_b;
    testutil::TempDir run_c;
    const std::string scenario = quoted(testutil::fixture("scenario_null.txt"));

    const CliResult a =
        run_cli("--output-dir " + quoted(run_a.dir()) + " simulate " + scenario, scratch);
    INFO(a.err);
    REQUIRE(a.exit_code == 0);
    REQUIRE(exists(run_a.file("simulated_panel.csv")));
    REQUIRE(exists(run_a.file("recovery_summary.csv")));
    CHECK(a.out.find("estimator: ols") != std::string::npos);
    CHECK(a.out.find("8 used") != std::string::npos);

    const CliResult b =
        run_cli("--output-dir " + quoted(run_b.dir()) + " simulate " + scenario, scratch);
    REQUIRE(b.exit_code == 0);
    CHECK(testutil::read_file(run_b.file("simulated_panel.csv")) ==
          testutil::read_file(run_a.file("simulated_panel.csv")));
    CHECK(testutil::read_file(run_b.file("recovery_summary.csv")) ==
          testutil::read_file(run_a.file("recovery_summary.csv")));
    CHECK(b.out == a.out);

    const CliResult c = run_cli("--output-dir " + quoted(run_c.dir()) + " --seed 99 simulate " +
                                    scenario,
                                scratch);
    REQUIRE(c.exit_code == 0);
    CHECK(testutil::read_file(run_c.file("recovery_summary.csv")) !=
          testutil::read_file(run_a.file("recovery_summary.csv")));
}

TEST_CASE("simulate handles a spatial scenario on a square lattice") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const std::string scenario = testutil::write_file(scratch, "scenario_sar.txt",
                                                      "estimator = sar\n"
                                                      "n_regions = 9\n"
                                                      "n_periods = 2\n"
                                                      "true_coefficients = 1.0, 0.5\n"
                                                      "rho = 0.4\n"
                                                      "sigma_e = 0.5\n"
                                                      "replications = 4\n"
                                                      "master_seed = 3\n");
    const CliResult r =
        run_cli("--output-dir " + quoted(out.dir()) + " simulate " + quoted(scenario), scratch);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    REQUIRE(exists(out.file("simulated_cross_section.csv")));
    REQUIRE(exists(out.file("recovery_summary.csv")));
    CHECK(r.out.find("estimator: sar") != std::string::npos);
    CHECK(r.out.find("rho") != std::string::npos);

    const std::string summary = testutil::read_file(out.file("recovery_summary.csv"));
    CHECK(summary.find("parameter,truth,") == 0);
    CHECK(summary.find("rho") != std::string::npos);
}

TEST_CASE("simulate with a non-square spatial scenario is rejected") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const std::string scenario = testutil::write_file(scratch, "scenario_bad_lattice.txt",
                                                      "estimator = sar\n"
                                                      "n_regions = 6\n"
                                                      "n_periods = 2\n"
                                                      "true_coefficients = 1.0, 0.5\n"
                                                      "rho = 0.4\n"
                                                      "sigma_e = 0.5\n"
                                                      "replications = 4\n"
                                                      "master_seed = 3\n");
    const CliResult r =
        run_cli("--output-dir " + quoted(out.dir()) + " simulate " + quoted(scenario), scratch);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("square") != std::string::npos);
    CHECK_FALSE(exists(out.file("recovery_summary.csv")));
}

TEST_CASE("a malformed scenario fails before any output is written") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) + " simulate " +
                                    quoted(testutil::fixture("scenario_bad.txt")),
                                scratch);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("bogus_key") != std::string::npos);
    CHECK_FALSE(exists(out.file("simulated_panel.csv")));
    CHECK_FALSE(exists(out.file("recovery_summary.csv")));
}

TEST_CASE("a missing panel file is an input error with no partial outputs") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) + " fit ols --panel " +
                                    quoted(out.file("no_such_panel.csv")),
                                scratch);
    CHECK(r.exit_code == 2);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(exists(out.file("fit_ols_report.txt")));
    CHECK_FALSE(exists(out.file("fit_ols.json")));
}

TEST_CASE("usage errors exit with code 1") {
    testutil::TempDir scratch;

    SECTION("no subcommand") {
        const CliResult r = run_cli("", scratch);
        CHECK(r.exit_code == 1);
    }
    SECTION("unknown subcommand") {
        const CliResult r = run_cli("frobnicate", scratch);
        CHECK(r.exit_code == 1);
    }
    SECTION("unknown model name") {
        const CliResult r = run_cli("fit banana --panel " +
                                        quoted(testutil::fixture("panel_small.csv")),
                                    scratch);
        CHECK(r.exit_code == 1);
    }
    SECTION("missing required panel option") {
        const CliResult r = run_cli("fit ols", scratch);
        CHECK(r.exit_code == 1);
    }
}

TEST_CASE("weights export round-trips through the loader") {
    testutil::TempDir scratch;
    testutil::TempDir out;
    const CliResult r = run_cli("--output-dir " + quoted(out.dir()) +
                                    " weights export --regions " +
                                    quoted(testutil::fixture("regions_small.csv")) +
                                    " --out w.csv",
                                scratch);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("row-standardized") != std::string::npos);

    const netmig::SpatialWeights w = netmig::load_weights_csv(out.file("w.csv"));
    REQUIRE(w.n() == 8);
    CHECK(w.standardized);
    for (Eigen::Index i = 0; i < w.n(); ++i)
        CHECK(w.matrix.row(i).sum() == Catch::Approx(1.0).margin(1e-9));

    const CliResult raw = run_cli("--output-dir " + quoted(out.dir()) +
                                      " weights export --no-standardize --regions " +
                                      quoted(testutil::fixture("regions_small.csv")) +
                                      " --out w_raw.csv",
                                  scratch);
    REQUIRE(raw.exit_code == 0);
    const netmig::SpatialWeights wr = netmig::load_weights_csv(out.file("w_raw.csv"));
    CHECK_FALSE(wr.standardized);
    CHECK(wr.matrix(0, 1) > wr.matrix(0, 7)); // nearer neighbours weigh more
}
