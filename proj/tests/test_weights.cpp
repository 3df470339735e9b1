#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <netmig/rng.hpp>
#include <netmig/weights.hpp>

#include "helpers.hpp"

using namespace netmig;
using Catch::Approx;

namespace {

std::vector<Region> two_regions() {
    return {Region{"A", "A", NutsLevel::III, 38.7223, -9.1393},
            Region{"B", "B", NutsLevel::III, 41.1579, -8.6291}};
}

/// Spherical law of cosines, an independent path to the same sphere.
double law_of_cosines_km(double lat1, double lon1, double lat2, double lon2) {
    const double d2r = M_PI / 180.0;
    const double c = std::sin(lat1 * d2r) * std::sin(lat2 * d2r) +
                     std::cos(lat1 * d2r) * std::cos(lat2 * d2r) * std::cos((lon2 - lon1) * d2r);
    return 6371.0088 * std::acos(std::min(1.0, std::max(-1.0, c)));
}

} // namespace

TEST_CASE("great-circle distance matches independent oracles") {
    // Lisbon to Porto, precomputed haversine on the mean-radius sphere.
    CHECK(great_circle_km(38.7223, -9.1393, 41.1579, -8.6291) ==
          Approx(274.29588460628884).epsilon(1e-12));
    // Quarter meridian equals pi R / 2.
    CHECK(great_circle_km(0.0, 0.0, 90.0, 0.0) == Approx(M_PI * 6371.0088 / 2.0).epsilon(1e-12));
    CHECK(great_circle_km(0.0, 0.0, 0.0, 90.0) == Approx(M_PI * 6371.0088 / 2.0).epsilon(1e-12));

    CHECK(great_circle_km(38.0, -9.0, 38.0, -9.0) == 0.0);
    CHECK(great_circle_km(38.0, -9.0, 40.0, -8.0) ==
          Approx(great_circle_km(40.0, -8.0, 38.0, -9.0)).epsilon(1e-14));

    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const double lat1 = rng.uniform(-80.0, 80.0), lon1 = rng.uniform(-180.0, 180.0);
        const double lat2 = rng.uniform(-80.0, 80.0), lon2 = rng.uniform(-180.0, 180.0);
        CHECK(great_circle_km(lat1, lon1, lat2, lon2) ==
              Approx(law_of_cosines_km(lat1, lon1, lat2, lon2)).margin(1e-5));
    }
}

TEST_CASE("inverse-distance weights") {
    const auto regions = load_regions_csv(testutil::fixture("regions_small.csv"));
    const SpatialWeights w = inverse_distance_weights(regions);

    REQUIRE(w.n() == 8);
    CHECK_FALSE(w.standardized);
    CHECK(w.matrix.diagonal().isZero(0.0));
    CHECK(w.matrix(0, 1) == Approx(1.0 / 68.46726192976334).epsilon(1e-12));
    CHECK(w.matrix(0, 1) == w.matrix(1, 0));
    CHECK(w.matrix.minCoeff() >= 0.0);

    const SpatialWeights w2 = inverse_distance_weights(regions, 2.0);
    CHECK(w2.matrix(0, 1) == Approx(w.matrix(0, 1) * w.matrix(0, 1)).epsilon(1e-12));

    SECTION("coincident coordinates are rejected") {
        auto bad = regions;
        bad[1].latitude = bad[0].latitude;
        bad[1].longitude = bad[0].longitude;
        CHECK_THROWS_AS(inverse_distance_weights(bad), CoincidentCoordinatesError);
    }
    SECTION("a single region cannot form a weights matrix") {
        CHECK_THROWS_AS(inverse_distance_weights({regions[0]}), DimensionMismatchError);
    }
    SECTION("doubling the distance halves the weight") {
        const std::vector<Region> line = {Region{"P1", "P1", NutsLevel::III, 0.0, 0.0},
                                          Region{"P2", "P2", NutsLevel::III, 0.0, 1.0},
                                          Region{"P3", "P3", NutsLevel::III, 0.0, 2.0}};
        const SpatialWeights lw = inverse_distance_weights(line);
        CHECK(lw.matrix(0, 2) == Approx(lw.matrix(0, 1) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("binary contiguity weights") {
    const auto regions = two_regions();
    std::vector<Region> three = regions;
    three.push_back(Region{"C", "C", NutsLevel::III, 40.0, -8.0});

    const SpatialWeights w = binary_contiguity_weights({{"A", "B"}, {"B", "C"}}, three);
    CHECK(w.matrix(0, 1) == 1.0);
    CHECK(w.matrix(1, 0) == 1.0);
    CHECK(w.matrix(1, 2) == 1.0);
    CHECK(w.matrix(0, 2) == 0.0);
    CHECK(w.total_weight() == 4.0);

    CHECK_THROWS_AS(binary_contiguity_weights({{"A", "Z"}}, three), UnknownRegionError);
    CHECK_THROWS_AS(binary_contiguity_weights({{"A", "A"}}, three), SelfPairError);

    SECTION("an empty pair list yields an all-zero matrix") {
        const SpatialWeights empty = binary_contiguity_weights({}, three);
        CHECK(empty.matrix.cwiseAbs().maxCoeff() == 0.0);
        CHECK(empty.total_weight() == 0.0);
    }
}

TEST_CASE("row standardization sums rows to one and is idempotent") {
    const auto regions = load_regions_csv(testutil::fixture("regions_small.csv"));
    const SpatialWeights raw = inverse_distance_weights(regions);
    const RowStandardizeResult res = row_standardize(raw);

    CHECK(res.weights.standardized);
    CHECK(res.isolated_regions.empty());
    for (Eigen::Index i = 0; i < res.weights.n(); ++i)
        CHECK(res.weights.matrix.row(i).sum() == Approx(1.0).margin(1e-14));

    const RowStandardizeResult twice = row_standardize(res.weights);
    CHECK((twice.weights.matrix - res.weights.matrix).cwiseAbs().maxCoeff() <= 1e-15);

    // A row-standardized matrix maps the constant vector to itself.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(res.weights.n());
    CHECK((res.weights.matrix * ones - ones).cwiseAbs().maxCoeff() <= 1e-14);

    SECTION("largest real eigenvalue of a standardized matrix is one") {
        Rng rng(2026);
        for (int rep = 0; rep < 5; ++rep) {
            const int n = 4 + rep;
            SpatialWeights w;
            w.matrix = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                w.region_order.push_back("R" + std::to_string(rep) + "_" + std::to_string(i));
                for (int j = 0; j < n; ++j)
                    if (i != j) w.matrix(i, j) = 0.05 + rng.uniform(0.0, 1.0);
            }
            const SpatialWeights std_w = row_standardize(w).weights;
            const Eigen::EigenSolver<Eigen::MatrixXd> es(std_w.matrix);
            double largest_real = -std::numeric_limits<double>::infinity();
            for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
                if (std::abs(es.eigenvalues()[k].imag()) < 1e-10)
                    largest_real = std::max(largest_real, es.eigenvalues()[k].real());
            CHECK(largest_real == Approx(1.0).margin(1e-8));
        }
    }

    SECTION("isolated regions are reported and keep zero rows") {
        SpatialWeights w;
        w.region_order = {"A", "B", "C"};
        w.matrix = Eigen::MatrixXd::Zero(3, 3);
        w.matrix(0, 1) = 2.0;
        w.matrix(1, 0) = 2.0;
        const RowStandardizeResult r = row_standardize(w);
        CHECK(r.isolated_regions == std::vector<std::string>{"C"});
        CHECK(r.weights.matrix.row(2).sum() == 0.0);
        CHECK(r.weights.matrix(0, 1) == 1.0);
    }
}

TEST_CASE("weights validation rejects malformed matrices") {
    SpatialWeights w;
    w.region_order = {"A", "B"};
    w.matrix = Eigen::MatrixXd::Zero(2, 2);
    w.matrix(0, 1) = 1.0;
    w.matrix(1, 0) = 1.0;
    CHECK_NOTHROW(w.validate());

    SECTION("nonzero diagonal") {
        w.matrix(0, 0) = 0.5;
        CHECK_THROWS_AS(w.validate(), DimensionMismatchError);
    }
    SECTION("negative entry") {
        w.matrix(0, 1) = -1.0;
        CHECK_THROWS_AS(w.validate(), DimensionMismatchError);
    }
    SECTION("order/matrix size mismatch") {
        w.region_order.push_back("C");
        CHECK_THROWS_AS(w.validate(), DimensionMismatchError);
    }
    SECTION("standardized flag checked against row sums") {
        w.standardized = true;
        w.matrix(0, 1) = 0.9;
        CHECK_THROWS_AS(w.validate(), DimensionMismatchError);
    }
}

TEST_CASE("rook lattice adjacency") {
    const SpatialWeights w = rook_lattice_weights(2, 2);
    REQUIRE(w.n() == 4);
    // Every cell of a 2x2 grid has exactly two rook neighbors.
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(w.matrix.row(i).sum() == 2.0);
    CHECK(w.total_weight() == 8.0);
    // Diagonal cells are not neighbors: grid order is row-major.
    CHECK(w.matrix(0, 3) == 0.0);
    CHECK(w.matrix(1, 2) == 0.0);

    const SpatialWeights line = rook_lattice_weights(1, 4);
    CHECK(line.matrix(0, 1) == 1.0);
    CHECK(line.matrix(1, 2) == 1.0);
    CHECK(line.matrix(2, 3) == 1.0);
    CHECK(line.matrix(0, 2) == 0.0);
    CHECK(line.total_weight() == 6.0);
}

TEST_CASE("block-diagonal expansion repeats the structure per year") {
    const SpatialWeights w = row_standardize(rook_lattice_weights(2, 2)).weights;
    const SpatialWeights big = blockdiag_weights(w, {2001, 2002, 2003});
    REQUIRE(big.n() == 12);
    CHECK(big.standardized);
    CHECK(big.region_order[0] == w.region_order[0] + "#2001");
    CHECK(big.region_order[4] == w.region_order[0] + "#2002");
    for (int t = 0; t < 3; ++t)
        CHECK((big.matrix.block(4 * t, 4 * t, 4, 4) - w.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(big.matrix.block(0, 4, 4, 4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weights CSV round trip") {
    testutil::TempDir tmp;
    const auto regions = load_regions_csv(testutil::fixture("regions_small.csv"));

    SECTION("raw weights survive with 12 significant digits") {
        const SpatialWeights w = inverse_distance_weights(regions);
        const std::string path = tmp.file("w.csv");
        save_weights_csv(w, path);
        const SpatialWeights r = load_weights_csv(path);
        REQUIRE(r.region_order == w.region_order);
        CHECK_FALSE(r.standardized);
        for (Eigen::Index i = 0; i < w.n(); ++i)
            for (Eigen::Index j = 0; j < w.n(); ++j)
                CHECK(r.matrix(i, j) == Approx(w.matrix(i, j)).epsilon(1e-11).margin(1e-300));
    }
    SECTION("standardized flag is rediscovered on load") {
        const SpatialWeights w = row_standardize(inverse_distance_weights(regions)).weights;
        const std::string path = tmp.file("ws.csv");
        save_weights_csv(w, path);
        CHECK(load_weights_csv(path).standardized);
    }
    SECTION("row label mismatch rejected") {
        const auto path = testutil::write_file(tmp, "bad.csv",
                                               "region_id,A,B\nB,0,1\nA,1,0\n");
        CHECK_THROWS_WITH(load_weights_csv(path),
                          Catch::Matchers::ContainsSubstring("does not match header order"));
    }
    SECTION("wrong row count rejected") {
        const auto path = testutil::write_file(tmp, "short.csv", "region_id,A,B\nA,0,1\n");
        CHECK_THROWS_AS(load_weights_csv(path), ParseError);
    }
}

TEST_CASE("regions CSV validation") {
    testutil::TempDir tmp;
    SECTION("header must match exactly") {
        const auto path = testutil::write_file(tmp, "r.csv", "region_id,name,lat,lon\nA,A,1,2\n");
        CHECK_THROWS_AS(load_regions_csv(path), MissingColumnError);
    }
    SECTION("latitude range checked") {
        const auto path = testutil::write_file(
            tmp, "r.csv", "region_id,name,nuts_level,lat,lon\nA,A,III,95.0,0.0\n");
        CHECK_THROWS_AS(load_regions_csv(path), ParseError);
    }
    SECTION("duplicate region id rejected") {
        const auto path = testutil::write_file(
            tmp, "r.csv",
            "region_id,name,nuts_level,lat,lon\nA,A,III,1.0,0.0\nA,B,III,2.0,0.0\n");
        CHECK_THROWS_AS(load_regions_csv(path), ParseError);
    }
}
