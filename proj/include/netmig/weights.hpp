#ifndef NETMIG_WEIGHTS_HPP
#define NETMIG_WEIGHTS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netmig/csv.hpp"
#include "netmig/errors.hpp"
#include "netmig/region.hpp"

namespace netmig {

/// Nonnegative spatial weight matrix with zero diagonal over an ordered set
/// of regions. Immutable after construction.
struct SpatialWeights {
    std::vector<std::string> region_order;
    Eigen::MatrixXd matrix;
    bool standardized = false;

    Eigen::Index n() const { return matrix.rows(); }

    /// S0 = sum of all weights.
    double total_weight() const { return matrix.sum(); }

    void validate() const {
        if (matrix.rows() != matrix.cols())
            throw DimensionMismatchError("weights: matrix must be square");
        if (matrix.rows() < 2) throw DimensionMismatchError("weights: need at least 2 regions");
        if (static_cast<Eigen::Index>(region_order.size()) != matrix.rows())
            throw DimensionMismatchError("weights: region order does not match matrix size");
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (matrix(i, i) != 0.0)
                throw DimensionMismatchError("weights: diagonal must be zero at " +
                                             region_order[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < matrix.cols(); ++j)
                if (matrix(i, j) < 0.0)
                    throw DimensionMismatchError("weights: negative weight at (" +
                                                 std::to_string(i) + "," + std::to_string(j) + ")");
        }
        if (standardized) {
            for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
                const double s = matrix.row(i).sum();
                if (s > 0.0 && std::abs(s - 1.0) > 1e-12)
                    throw DimensionMismatchError("weights: standardized row " + std::to_string(i) +
                                                 " sums to " + std::to_string(s));
            }
        }
    }
};

/// Great-circle distance in kilometers on the mean-radius sphere.
inline double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusKm = 6371.0088;
    constexpr double kDegToRad = M_PI / 180.0;
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlam = (lon2 - lon1) * kDegToRad;
    const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
    return 2.0 * kEarthRadiusKm * std::atan2(std::sqrt(a), std::sqrt(std::max(0.0, 1.0 - a)));
}

/// w_ij = 1 / d(i,j)^power with great-circle distances; symmetric, not
/// standardized.
inline SpatialWeights inverse_distance_weights(const std::vector<Region>& regions, double power = 1.0) {
    if (regions.size() < 2)
        throw DimensionMismatchError("inverse_distance_weights: need at least 2 regions");
    if (!(power > 0.0))
        throw DimensionMismatchError("inverse_distance_weights: power must be positive");
    const Eigen::Index n = static_cast<Eigen::Index>(regions.size());
    SpatialWeights w;
    for (const auto& r : regions) w.region_order.push_back(r.id);
    w.matrix = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto& a = regions[static_cast<std::size_t>(i)];
            const auto& b = regions[static_cast<std::size_t>(j)];
            const double d = great_circle_km(a.latitude, a.longitude, b.latitude, b.longitude);
            if (!(d > 0.0))
                throw CoincidentCoordinatesError("regions " + a.id + " and " + b.id +
                                                 " have coincident coordinates");
            const double wij = 1.0 / std::pow(d, power);
            w.matrix(i, j) = wij;
            w.matrix(j, i) = wij;
        }
    }
    w.standardized = false;
    w.validate();
    return w;
}

/// Symmetric 0/1 adjacency from explicit id pairs.
inline SpatialWeights binary_contiguity_weights(const std::vector<std::pair<std::string, std::string>>& adjacency,
                                                const std::vector<Region>& regions) {
    if (regions.size() < 2)
        throw DimensionMismatchError("binary_contiguity_weights: need at least 2 regions");
    const Eigen::Index n = static_cast<Eigen::Index>(regions.size());
    std::map<std::string, Eigen::Index> index;
    SpatialWeights w;
    for (Eigen::Index i = 0; i < n; ++i) {
        index[regions[static_cast<std::size_t>(i)].id] = i;
        w.region_order.push_back(regions[static_cast<std::size_t>(i)].id);
    }
    w.matrix = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [a, b] : adjacency) {
        if (a == b) throw SelfPairError("adjacency pair (" + a + "," + b + ") is a self pair");
        auto ia = index.find(a);
        auto ib = index.find(b);
        if (ia == index.end()) throw UnknownRegionError("adjacency references unknown region: " + a);
        if (ib == index.end()) throw UnknownRegionError("adjacency references unknown region: " + b);
        w.matrix(ia->second, ib->second) = 1.0;
        w.matrix(ib->second, ia->second) = 1.0;
    }
    w.standardized = false;
    w.validate();
    return w;
}

struct RowStandardizeResult {
    SpatialWeights weights;
    std::vector<std::string> isolated_regions; // zero rows left untouched
};

/// Divide each nonzero row by its row sum. Idempotent; zero rows are kept and
/// reported.
inline RowStandardizeResult row_standardize(const SpatialWeights& w) {
    RowStandardizeResult out;
    out.weights = w;
    for (Eigen::Index i = 0; i < w.matrix.rows(); ++i) {
        const double s = w.matrix.row(i).sum();
        if (s > 0.0) {
            out.weights.matrix.row(i) /= s;
        } else {
            out.isolated_regions.push_back(w.region_order[static_cast<std::size_t>(i)]);
        }
    }
    out.weights.standardized = true;
    out.weights.validate();
    return out;
}

/// Rook-contiguity lattice on an nrows x ncols grid; ids mirror the synthetic
/// region naming. Used by simulation scenarios and tests.
inline SpatialWeights rook_lattice_weights(int nrows, int ncols) {
    const int n = nrows * ncols;
    std::vector<Region> regions = synthetic_regions(n);
    std::vector<std::pair<std::string, std::string>> pairs;
    auto id = [&](int r, int c) { return regions[static_cast<std::size_t>(r * ncols + c)].id; };
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (c + 1 < ncols) pairs.emplace_back(id(r, c), id(r, c + 1));
            if (r + 1 < nrows) pairs.emplace_back(id(r, c), id(r + 1, c));
        }
    }
    return binary_contiguity_weights(pairs, regions);
}

/// I_T (x) W block expansion: each of the T cross-sections keeps the same
/// neighbor structure. Region order repeats with a #year suffix.
inline SpatialWeights blockdiag_weights(const SpatialWeights& w, const std::vector<int>& years) {
    const Eigen::Index n = w.n();
    const Eigen::Index T = static_cast<Eigen::Index>(years.size());
    SpatialWeights out;
    out.matrix = Eigen::MatrixXd::Zero(n * T, n * T);
    for (Eigen::Index t = 0; t < T; ++t) {
        out.matrix.block(t * n, t * n, n, n) = w.matrix;
        for (const auto& id : w.region_order)
            out.region_order.push_back(id + "#" + std::to_string(years[static_cast<std::size_t>(t)]));
    }
    out.standardized = w.standardized;
    out.validate();
    return out;
}

/// Weights CSV: header `region_id,<id1>,...`; one row per region. Values are
/// written with 12 significant digits.
inline void save_weights_csv(const SpatialWeights& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "region_id";
    for (const auto& id : w.region_order) out << ',' << id;
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < w.n(); ++i) {
        out << w.region_order[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < w.n(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.12g", w.matrix(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

inline SpatialWeights load_weights_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    if (table.header.empty() || table.header[0] != "region_id")
        throw MissingColumnError(path + ": first header field must be region_id");
    SpatialWeights w;
    for (std::size_t j = 1; j < table.header.size(); ++j) w.region_order.push_back(table.header[j]);
    const Eigen::Index n = static_cast<Eigen::Index>(w.region_order.size());
    if (static_cast<Eigen::Index>(table.rows.size()) != n)
        throw ParseError(path + ": expected " + std::to_string(n) + " weight rows, got " +
                         std::to_string(table.rows.size()));
    w.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const std::string ctx = path + ":" + std::to_string(table.line_numbers[static_cast<std::size_t>(i)]);
        if (row[0] != w.region_order[static_cast<std::size_t>(i)])
            throw ParseError(ctx + ": row label '" + row[0] + "' does not match header order");
        for (Eigen::Index j = 0; j < n; ++j)
            w.matrix(i, j) = csv::parse_double(row[static_cast<std::size_t>(j) + 1], ctx);
    }
    bool all_rows_unit = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = w.matrix.row(i).sum();
        if (s > 0.0 && std::abs(s - 1.0) > 1e-12) all_rows_unit = false;
    }
    w.standardized = all_rows_unit;
    w.validate();
    return w;
}

} // namespace netmig

#endif // NETMIG_WEIGHTS_HPP
