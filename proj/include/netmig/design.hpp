#ifndef NETMIG_DESIGN_HPP
#define NETMIG_DESIGN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "netmig/errors.hpp"

namespace netmig {

/// Identifies one observation row as a region-year pair.
struct RowKey {
    std::string region_id;
    int year = 0;

    friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Response vector plus named regressor matrix. Immutable by convention once
/// built; every estimator takes it by const reference.
struct DesignMatrix {
    Eigen::VectorXd response;
    Eigen::MatrixXd regressors;
    std::vector<std::string> column_names;
    std::vector<RowKey> row_keys;

    Eigen::Index n() const { return regressors.rows(); }
    Eigen::Index k() const { return regressors.cols(); }

    /// Index of a constant nonzero column, or -1 if none.
    Eigen::Index intercept_column() const {
        for (Eigen::Index j = 0; j < regressors.cols(); ++j) {
            const double v0 = regressors(0, j);
            if (v0 == 0.0) continue;
            if ((regressors.col(j).array() == v0).all()) return j;
        }
        return -1;
    }

    void validate() const {
        if (regressors.rows() != response.size())
            throw DimensionMismatchError("design: response length does not match regressor rows");
        if (!row_keys.empty() && static_cast<Eigen::Index>(row_keys.size()) != regressors.rows())
            throw DimensionMismatchError("design: row keys do not match regressor rows");
        if (static_cast<Eigen::Index>(column_names.size()) != regressors.cols())
            throw DimensionMismatchError("design: column names do not match regressor columns");
        if (regressors.cols() < 1 || regressors.rows() <= regressors.cols())
            throw DimensionMismatchError("design: requires n > k >= 1");
        if (!response.allFinite() || !regressors.allFinite())
            throw DimensionMismatchError("design: non-finite entries");
        std::set<std::string> names(column_names.begin(), column_names.end());
        if (names.size() != column_names.size())
            throw DimensionMismatchError("design: duplicate column names");
    }
};

} // namespace netmig

#endif // NETMIG_DESIGN_HPP
