#ifndef NETMIG_DATASET_HPP
#define NETMIG_DATASET_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "netmig/csv.hpp"
#include "netmig/design.hpp"
#include "netmig/errors.hpp"
#include "netmig/region.hpp"

namespace netmig {

/// Raw variables observed for one region in one year.
struct Observation {
    double net_migration = 0.0;    // persons/year, may be negative
    double active_pop = 0.0;       // persons, > 0
    double real_output = 0.0;      // currency units
    double unemployment_rate = 0.0; // fraction in [0, 1]
    double agri_employment = 0.0;  // persons
    double total_employment = 0.0; // persons, > 0
    double wage_index = 0.0;       // index units
    double housing_stock = 0.0;    // dwellings, > 0
};

/// Balanced region-by-year table of raw regional variables. Regions are kept
/// sorted by id and years strictly increasing; immutable after construction.
class PanelDataset {
public:
    PanelDataset(std::vector<Region> regions, std::vector<int> years,
                 std::vector<Observation> observations)
        : regions_(std::move(regions)), years_(std::move(years)), obs_(std::move(observations)) {
        validate();
    }

    const std::vector<Region>& regions() const { return regions_; }
    const std::vector<int>& years() const { return years_; }
    std::size_t n_regions() const { return regions_.size(); }
    std::size_t n_years() const { return years_.size(); }

    const Observation& at(std::size_t region_idx, std::size_t year_idx) const {
        return obs_[region_idx * years_.size() + year_idx];
    }

    std::size_t region_index(const std::string& id) const {
        for (std::size_t i = 0; i < regions_.size(); ++i)
            if (regions_[i].id == id) return i;
        throw UnknownRegionError("unknown region id: " + id);
    }

private:
    void validate() const {
        if (regions_.size() < 1) throw UnbalancedPanelError("panel has no regions");
        if (years_.size() < 1) throw UnbalancedPanelError("panel has no years");
        if (obs_.size() != regions_.size() * years_.size())
            throw UnbalancedPanelError("panel is not balanced: expected " +
                                       std::to_string(regions_.size() * years_.size()) +
                                       " observations, got " + std::to_string(obs_.size()));
        for (std::size_t i = 1; i < years_.size(); ++i)
            if (years_[i] <= years_[i - 1])
                throw ParseError("years must be strictly increasing");
        for (std::size_t r = 0; r < regions_.size(); ++r) {
            for (std::size_t t = 0; t < years_.size(); ++t) {
                const auto& o = at(r, t);
                const std::string key = regions_[r].id + "/" + std::to_string(years_[t]);
                if (!(o.active_pop > 0.0))
                    throw NonPositiveDenominatorError("active_pop <= 0 at " + key);
                if (!(o.total_employment > 0.0))
                    throw NonPositiveDenominatorError("total_employment <= 0 at " + key);
                if (!(o.housing_stock > 0.0))
                    throw NonPositiveDenominatorError("housing_stock <= 0 at " + key);
                if (o.unemployment_rate < 0.0 || o.unemployment_rate > 1.0)
                    throw ParseError("unemployment_rate outside [0,1] at " + key);
            }
        }
    }

    std::vector<Region> regions_;
    std::vector<int> years_;
    std::vector<Observation> obs_;
};

namespace detail {

inline const std::vector<std::string>& panel_columns() {
    static const std::vector<std::string> cols = {
        "region_id",       "year",           "net_migration",    "active_pop",
        "real_output",     "unemployment_rate", "agri_employment", "total_employment",
        "wage_index",      "housing_stock"};
    return cols;
}

} // namespace detail

/// Load the panel CSV (schema: region_id,year,net_migration,active_pop,
/// real_output,unemployment_rate,agri_employment,total_employment,wage_index,
/// housing_stock). Rows are normalized to (region, year) ascending order and
/// the panel must be balanced. When `known_regions` is given, panel ids must
/// match it exactly and region metadata is attached.
inline PanelDataset load_panel_csv(const std::string& path,
                                   const std::vector<Region>* known_regions = nullptr) {
    const auto table = csv::read_file(path);

    std::map<std::string, std::size_t> col_index;
    for (std::size_t j = 0; j < table.header.size(); ++j) col_index[table.header[j]] = j;
    for (const auto& want : detail::panel_columns()) {
        if (!col_index.count(want))
            throw MissingColumnError(path + ": missing column '" + want + "'");
    }
    for (const auto& have : table.header) {
        const auto& cols = detail::panel_columns();
        if (std::find(cols.begin(), cols.end(), have) == cols.end())
            throw ParseError(path + ": unknown column '" + have + "'");
    }

    struct RawRow {
        std::string region_id;
        int year;
        Observation obs;
        std::size_t line;
    };
    std::vector<RawRow> raw;
    raw.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string ctx = path + ":" + std::to_string(table.line_numbers[i]);
        RawRow rr;
        rr.region_id = row[col_index["region_id"]];
        rr.year = static_cast<int>(csv::parse_long(row[col_index["year"]], ctx + " year"));
        rr.obs.net_migration = csv::parse_double(row[col_index["net_migration"]], ctx + " net_migration");
        rr.obs.active_pop = csv::parse_double(row[col_index["active_pop"]], ctx + " active_pop");
        rr.obs.real_output = csv::parse_double(row[col_index["real_output"]], ctx + " real_output");
        rr.obs.unemployment_rate =
            csv::parse_double(row[col_index["unemployment_rate"]], ctx + " unemployment_rate");
        rr.obs.agri_employment =
            csv::parse_double(row[col_index["agri_employment"]], ctx + " agri_employment");
        rr.obs.total_employment =
            csv::parse_double(row[col_index["total_employment"]], ctx + " total_employment");
        rr.obs.wage_index = csv::parse_double(row[col_index["wage_index"]], ctx + " wage_index");
        rr.obs.housing_stock = csv::parse_double(row[col_index["housing_stock"]], ctx + " housing_stock");
        rr.line = table.line_numbers[i];
        raw.push_back(std::move(rr));
    }
    if (raw.empty()) throw ParseError(path + ": no data rows");

    std::vector<std::string> region_ids;
    std::vector<int> years;
    for (const auto& rr : raw) {
        if (std::find(region_ids.begin(), region_ids.end(), rr.region_id) == region_ids.end())
            region_ids.push_back(rr.region_id);
        if (std::find(years.begin(), years.end(), rr.year) == years.end()) years.push_back(rr.year);
    }
    std::sort(region_ids.begin(), region_ids.end());
    std::sort(years.begin(), years.end());

    // Balance: every region-year pair present exactly once.
    std::map<std::pair<std::string, int>, const RawRow*> cells;
    for (const auto& rr : raw) {
        auto key = std::make_pair(rr.region_id, rr.year);
        if (cells.count(key))
            throw ParseError(path + ":" + std::to_string(rr.line) + ": duplicate observation for " +
                             rr.region_id + "/" + std::to_string(rr.year));
        cells[key] = &rr;
    }
    std::string missing;
    for (const auto& id : region_ids) {
        for (int y : years) {
            if (!cells.count({id, y})) {
                if (!missing.empty()) missing += ", ";
                missing += id + "/" + std::to_string(y);
            }
        }
    }
    if (!missing.empty())
        throw UnbalancedPanelError(path + ": unbalanced panel, missing " + missing);

    std::vector<Region> regions;
    if (known_regions) {
        std::map<std::string, const Region*> by_id;
        for (const auto& r : *known_regions) by_id[r.id] = &r;
        for (const auto& id : region_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw UnknownRegionError(path + ": region '" + id + "' not in regions file");
            regions.push_back(*it->second);
        }
        if (known_regions->size() != region_ids.size())
            throw UnknownRegionError(path + ": regions file lists regions absent from the panel");
    } else {
        for (const auto& id : region_ids) regions.push_back(Region{id, id, NutsLevel::II, 0.0, 0.0});
    }

    std::vector<Observation> obs(region_ids.size() * years.size());
    for (std::size_t r = 0; r < region_ids.size(); ++r)
        for (std::size_t t = 0; t < years.size(); ++t)
            obs[r * years.size() + t] = cells.at({region_ids[r], years[t]})->obs;

    return PanelDataset(std::move(regions), std::move(years), std::move(obs));
}

/// Proportional change (v_t - v_prev) / v_prev.
inline double growth_rate(double value_t, double value_prev) {
    if (!(value_prev > 0.0))
        throw NonPositiveDenominatorError("growth_rate: previous value must be positive, got " +
                                          std::to_string(value_prev));
    return (value_t - value_prev) / value_prev;
}

/// Unweighted mean of `values` over all regions except `self_index`.
inline double external_average(const std::vector<double>& values, std::size_t self_index) {
    if (values.size() < 2) throw SingleRegionError("external_average: needs at least 2 regions");
    if (self_index >= values.size())
        throw DimensionMismatchError("external_average: self index out of range");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (i != self_index) sum += values[i];
    return sum / static_cast<double>(values.size() - 1);
}

struct MigrationVariableOptions {
    bool agri_as_share = true; // false: raw agricultural employment headcount
};

/// Regression variables per region and usable year (growth rates consume the
/// first panel year). Matrices are n_regions x (n_years - 1).
struct MigrationVariables {
    std::vector<std::string> region_order;
    std::vector<int> years_used;
    Eigen::MatrixXd sm_pa;   // net migration / active population
    Eigen::MatrixXd r_diff;  // own output growth minus external average
    Eigen::MatrixXd d_diff;  // own unemployment level minus external average
    Eigen::MatrixXd a_share; // agricultural employment share (or headcount)
    Eigen::MatrixXd s_diff;  // wage growth differential
    Eigen::MatrixXd f_diff;  // housing stock growth differential
    bool agri_as_share = true;
};

inline MigrationVariables build_migration_variables(const PanelDataset& panel,
                                                    MigrationVariableOptions opts = {}) {
    const std::size_t n = panel.n_regions();
    const std::size_t ny = panel.n_years();
    if (n < 2) throw SingleRegionError("build_migration_variables: needs at least 2 regions");
    if (ny < 2) throw UnbalancedPanelError("build_migration_variables: needs at least 2 years");
    const std::size_t nt = ny - 1; // usable years

    MigrationVariables mv;
    mv.agri_as_share = opts.agri_as_share;
    for (const auto& r : panel.regions()) mv.region_order.push_back(r.id);
    for (std::size_t t = 1; t < ny; ++t) mv.years_used.push_back(panel.years()[t]);

    auto alloc = [&] { return Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nt)); };
    mv.sm_pa = alloc();
    mv.r_diff = alloc();
    mv.d_diff = alloc();
    mv.a_share = alloc();
    mv.s_diff = alloc();
    mv.f_diff = alloc();

    std::vector<double> g_out(n), g_wage(n), g_house(n), unemp(n);
    for (std::size_t t = 1; t < ny; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& cur = panel.at(i, t);
            const auto& prev = panel.at(i, t - 1);
            const std::string key = mv.region_order[i] + "/" + std::to_string(panel.years()[t]);
            if (!(prev.real_output > 0.0))
                throw NonPositiveDenominatorError("real_output <= 0 entering growth at " + key);
            if (!(prev.wage_index > 0.0))
                throw NonPositiveDenominatorError("wage_index <= 0 entering growth at " + key);
            g_out[i] = growth_rate(cur.real_output, prev.real_output);
            g_wage[i] = growth_rate(cur.wage_index, prev.wage_index);
            g_house[i] = growth_rate(cur.housing_stock, prev.housing_stock);
            unemp[i] = cur.unemployment_rate;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& cur = panel.at(i, t);
            const Eigen::Index ii = static_cast<Eigen::Index>(i);
            const Eigen::Index tt = static_cast<Eigen::Index>(t - 1);
            mv.sm_pa(ii, tt) = cur.net_migration / cur.active_pop;
            mv.r_diff(ii, tt) = g_out[i] - external_average(g_out, i);
            mv.d_diff(ii, tt) = unemp[i] - external_average(unemp, i);
            mv.a_share(ii, tt) =
                opts.agri_as_share ? cur.agri_employment / cur.total_employment : cur.agri_employment;
            mv.s_diff(ii, tt) = g_wage[i] - external_average(g_wage, i);
            mv.f_diff(ii, tt) = g_house[i] - external_average(g_house, i);
        }
    }
    return mv;
}

/// Stack the migration variables into a regression design. Column order is
/// fixed: const, r_diff, d_diff, a_share[, s_diff][, f_diff]; rows run over
/// regions outer, usable years inner.
inline DesignMatrix to_panel_design(const MigrationVariables& vars, bool include_wage = true,
                                    bool include_housing = true) {
    const Eigen::Index n = vars.sm_pa.rows();
    const Eigen::Index nt = vars.sm_pa.cols();
    const Eigen::Index rows = n * nt;
    Eigen::Index k = 4;
    if (include_wage) ++k;
    if (include_housing) ++k;

    DesignMatrix d;
    d.response.resize(rows);
    d.regressors.resize(rows, k);
    d.column_names = {"const", "r_diff", "d_diff", vars.agri_as_share ? "a_share" : "a_headcount"};
    if (include_wage) d.column_names.push_back("s_diff");
    if (include_housing) d.column_names.push_back("f_diff");
    d.row_keys.reserve(static_cast<std::size_t>(rows));

    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = 0; t < nt; ++t, ++row) {
            d.response(row) = vars.sm_pa(i, t);
            Eigen::Index col = 0;
            d.regressors(row, col++) = 1.0;
            d.regressors(row, col++) = vars.r_diff(i, t);
            d.regressors(row, col++) = vars.d_diff(i, t);
            d.regressors(row, col++) = vars.a_share(i, t);
            if (include_wage) d.regressors(row, col++) = vars.s_diff(i, t);
            if (include_housing) d.regressors(row, col++) = vars.f_diff(i, t);
            d.row_keys.push_back(RowKey{vars.region_order[static_cast<std::size_t>(i)],
                                        vars.years_used[static_cast<std::size_t>(t)]});
        }
    }
    d.validate();
    return d;
}

} // namespace netmig

#endif // NETMIG_DATASET_HPP
