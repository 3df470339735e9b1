#ifndef NETMIG_REGION_HPP
#define NETMIG_REGION_HPP

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "netmig/csv.hpp"
#include "netmig/errors.hpp"

namespace netmig {

enum class NutsLevel { II, III };

struct Region {
    std::string id;
    std::string name;
    NutsLevel nuts_level = NutsLevel::II;
    double latitude = 0.0;  // decimal degrees, [-90, 90]
    double longitude = 0.0; // decimal degrees, [-180, 180]
};

inline void validate_regions(const std::vector<Region>& regions) {
    std::set<std::string> seen;
    for (const auto& r : regions) {
        if (!seen.insert(r.id).second) throw ParseError("duplicate region id: " + r.id);
        if (r.latitude < -90.0 || r.latitude > 90.0)
            throw ParseError("region " + r.id + ": latitude out of range: " + std::to_string(r.latitude));
        if (r.longitude < -180.0 || r.longitude > 180.0)
            throw ParseError("region " + r.id + ": longitude out of range: " + std::to_string(r.longitude));
    }
}

/// Regions CSV: region_id,name,nuts_level,lat,lon
inline std::vector<Region> load_regions_csv(const std::string& path) {
    const auto table = csv::read_file(path);
    const std::vector<std::string> expected = {"region_id", "name", "nuts_level", "lat", "lon"};
    if (table.header != expected) {
        std::string msg = "regions file " + path + ": header must be region_id,name,nuts_level,lat,lon";
        throw MissingColumnError(msg);
    }
    std::vector<Region> regions;
    regions.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string ctx = path + ":" + std::to_string(table.line_numbers[i]);
        Region r;
        r.id = row[0];
        r.name = row[1];
        if (row[2] == "II") {
            r.nuts_level = NutsLevel::II;
        } else if (row[2] == "III") {
            r.nuts_level = NutsLevel::III;
        } else {
            throw ParseError(ctx + ": nuts_level must be II or III, got '" + row[2] + "'");
        }
        r.latitude = csv::parse_double(row[3], ctx + " lat");
        r.longitude = csv::parse_double(row[4], ctx + " lon");
        regions.push_back(std::move(r));
    }
    validate_regions(regions);
    return regions;
}

/// Deterministic synthetic region layout: ids R01, R02, ... placed on a
/// coordinate grid at national-ish scale, for simulation scenarios.
inline std::vector<Region> synthetic_regions(int n) {
    std::vector<Region> regions;
    regions.reserve(static_cast<std::size_t>(n));
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (int i = 0; i < n; ++i) {
        Region r;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "R%02d", i + 1);
        r.id = buf;
        r.name = std::string("Synthetic ") + buf;
        r.nuts_level = NutsLevel::III;
        r.latitude = 37.0 + 0.9 * (i / cols);
        r.longitude = -9.5 + 0.9 * (i % cols);
        regions.push_back(std::move(r));
    }
    return regions;
}

} // namespace netmig

#endif // NETMIG_REGION_HPP
