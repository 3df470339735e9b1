#ifndef NETMIG_DISTRIBUTIONS_HPP
#define NETMIG_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace netmig {

/// P(X > x) for X ~ chi-square(df). Negative statistics (possible for the
/// pseudo-inverse Hausman form) and NaN map to p = 1.
inline double chi2_sf(double x, double df) {
    if (std::isnan(x) || x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    boost::math::chi_squared dist(df);
    return boost::math::cdf(boost::math::complement(dist, x));
}

/// Two-sided p-value for a t statistic with the given degrees of freedom.
/// Zero-variance ratios are totalized: NaN (0/0) carries no evidence, an
/// infinite ratio is conclusive.
inline double t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

/// Two-sided p-value for a standard normal z score, totalized as above.
inline double normal_two_sided_p(double z) {
    if (std::isnan(z)) return 1.0;
    if (std::isinf(z)) return 0.0;
    boost::math::normal dist;
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

/// Upper quantile helper (e.g. 1.96 for coverage intervals).
inline double normal_upper_quantile(double upper_tail) {
    boost::math::normal dist;
    return boost::math::quantile(boost::math::complement(dist, upper_tail));
}

} // namespace netmig

#endif // NETMIG_DISTRIBUTIONS_HPP
