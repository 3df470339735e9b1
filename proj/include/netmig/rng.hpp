#ifndef NETMIG_RNG_HPP
#define NETMIG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace netmig {

/// splitmix64 mixing step. Used to derive independent stream seeds from a
/// master seed so that replication r is reproducible in isolation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream * 0x9E3779B97F4A7C15ULL + 1));
}

/// Deterministic random source. The mt19937_64 engine is bit-exact by
/// standard; the distribution transforms are implemented here because the
/// std distributions are implementation-defined and would break
/// reproducibility across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; draws are consumed in pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Log-normal with the given log-scale parameters; always positive.
    double lognormal(double mu_log, double sd_log) { return std::exp(normal(mu_log, sd_log)); }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace netmig

#endif // NETMIG_RNG_HPP
