#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lojalab {

// Deterministic splitmix64 stream. Results are reproducible across runs for a
// fixed seed, which every sampler in this project relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via the polar method (rejection keeps it libm-light)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    // uniform direction on the unit sphere in R^n (n >= 1)
    std::vector<double> unit_vector(int n) {
        std::vector<double> d(static_cast<std::size_t>(n));
        while (true) {
            double nrm2 = 0.0;
            for (auto& c : d) {
                c = normal();
                nrm2 += c * c;
            }
            if (nrm2 > 1e-30) {
                const double inv = 1.0 / std::sqrt(nrm2);
                for (auto& c : d) c *= inv;
                return d;
            }
        }
    }

    // derive an independent stream for a subtask
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace lojalab
