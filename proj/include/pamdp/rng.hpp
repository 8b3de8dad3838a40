#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "pamdp/common.hpp"

namespace pamdp {

// Seeding scheme: every random stream is identified by (root seed, label,
// index). `derive_seed` folds the label and index into the root seed with
// SplitMix64 so that parallel replications and named subcomponents draw from
// disjoint, reproducible streams. All distributions below are implemented on
// top of std::mt19937_64 directly (no std::*_distribution), so a given
// (seed, label, index) produces identical bytes on every run.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(root ^ fnv1a(label)) ^ index);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent stream derived from this generator's seed.
    Rng stream(std::string_view label, std::uint64_t index = 0) const {
        return Rng(derive_seed(seed_, label, index));
    }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
    }

    double exponential() { return -std::log1p(-uniform()); }

    /// Marsaglia polar method; one spare value cached.
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
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Zero-mean Gaussian with std `sigma`, clamped to +-4 sigma.
    double truncated_normal(double sigma) {
        if (sigma <= 0.0) return 0.0;
        double z = normal();
        if (z > 4.0) z = 4.0;
        if (z < -4.0) z = -4.0;
        return sigma * z;
    }

    /// Index drawn from a probability vector (inverse CDF scan).
    int categorical(const Eigen::Ref<const Vec>& p) {
        double u = uniform();
        double acc = 0.0;
        int last = static_cast<int>(p.size()) - 1;
        for (int i = 0; i < last; ++i) {
            acc += p[i];
            if (u < acc) return i;
        }
        return last;
    }

    /// Uniform point on the probability simplex via normalized exponentials.
    Vec simplex_point(int dim) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = exponential();
        double s = v.sum();
        if (s <= 0.0) return Vec::Constant(dim, 1.0 / dim);
        return v / s;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pamdp
