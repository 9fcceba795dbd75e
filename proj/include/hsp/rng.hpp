#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace hsp {

/// Seeded random stream with hand-rolled distributions.
///
/// The raw stream is a std::mt19937_64 (its sequence is pinned by the
/// standard); all distribution transforms live here so that draws are
/// reproducible independent of the standard library's implementation.
/// Child streams are derived from a root seed by a counter scheme, so
/// parallel chains and replicates get independent, reproducible streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(seed), engine_(mix(seed)) {}

    /// Independent stream for sub-task `stream` (chain index, replicate index, ...).
    Rng derive(std::uint64_t stream) const { return Rng(derive_seed(key_, stream)); }

    /// Seed of the derived stream, for callers that pass seeds around.
    static std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
        return mix(root ^ mix(stream + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on {0, ..., n-1}, unbiased.
    std::int64_t uniform_int(std::int64_t n) {
        if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
        const auto un = static_cast<std::uint64_t>(n);
        const std::uint64_t bound = un * (UINT64_MAX / un); // reject above the last full block
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= bound);
        return static_cast<std::int64_t>(r % un);
    }

    double normal(double mean, double sd) {
        // Box-Muller, cosine branch only; no cached spare, so the draw
        // count per call is fixed and streams stay reproducible.
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mean + sd * z;
    }

    /// Gamma with given shape and scale (mean = shape * scale). Marsaglia-Tsang.
    double gamma(double shape, double scale) {
        if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            double u;
            do {
                u = uniform();
            } while (u <= 0.0);
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal(0.0, 1.0);
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
        }
    }

    /// Inverse-Gamma(shape, scale) with mean scale/(shape-1).
    double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }

    /// Sample an index from unnormalized log weights (max-shift softmax).
    int sample_log_weights(std::span<const double> logw) {
        if (logw.empty()) throw std::invalid_argument("sample_log_weights: empty weight vector");
        double m = logw[0];
        for (double w : logw) m = std::max(m, w);
        double total = 0.0;
        for (double w : logw) total += std::exp(w - m);
        double u = uniform() * total;
        for (std::size_t i = 0; i + 1 < logw.size(); ++i) {
            u -= std::exp(logw[i] - m);
            if (u < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(logw.size() - 1);
    }

    /// Fisher-Yates shuffle of a contiguous range.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

} // namespace hsp
