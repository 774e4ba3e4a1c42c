// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace depthdecode {

// FNV-1a, used to derive per-stream seeds from (seed, name, index). Stable
// across platforms, unlike std::hash.
inline uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t seed, const std::string& stream, uint64_t index = 0) {
    uint64_t h = fnv1a(&seed, sizeof(seed));
    h = fnv1a(stream.data(), stream.size(), h);
    h = fnv1a(&index, sizeof(index), h);
    return h;
}

/// Seeded RNG with hand-rolled distributions so sequences do not depend on
/// the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}
    Rng(uint64_t seed, const std::string& stream, uint64_t index = 0)
        : gen_(derive_seed(seed, stream, index)) {}

    uint64_t next_u64() { return gen_(); }

    double uniform() {  // [0,1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    double normal() {  // Box-Muller, one value per call (spare cached)
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }
    double normal(double mean, double std) { return mean + std * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(gen_() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn from [0, n) by partial Fisher-Yates.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline std::vector<int> Rng::sample_without_replacement(int n, int k) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k && i < n; ++i) {
        int j = uniform_int(i, n - 1);
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        out.push_back(idx[static_cast<size_t>(i)]);
    }
    return out;
}

}  // namespace depthdecode
