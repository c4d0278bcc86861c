#pragma once

#include <cstdint>
#include <algorithm>
#include <random>
#include <span>
#include <vector>

namespace forestdsh {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent sub-seeds from (seed, stream id).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(mix_seed(seed, stream));
}

/// Unbiased integer in [0, n) (Lemire's method); stable across standard libraries,
/// unlike std::uniform_int_distribution.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    std::uint64_t x = rng();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t t = (0 - n) % n;
        while (low < t) {
            x = rng();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates shuffle driven by uniform_below.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[uniform_below(rng, i)]);
    }
}

/// Inverse-CDF sampler over a fixed list of weights.
class Categorical {
public:
    Categorical() = default;
    explicit Categorical(std::span<const double> weights) {
        cumulative_.reserve(weights.size());
        double total = 0.0;
        for (double w : weights) {
            total += w;
            cumulative_.push_back(total);
        }
        for (double& c : cumulative_) {
            c /= total;
        }
        if (!cumulative_.empty()) {
            cumulative_.back() = 1.0;
        }
    }

    std::size_t operator()(Rng& rng) const {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                                 static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
    }

    std::size_t size() const noexcept { return cumulative_.size(); }

private:
    std::vector<double> cumulative_;
};

}  // namespace forestdsh
