#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace docfsl {

// Counter-based deterministic generator (splitmix64 core). Identical output on
// every platform; all sampling in the project goes through this, never through
// std:: distributions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(mix(seed + kGolden)) {}

    // Derive an independent stream from a tuple of key words, e.g.
    // Rng::keyed({seed, repetition, episode}).
    static Rng keyed(std::initializer_list<uint64_t> words) {
        uint64_t s = 0x8c5fb1a9d0e3f7c1ull;
        for (uint64_t w : words) s = mix(s ^ mix(w + kGolden));
        return Rng(s);
    }

    uint64_t next_u64() {
        state_ += kGolden;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n <= 1 returns 0 without consuming state, so
    // degenerate choices (a single candidate) do not perturb the stream.
    size_t bounded(size_t n) {
        if (n <= 1) return 0;
        return static_cast<size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = bounded(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // First k elements of a Fisher-Yates pass: a without-replacement sample.
    template <typename T>
    std::vector<T> sample(const std::vector<T>& pool, size_t k) {
        std::vector<T> v = pool;
        std::vector<T> out;
        out.reserve(k);
        for (size_t i = 0; i < k && i < v.size(); ++i) {
            size_t j = i + bounded(v.size() - i);
            std::swap(v[i], v[j]);
            out.push_back(v[i]);
        }
        return out;
    }

  private:
    static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t state_;
};

}  // namespace docfsl
