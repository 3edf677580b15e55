#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sgcl/error.hpp"
#include "sgcl/hash.hpp"

namespace sgcl {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives the seed of a named sub-stream from a root seed. All randomness in
// the toolkit flows from one root seed through these names, so components can
// be varied independently without perturbing each other.
inline uint64_t substream_seed(uint64_t root, std::string_view name) {
    uint64_t state = root ^ fnv1a64(name);
    uint64_t a = splitmix64(state);
    (void)splitmix64(state);
    return a;
}

// mt19937_64 with hand-rolled sampling helpers. The std distributions are
// implementation-defined, so we only rely on the (fully specified) engine.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Unbiased uniform in [0, n) via rejection.
    uint64_t below(uint64_t n) {
        if (n == 0) fail_internal("Rng::below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do { x = gen_(); } while (x >= limit);
        return x % n;
    }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        if (lo > hi) fail_internal("Rng::uniform_int: empty range");
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi) - lo + 1));
    }

    double uniform_real() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform_real();
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices out of [0, n), returned in ascending order.
    std::vector<size_t> sample_indices(size_t n, size_t k);

private:
    std::mt19937_64 gen_;
};

inline Rng substream(uint64_t root, std::string_view name) {
    return Rng(substream_seed(root, name));
}

}  // namespace sgcl
