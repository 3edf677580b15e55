#include "sgcl/rng.hpp"

#include <algorithm>
#include <numeric>

namespace sgcl {

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
    if (k > n) fail_internal("Rng::sample_indices: k > n");
    std::vector<size_t> pool(n);
    std::iota(pool.begin(), pool.end(), size_t{0});
    // Partial Fisher-Yates: the first k slots end up a uniform sample.
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace sgcl
