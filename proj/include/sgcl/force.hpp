#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgcl/mask.hpp"

namespace sgcl {

// Angular binning covers [0, 2pi) with bins centered on t * (2pi/theta_bins):
// bin t spans [t*w - w/2, t*w + w/2). Centered bins make the left-right
// mirror permutation t -> (theta_bins/2 - t) mod theta_bins exact for
// integer pixel deltas (boundary angles are multiples of pi/4, which land on
// bin centers whenever theta_bins is a multiple of 8).
struct BannerConfig {
    int theta_bins = 64;
    std::vector<int> levels = {0, 2};  // force exponents r in phi_r(d) = d^-r

    void validate() const;
    uint64_t hash() const;
};

struct ForceHistogram {
    int theta_bins = 0;
    std::vector<int> levels;
    std::vector<double> values;  // [theta * levels.size() + level_index]

    double at(int theta_bin, int level_index) const {
        return values[static_cast<size_t>(theta_bin) * levels.size() + level_index];
    }
    int level_index(int r) const;  // -1 when the level is absent
};

// Order-invariant pairwise descriptor: per (theta, r) the average of the two
// directed histograms. Bit-identical under argument swap.
struct ForceBanner {
    int theta_bins = 0;
    std::vector<int> levels;
    std::vector<double> values;

    double at(int theta_bin, int level_index) const {
        return values[static_cast<size_t>(theta_bin) * levels.size() + level_index];
    }
    int level_index(int r) const;
};

// Directed histogram of attraction forces phi_r(d) = 1/d^r between all pairs
// of set pixels (a in A, b in B, a != b), binned by the angle of b - a and
// normalized by |A|*|B|. Table-driven fast path; fixed accumulation order.
ForceHistogram force_histogram(const BinaryMask& a, const BinaryMask& b,
                               const BannerConfig& cfg);

// Literal double loop, naive left-to-right accumulation. Verification oracle
// for force_histogram; no tables, no tiling.
ForceHistogram brute_force_histogram(const BinaryMask& a, const BinaryMask& b,
                                     const BannerConfig& cfg);

ForceBanner symmetric_force_banner(const BinaryMask& a, const BinaryMask& b,
                                   const BannerConfig& cfg);

// Argmax bin over theta at level r=0, ties resolved to the lowest bin index.
// Throws "undefined direction" on an all-zero banner.
int dominant_direction(const ForceBanner& banner);

// Theta-major flattening (theta * |levels| floats) used as model input.
std::vector<float> flatten_banner(const ForceBanner& banner);

// --- per-scene banner cache ---------------------------------------------
// One binary file per scene holding every (i, j) banner for a config hash.
struct BannerCacheEntry {
    int i = 0;
    int j = 0;
    ForceBanner banner;
};

void save_banner_cache(const std::string& path, uint64_t config_hash,
                       const std::vector<BannerCacheEntry>& entries);

// Empty result when the file is missing or was written for another config.
std::vector<BannerCacheEntry> load_banner_cache(const std::string& path,
                                                uint64_t config_hash);

}  // namespace sgcl
