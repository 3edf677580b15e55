#include "sgcl/force.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

#include "sgcl/hash.hpp"

namespace sgcl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Centered-bin assignment shared by the fast and brute-force paths so both
// always agree on the bin, whatever the accumulation strategy.
inline int angle_bin(double dy, double dx, int bins) {
    double theta = std::atan2(dy, dx);  // (-pi, pi]
    double t = theta / (kTwoPi / bins) + 0.5;
    long b = static_cast<long>(std::floor(t));
    b %= bins;
    if (b < 0) b += bins;
    return static_cast<int>(b);
}

// 1/d^r from the squared distance; exact halving of the exponent for even r.
inline double inv_pow_dist(double d2, int r) {
    if (r == 0) return 1.0;
    double base = (r % 2 == 0) ? d2 : std::sqrt(d2);
    int e = (r % 2 == 0) ? r / 2 : r;
    double acc = 1.0;
    for (int k = 0; k < e; ++k) acc *= base;
    return 1.0 / acc;
}

// Precomputed per-delta bin index and force weights. The delta range of a
// w x h grid is [-(w-1), w-1] x [-(h-1), h-1].
struct DeltaTables {
    int bins = 0;
    int rx = 0, ry = 0;  // max |dx|, |dy|
    int stride = 0;
    std::vector<int16_t> bin_of;              // (2rx+1) * (2ry+1)
    std::vector<std::vector<double>> phi;     // per level, same indexing

    size_t index(int dx, int dy) const {
        return static_cast<size_t>(dy + ry) * stride + (dx + rx);
    }
};

struct TableKey {
    int bins, rx, ry;
    std::vector<int> levels;
    bool operator<(const TableKey& o) const {
        return std::tie(bins, rx, ry, levels) < std::tie(o.bins, o.rx, o.ry, o.levels);
    }
};

const DeltaTables& delta_tables(int bins, const std::vector<int>& levels, int rx, int ry) {
    static std::mutex mu;
    static std::map<TableKey, DeltaTables> cache;
    std::lock_guard<std::mutex> lock(mu);
    TableKey key{bins, rx, ry, levels};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    DeltaTables t;
    t.bins = bins;
    t.rx = rx;
    t.ry = ry;
    t.stride = 2 * rx + 1;
    const size_t cells = static_cast<size_t>(2 * rx + 1) * (2 * ry + 1);
    t.bin_of.resize(cells);
    t.phi.assign(levels.size(), std::vector<double>(cells, 0.0));
    for (int dy = -ry; dy <= ry; ++dy) {
        for (int dx = -rx; dx <= rx; ++dx) {
            size_t idx = t.index(dx, dy);
            if (dx == 0 && dy == 0) {
                t.bin_of[idx] = 0;
                continue;  // phi stays 0: coincident pixels contribute nothing
            }
            t.bin_of[idx] = static_cast<int16_t>(angle_bin(dy, dx, bins));
            double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            for (size_t li = 0; li < levels.size(); ++li)
                t.phi[li][idx] = inv_pow_dist(d2, levels[li]);
        }
    }
    return cache.emplace(std::move(key), std::move(t)).first->second;
}

void check_inputs(const BinaryMask& a, const BinaryMask& b, const BannerConfig& cfg) {
    cfg.validate();
    if (a.width != b.width || a.height != b.height)
        fail_data("masks on different grids");
    if (a.empty_mask() || b.empty_mask()) fail_data("degenerate mask");
}

bool any_positive_level(const std::vector<int>& levels) {
    return std::any_of(levels.begin(), levels.end(), [](int r) { return r > 0; });
}

int find_level(const std::vector<int>& levels, int r) {
    for (size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == r) return static_cast<int>(i);
    return -1;
}

}  // namespace

void BannerConfig::validate() const {
    if (theta_bins < 2) fail_usage("theta_bins must be >= 2");
    if (levels.empty()) fail_usage("at least one force level required");
    for (int r : levels)
        if (r < 0) fail_usage("force levels must be >= 0");
    for (size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1]) fail_usage("force levels must be strictly ascending");
}

uint64_t BannerConfig::hash() const {
    Fnv1a64 h;
    h.update("banner:");
    int32_t tb = theta_bins;
    h.update(&tb, sizeof(tb));
    for (int r : levels) {
        int32_t v = r;
        h.update(&v, sizeof(v));
    }
    return h.digest();
}

int ForceHistogram::level_index(int r) const { return find_level(levels, r); }
int ForceBanner::level_index(int r) const { return find_level(levels, r); }

ForceHistogram force_histogram(const BinaryMask& a, const BinaryMask& b,
                               const BannerConfig& cfg) {
    check_inputs(a, b, cfg);
    const auto pa = set_pixels(a);
    const auto pb = set_pixels(b);
    const size_t n_levels = cfg.levels.size();
    const auto& tab = delta_tables(cfg.theta_bins, cfg.levels,
                                   a.width - 1, a.height - 1);

    ForceHistogram out;
    out.theta_bins = cfg.theta_bins;
    out.levels = cfg.levels;
    out.values.assign(static_cast<size_t>(cfg.theta_bins) * n_levels, 0.0);

    size_t usable_pairs = 0;
    // Row-major over a, then b; per-bin accumulation order is fixed.
    for (const auto& [ax, ay] : pa) {
        const int base_dx = -ax + tab.rx;
        const size_t row_off = static_cast<size_t>(-ay + tab.ry) * tab.stride;
        for (const auto& [bx, by] : pb) {
            if (ax == bx && ay == by) continue;
            const size_t idx = row_off + static_cast<size_t>(by) * tab.stride + base_dx + bx;
            const int bin = tab.bin_of[idx];
            double* cell = &out.values[static_cast<size_t>(bin) * n_levels];
            for (size_t li = 0; li < n_levels; ++li) cell[li] += tab.phi[li][idx];
            ++usable_pairs;
        }
    }

    if (usable_pairs == 0 && any_positive_level(cfg.levels))
        fail_data("zero-distance pair");

    const double norm = 1.0 / (static_cast<double>(pa.size()) * static_cast<double>(pb.size()));
    for (double& v : out.values) v *= norm;
    return out;
}

ForceHistogram brute_force_histogram(const BinaryMask& a, const BinaryMask& b,
                                     const BannerConfig& cfg) {
    check_inputs(a, b, cfg);
    const auto pa = set_pixels(a);
    const auto pb = set_pixels(b);
    const size_t n_levels = cfg.levels.size();

    ForceHistogram out;
    out.theta_bins = cfg.theta_bins;
    out.levels = cfg.levels;
    out.values.assign(static_cast<size_t>(cfg.theta_bins) * n_levels, 0.0);

    size_t usable_pairs = 0;
    for (const auto& [ax, ay] : pa) {
        for (const auto& [bx, by] : pb) {
            if (ax == bx && ay == by) continue;
            const double dx = bx - ax;
            const double dy = by - ay;
            const int bin = angle_bin(dy, dx, cfg.theta_bins);
            const double d = std::sqrt(dx * dx + dy * dy);
            for (size_t li = 0; li < n_levels; ++li) {
                const int r = cfg.levels[li];
                const double phi = (r == 0) ? 1.0 : 1.0 / std::pow(d, static_cast<double>(r));
                out.values[static_cast<size_t>(bin) * n_levels + li] += phi;
            }
            ++usable_pairs;
        }
    }

    if (usable_pairs == 0 && any_positive_level(cfg.levels))
        fail_data("zero-distance pair");

    const double norm = 1.0 / (static_cast<double>(pa.size()) * static_cast<double>(pb.size()));
    for (double& v : out.values) v *= norm;
    return out;
}

ForceBanner symmetric_force_banner(const BinaryMask& a, const BinaryMask& b,
                                   const BannerConfig& cfg) {
    ForceHistogram fab = force_histogram(a, b, cfg);
    ForceHistogram fba = force_histogram(b, a, cfg);

    ForceBanner banner;
    banner.theta_bins = cfg.theta_bins;
    banner.levels = cfg.levels;
    banner.values.resize(fab.values.size());
    // Addition commutes bit-for-bit, so swapping arguments cannot change this.
    for (size_t i = 0; i < fab.values.size(); ++i)
        banner.values[i] = (fab.values[i] + fba.values[i]) / 2.0;
    return banner;
}

int dominant_direction(const ForceBanner& banner) {
    const int li = banner.level_index(0);
    if (li < 0) fail_data("dominant direction requires force level 0");
    int best = -1;
    double best_v = 0.0;
    for (int t = 0; t < banner.theta_bins; ++t) {
        double v = banner.at(t, li);
        if (v > best_v) {
            best_v = v;
            best = t;
        }
    }
    if (best < 0) fail_data("undefined direction");
    return best;
}

std::vector<float> flatten_banner(const ForceBanner& banner) {
    std::vector<float> out(banner.values.size());
    for (size_t i = 0; i < banner.values.size(); ++i)
        out[i] = static_cast<float>(banner.values[i]);
    return out;
}

// --- banner cache ---------------------------------------------------------

namespace {
constexpr char kCacheMagic[4] = {'S', 'G', 'B', 'C'};
}

void save_banner_cache(const std::string& path, uint64_t config_hash,
                       const std::vector<BannerCacheEntry>& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write banner cache: " + path);
    out.write(kCacheMagic, 4);
    uint16_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&config_hash), sizeof(config_hash));
    uint32_t n = static_cast<uint32_t>(entries.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (const auto& e : entries) {
        uint32_t i = static_cast<uint32_t>(e.i), j = static_cast<uint32_t>(e.j);
        uint32_t bins = static_cast<uint32_t>(e.banner.theta_bins);
        uint32_t nl = static_cast<uint32_t>(e.banner.levels.size());
        out.write(reinterpret_cast<const char*>(&i), sizeof(i));
        out.write(reinterpret_cast<const char*>(&j), sizeof(j));
        out.write(reinterpret_cast<const char*>(&bins), sizeof(bins));
        out.write(reinterpret_cast<const char*>(&nl), sizeof(nl));
        for (int r : e.banner.levels) {
            int32_t v = r;
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
        out.write(reinterpret_cast<const char*>(e.banner.values.data()),
                  static_cast<std::streamsize>(e.banner.values.size() * sizeof(double)));
    }
    if (!out) fail_data("write failure on banner cache: " + path);
}

std::vector<BannerCacheEntry> load_banner_cache(const std::string& path,
                                                uint64_t config_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCacheMagic, 4) != 0) return {};
    uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) return {};
    uint64_t stored_hash = 0;
    in.read(reinterpret_cast<char*>(&stored_hash), sizeof(stored_hash));
    if (stored_hash != config_hash) return {};  // stale cache: recompute
    uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));

    std::vector<BannerCacheEntry> entries;
    entries.reserve(n);
    for (uint32_t k = 0; k < n; ++k) {
        BannerCacheEntry e;
        uint32_t i = 0, j = 0, bins = 0, nl = 0;
        in.read(reinterpret_cast<char*>(&i), sizeof(i));
        in.read(reinterpret_cast<char*>(&j), sizeof(j));
        in.read(reinterpret_cast<char*>(&bins), sizeof(bins));
        in.read(reinterpret_cast<char*>(&nl), sizeof(nl));
        if (!in || bins == 0 || nl == 0 || bins > (1u << 20) || nl > 64) return {};
        e.i = static_cast<int>(i);
        e.j = static_cast<int>(j);
        e.banner.theta_bins = static_cast<int>(bins);
        e.banner.levels.resize(nl);
        for (uint32_t li = 0; li < nl; ++li) {
            int32_t v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            e.banner.levels[li] = v;
        }
        e.banner.values.resize(static_cast<size_t>(bins) * nl);
        in.read(reinterpret_cast<char*>(e.banner.values.data()),
                static_cast<std::streamsize>(e.banner.values.size() * sizeof(double)));
        if (!in) return {};
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace sgcl
