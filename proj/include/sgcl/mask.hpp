#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sgcl/error.hpp"

namespace sgcl {

// Rasterized object footprint on a fixed grid, row-major. y grows downward.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;  // width * height entries, 0 or 1

    static BinaryMask zeros(int w, int h) {
        if (w <= 0 || h <= 0) fail_data("mask dimensions must be positive");
        BinaryMask m;
        m.width = w;
        m.height = h;
        m.bits.assign(static_cast<size_t>(w) * h, 0);
        return m;
    }

    bool get(int x, int y) const {
        return bits[static_cast<size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v = true) {
        bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    size_t pixel_count() const {
        size_t n = 0;
        for (uint8_t b : bits) n += b != 0;
        return n;
    }
    bool empty_mask() const { return pixel_count() == 0; }

    bool operator==(const BinaryMask& o) const = default;
};

struct Point2d {
    double x = 0.0;
    double y = 0.0;
};

// Set-pixel coordinates in row-major scan order.
std::vector<std::pair<int, int>> set_pixels(const BinaryMask& m);

// Arithmetic mean of set-pixel coordinates. Throws "degenerate mask" if empty.
Point2d centroid(const BinaryMask& m);

bool masks_intersect(const BinaryMask& a, const BinaryMask& b);

// Run-length encoding over the row-major grid, runs alternating starting with
// a zero-run. Layout: 'MRLE' u16 version, u32 width, u32 height, u32 run
// count, then u32 run lengths (all little-endian).
std::vector<uint8_t> rle_encode(const BinaryMask& m);
BinaryMask rle_decode(const std::vector<uint8_t>& bytes);

}  // namespace sgcl
