#include "sgcl/mask.hpp"

#include <cstring>

namespace sgcl {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

uint16_t get_u16(const std::vector<uint8_t>& b, size_t& pos) {
    if (pos + 2 > b.size()) fail_data("truncated RLE mask");
    uint16_t v = static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
    pos += 2;
    return v;
}

uint32_t get_u32(const std::vector<uint8_t>& b, size_t& pos) {
    if (pos + 4 > b.size()) fail_data("truncated RLE mask");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
}

}  // namespace

std::vector<std::pair<int, int>> set_pixels(const BinaryMask& m) {
    std::vector<std::pair<int, int>> out;
    out.reserve(64);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.get(x, y)) out.emplace_back(x, y);
    return out;
}

Point2d centroid(const BinaryMask& m) {
    double sx = 0.0, sy = 0.0;
    size_t n = 0;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.get(x, y)) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0) fail_data("degenerate mask");
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

bool masks_intersect(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        fail_data("masks on different grids");
    const size_t n = a.bits.size();
    for (size_t i = 0; i < n; ++i)
        if (a.bits[i] && b.bits[i]) return true;
    return false;
}

std::vector<uint8_t> rle_encode(const BinaryMask& m) {
    std::vector<uint8_t> out;
    out.reserve(64);
    out.push_back('M');
    out.push_back('R');
    out.push_back('L');
    out.push_back('E');
    put_u16(out, 1);
    put_u32(out, static_cast<uint32_t>(m.width));
    put_u32(out, static_cast<uint32_t>(m.height));

    std::vector<uint32_t> runs;
    uint8_t current = 0;  // runs alternate starting with a zero-run
    uint32_t len = 0;
    for (uint8_t b : m.bits) {
        uint8_t v = b ? 1 : 0;
        if (v == current) {
            ++len;
        } else {
            runs.push_back(len);
            current = v;
            len = 1;
        }
    }
    runs.push_back(len);

    put_u32(out, static_cast<uint32_t>(runs.size()));
    for (uint32_t r : runs) put_u32(out, r);
    return out;
}

BinaryMask rle_decode(const std::vector<uint8_t>& bytes) {
    size_t pos = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "MRLE", 4) != 0)
        fail_data("bad RLE mask magic");
    pos = 4;
    uint16_t version = get_u16(bytes, pos);
    if (version != 1) fail_data("unsupported RLE mask version");
    uint32_t w = get_u32(bytes, pos);
    uint32_t h = get_u32(bytes, pos);
    if (w == 0 || h == 0 || static_cast<uint64_t>(w) * h > (1u << 26))
        fail_data("bad RLE mask dimensions");
    uint32_t run_count = get_u32(bytes, pos);

    BinaryMask m = BinaryMask::zeros(static_cast<int>(w), static_cast<int>(h));
    size_t cell = 0;
    uint8_t value = 0;
    for (uint32_t i = 0; i < run_count; ++i) {
        uint32_t len = get_u32(bytes, pos);
        if (cell + len > m.bits.size()) fail_data("RLE runs exceed grid");
        if (value)
            std::memset(m.bits.data() + cell, 1, len);
        cell += len;
        value ^= 1;
    }
    if (cell != m.bits.size()) fail_data("RLE runs do not cover grid");
    return m;
}

}  // namespace sgcl
