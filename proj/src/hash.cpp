#include "sgcl/hash.hpp"

#include <cstdio>
#include <fstream>

#include "sgcl/error.hpp"

namespace sgcl {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

uint64_t parse_hex64(std::string_view s) {
    uint64_t v = 0;
    if (s.empty() || s.size() > 16) fail_data("bad hex64 value");
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') v |= static_cast<uint64_t>(c - 'A' + 10);
        else fail_data("bad hex64 value");
    }
    return v;
}

void hash_file(Fnv1a64& h, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("cannot open file for hashing: " + path);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        std::streamsize got = in.gcount();
        if (got > 0) h.update(buf, static_cast<size_t>(got));
    }
}

}  // namespace sgcl
