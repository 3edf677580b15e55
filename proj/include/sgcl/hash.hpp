#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace sgcl {

// Streaming FNV-1a (64-bit). Used for config/corpus fingerprints, not security.
class Fnv1a64 {
public:
    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ull;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    uint64_t digest() const noexcept { return h_; }

private:
    uint64_t h_ = 0xcbf29ce484222325ull;
};

inline uint64_t fnv1a64(std::string_view s) {
    Fnv1a64 h;
    h.update(s);
    return h.digest();
}

std::string hex64(uint64_t v);
uint64_t parse_hex64(std::string_view s);

// Hashes a whole file's bytes into an existing hasher. Throws on IO failure.
void hash_file(Fnv1a64& h, const std::string& path);

}  // namespace sgcl
