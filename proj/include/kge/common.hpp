#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kge {

// Error taxonomy shared by the library and the CLI exit codes:
// validation_error -> 2, data_error -> 3, numeric_error -> 4.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// K-mer absent from an embedding table (table baselines cannot embed
// k-mers outside the training vocabulary; the GCN path can).
struct oov_error : data_error {
    explicit oov_error(const std::string& kmer)
        : data_error("out-of-vocabulary k-mer: " + kmer), kmer(kmer) {}
    std::string kmer;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable seed derivation: parallel and serial producers draw from the same
// per-item stream regardless of scheduling.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
    uint64_t h = splitmix64(seed ^ 0x6b6765u);  // domain tag
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

// FNV-1a over bytes; used for corpus/config fingerprints.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ULL) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline uint64_t parse_hex64(const std::string& s) {
    if (s.size() != 16) throw data_error("expected a 16-digit hex value, got: " + s);
    uint64_t v = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else throw data_error("invalid hex digit in: " + s);
        v = (v << 4) | static_cast<uint64_t>(d);
    }
    return v;
}

}  // namespace kge
