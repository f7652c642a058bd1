#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace veil {

// Incremental FNV-1a over raw bytes. Stable across runs; used for parameter
// hashes, dataset content hashes and reproducibility checks.
class Hasher {
public:
    Hasher& bytes(const void* p, size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ull;
        }
        return *this;
    }

    template <class T>
    Hasher& pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        return bytes(&v, sizeof(v));
    }

    Hasher& str(const std::string& s) {
        pod(uint64_t(s.size()));
        return bytes(s.data(), s.size());
    }

    template <class T>
    Hasher& span(const T* p, size_t n) {
        pod(uint64_t(n));
        return bytes(p, n * sizeof(T));
    }

    uint64_t value() const { return h_; }

    std::string hex() const {
        static const char* d = "0123456789abcdef";
        std::string s(16, '0');
        uint64_t v = h_;
        for (int i = 15; i >= 0; --i) {
            s[size_t(i)] = d[v & 0xf];
            v >>= 4;
        }
        return s;
    }

private:
    uint64_t h_ = 0xcbf29ce484222325ull;
};

} // namespace veil
