#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>
#include <utility>

#include <Eigen/Core>

namespace aerotele {

/// 64-bit FNV-1a.
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ull;
    static constexpr std::uint64_t kPrime = 0x100000001b3ull;

    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kPrime;
        }
    }

    void text(std::string_view s) { bytes(s.data(), s.size()); }

    /// Little-endian bytes of an arithmetic value; -0.0 is folded into +0.0.
    template <class T>
        requires std::is_arithmetic_v<T>
    void value(T v) {
        if constexpr (std::is_floating_point_v<T>) {
            if (v == T(0)) v = T(0);
        }
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
        }
        bytes(buf, sizeof(T));
    }

    template <class Derived>
    void matrix(const Eigen::MatrixBase<Derived>& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) value(static_cast<double>(m(r, c)));
        }
    }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view s) {
    Fnv1a h;
    h.text(s);
    return h.digest();
}

}  // namespace aerotele
