#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace vinesim {

/// 64-bit FNV-1a. Used for state digests and the replay hash chain; doubles
/// are hashed by bit pattern so equal hashes mean bitwise-equal state.
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    explicit Fnv1a(std::uint64_t seed = kOffset) : h_(seed) {}

    Fnv1a& add(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xffU;
            h_ *= kPrime;
        }
        return *this;
    }
    Fnv1a& add(double v) { return add(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v)); }
    Fnv1a& add(bool v) { return add(static_cast<std::uint64_t>(v)); }
    Fnv1a& add(std::string_view s)
    {
        for (unsigned char c : s) {
            h_ ^= c;
            h_ *= kPrime;
        }
        return add(static_cast<std::uint64_t>(s.size()));
    }

    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_;
};

/// Lower-case 16-digit hex.
std::string to_hex(std::uint64_t v);
/// Inverse of to_hex; throws InvalidInput on malformed text.
std::uint64_t from_hex(std::string_view s);

}  // namespace vinesim
