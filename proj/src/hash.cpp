#include "vinesim/hash.hpp"

#include "vinesim/error.hpp"

#include <charconv>

namespace vinesim {

std::string to_hex(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xfU];
    return out;
}

std::uint64_t from_hex(std::string_view s)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw InvalidInput("malformed hash '" + std::string(s) + "'");
    return v;
}

}  // namespace vinesim
