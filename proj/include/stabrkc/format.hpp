#pragma once

#include <array>
#include <charconv>
#include <string>

namespace stabrkc {

/// Shortest decimal that round-trips to the same double (at most 17 significant digits).
[[nodiscard]] inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

}  // namespace stabrkc
