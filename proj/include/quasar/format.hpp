#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace quasar {

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc{}) return std::isnan(x) ? "nan" : "inf";
    return std::string(buf, res.ptr);
}

}  // namespace quasar
