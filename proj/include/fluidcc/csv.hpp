#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <system_error>

namespace fluidcc {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

inline void write_fields(std::ostream&) {}

template <class T, class... Rest>
void write_fields(std::ostream& os, const T& first, const Rest&... rest) {
    if constexpr (std::is_floating_point_v<T>) {
        os << format_double(static_cast<double>(first));
    } else {
        os << first;
    }
    if constexpr (sizeof...(rest) > 0) {
        os << ',';
        write_fields(os, rest...);
    }
}

template <class... Fields>
void write_csv_row(std::ostream& os, const Fields&... fields) {
    write_fields(os, fields...);
    os << '\n';
}

}  // namespace fluidcc
