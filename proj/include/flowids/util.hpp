#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace flowids {

// All recoverable failures in this project surface as Error with a
// human-readable message; the CLI turns them into non-zero exits.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline std::string_view trim_view(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

// Classification of a CSV cell as a number. "Infinity"/"NaN" tokens are
// recognized case-insensitively, with optional sign; values overflowing
// double count as infinite.
enum class NumberClass { Finite, NaN, Infinite, NotANumber };

struct ParsedNumber {
    NumberClass cls = NumberClass::NotANumber;
    double value = 0.0;
};

inline ParsedNumber classify_number(std::string_view cell) {
    std::string_view s = trim_view(cell);
    if (s.empty()) return {NumberClass::NotANumber, 0.0};

    std::string_view body = s;
    bool negative = false;
    if (body.front() == '+' || body.front() == '-') {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    if (iequals(body, "nan")) return {NumberClass::NaN, 0.0};
    if (iequals(body, "inf") || iequals(body, "infinity")) {
        double inf = std::numeric_limits<double>::infinity();
        return {NumberClass::Infinite, negative ? -inf : inf};
    }

    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec == std::errc::result_out_of_range)
        return {NumberClass::Infinite, negative ? -std::numeric_limits<double>::infinity()
                                                : std::numeric_limits<double>::infinity()};
    if (ec != std::errc() || ptr != s.data() + s.size())
        return {NumberClass::NotANumber, 0.0};
    if (std::isnan(value)) return {NumberClass::NaN, value};
    if (std::isinf(value)) return {NumberClass::Infinite, value};
    return {NumberClass::Finite, value};
}

// Fixed-format float printing used by every CSV the project emits, so
// re-runs are byte-identical. 9 significant digits.
inline std::string format_g9(double v) {
    char buf[40];
    int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf, static_cast<size_t>(n));
}

}  // namespace flowids
