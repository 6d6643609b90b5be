#pragma once

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace overuse {

// Locale-independent numeric formatting for CSV/SVG output.
// Six significant digits, printf-%g style (trailing zeros stripped).
inline std::string format_number(double value, int precision = 6) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value,
                             std::chars_format::general, precision);
    if (res.ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf, res.ptr);
}

// Full-string parse of a finite decimal number. Rejects inf/nan/hex and
// partial matches such as "4abc".
inline bool parse_finite_number(std::string_view text, double& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') {  // from_chars accepts a leading '-' but not '+'
        ++first;
        if (first == last || *first == '+' || *first == '-') return false;
    }
    double value = 0.0;
    auto res = std::from_chars(first, last, value, std::chars_format::general);
    if (res.ec != std::errc{} || res.ptr != last) return false;
    if (!(value == value) || value > 1.7976931348623157e308 || value < -1.7976931348623157e308)
        return false;
    out = value;
    return true;
}

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Worker count for parallel ingestion: OVERUSE_LAB_THREADS caps the pool,
// hardware concurrency is the fallback.
std::size_t worker_count(std::size_t requested = 0);

}  // namespace overuse
