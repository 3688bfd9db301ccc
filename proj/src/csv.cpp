#include "mobent/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "mobent/error.hpp"

namespace mobent::csv {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

double to_double(std::string_view field, std::size_t line_no, std::string_view what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw ParseError(line_no, std::string(what) + ": not a number: '" + std::string(field) + "'");
    }
    return value;
}

std::int64_t to_int64(std::string_view field, std::size_t line_no, std::string_view what) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(line_no, std::string(what) + ": not an integer: '" + std::string(field) + "'");
    }
    return value;
}

int to_code(std::string_view field, std::size_t line_no, std::string_view what) {
    std::int64_t value = to_int64(field, line_no, what);
    if (value < 0 || value > 1000) {
        throw ParseError(line_no, std::string(what) + ": code out of range: '" + std::string(field) + "'");
    }
    return static_cast<int>(value);
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace mobent::csv
