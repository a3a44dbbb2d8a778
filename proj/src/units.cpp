#include "ftqcr/units.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "ftqcr/errors.hpp"

namespace ftqcr::units {

namespace {

struct Suffix {
    const char* name;
    Dimension dim;
    double scale;
};

// "u" spellings accepted alongside the micro sign.
constexpr std::array<Suffix, 24> kSuffixes{{
    {"ps", Dimension::time, 1e-12},
    {"ns", Dimension::time, 1e-9},
    {"us", Dimension::time, 1e-6},
    {"µs", Dimension::time, 1e-6},
    {"μs", Dimension::time, 1e-6},
    {"ms", Dimension::time, 1e-3},
    {"s", Dimension::time, 1.0},
    {"nm", Dimension::length, 1e-9},
    {"um", Dimension::length, 1e-6},
    {"µm", Dimension::length, 1e-6},
    {"μm", Dimension::length, 1e-6},
    {"mm", Dimension::length, 1e-3},
    {"m", Dimension::length, 1.0},
    {"Hz", Dimension::frequency, 1.0},
    {"kHz", Dimension::frequency, 1e3},
    {"MHz", Dimension::frequency, 1e6},
    {"GHz", Dimension::frequency, 1e9},
    {"m/s", Dimension::speed, 1.0},
    {"mm/s", Dimension::speed, 1e-3},
    {"%", Dimension::probability, 1e-2},
    {"ppm", Dimension::probability, 1e-6},
    {"", Dimension::dimensionless, 1.0},
    {"", Dimension::probability, 1.0},
    {"", Dimension::count, 1.0},
}};

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

double parse_quantity(const std::string& text, Dimension dim) {
    const std::string t = strip(text);
    if (t.empty()) throw ConfigError("empty quantity");

    char* end = nullptr;
    const double value = std::strtod(t.c_str(), &end);
    if (end == t.c_str()) throw ConfigError("cannot parse quantity '" + text + "'");
    const std::string suffix = strip(t.substr(static_cast<size_t>(end - t.c_str())));

    if (suffix.empty()) return value;  // bare number: already SI / fractional

    for (const auto& s : kSuffixes) {
        if (suffix == s.name && s.dim == dim) return value * s.scale;
    }
    throw ConfigError("unit '" + suffix + "' does not match expected dimension in '" + text + "'");
}

std::string format_si(double value, Dimension dim) {
    std::ostringstream os;
    auto with = [&](double scale, const char* unit) {
        os << value / scale << " " << unit;
        return os.str();
    };
    const double a = std::abs(value);
    switch (dim) {
        case Dimension::time:
            if (a == 0.0 || a >= 1.0) return with(1.0, "s");
            if (a >= 1e-3) return with(1e-3, "ms");
            if (a >= 1e-6) return with(1e-6, "us");
            return with(1e-9, "ns");
        case Dimension::length:
            if (a == 0.0 || a >= 1.0) return with(1.0, "m");
            if (a >= 1e-6) return with(1e-6, "um");
            return with(1e-9, "nm");
        case Dimension::frequency:
            if (a >= 1e9) return with(1e9, "GHz");
            if (a >= 1e6) return with(1e6, "MHz");
            if (a >= 1e3) return with(1e3, "kHz");
            return with(1.0, "Hz");
        case Dimension::speed:
            return with(1.0, "m/s");
        default:
            os << value;
            return os.str();
    }
}

}  // namespace ftqcr::units
