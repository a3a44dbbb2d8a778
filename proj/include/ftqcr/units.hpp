#pragma once

#include <string>

namespace ftqcr::units {

enum class Dimension { time, length, frequency, speed, probability, dimensionless, count };

// Parses "225 ns", "100us", "0.1 %", "8 m/s" or a bare number (already SI /
// fractional) into SI units. Throws ConfigError on unknown suffixes or a
// suffix that does not match the expected dimension.
double parse_quantity(const std::string& text, Dimension dim);

// Formats an SI value with a readable unit for reports (1.25e-7 s -> "125 ns").
std::string format_si(double value, Dimension dim);

}  // namespace ftqcr::units
