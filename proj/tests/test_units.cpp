#include <doctest.h>

#include "ftqcr/errors.hpp"
#include "ftqcr/units.hpp"

using namespace ftqcr;
using units::Dimension;
using units::parse_quantity;

TEST_CASE("unit suffixes normalize to SI") {
    CHECK(parse_quantity("225 ns", Dimension::time) == doctest::Approx(225e-9).epsilon(1e-15));
    CHECK(parse_quantity("100us", Dimension::time) == doctest::Approx(100e-6).epsilon(1e-15));
    CHECK(parse_quantity("100 µs", Dimension::time) == doctest::Approx(100e-6).epsilon(1e-15));
    CHECK(parse_quantity("0.1 s", Dimension::time) == doctest::Approx(0.1));
    CHECK(parse_quantity("100 nm", Dimension::length) == doctest::Approx(100e-9));
    CHECK(parse_quantity("0.1 %", Dimension::probability) == doctest::Approx(1e-3));
    CHECK(parse_quantity("8 m/s", Dimension::speed) == doctest::Approx(8.0));
    CHECK(parse_quantity("10 MHz", Dimension::frequency) == doctest::Approx(10e6));
}

TEST_CASE("bare numbers pass through, mismatched units reject") {
    CHECK(parse_quantity("1e-5", Dimension::probability) == doctest::Approx(1e-5));
    CHECK_THROWS_AS(parse_quantity("10 ns", Dimension::length), ConfigError);
    CHECK_THROWS_AS(parse_quantity("abc", Dimension::time), ConfigError);
}
