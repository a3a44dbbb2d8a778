#include <doctest.h>

#include <cmath>
#include <vector>

#include "ftqcr/parallel.hpp"

using namespace ftqcr;

TEST_CASE("serial and openmp parallel_sum are bitwise identical") {
    auto term = [](std::size_t i) {
        const double x = 1e-3 * static_cast<double>(i + 1);
        return std::sin(x) / (x * x + 1.0);
    };
    const auto saved = par::mode();
    par::set_mode(par::Mode::serial);
    const double serial = par::parallel_sum<double>(100001, term);
    par::set_mode(par::Mode::openmp);
    const double parallel = par::parallel_sum<double>(100001, term);
    par::set_mode(saved);
    CHECK(serial == parallel);  // exact: fixed chunking, ordered reduction
}

TEST_CASE("parallel_for covers every index once") {
    std::vector<int> hits(5000, 0);
    par::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}
