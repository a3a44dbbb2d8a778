#pragma once

#include <cstddef>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ftqcr::par {

enum class Mode { serial, openmp };

// Process-wide execution mode. Defaults to OpenMP; FTQCR_SERIAL=1 in the
// environment or set_mode(Mode::serial) selects the serial reference path.
inline Mode& mode() {
    static Mode m = [] {
        const char* env = std::getenv("FTQCR_SERIAL");
        return (env && env[0] == '1') ? Mode::serial : Mode::openmp;
    }();
    return m;
}

inline void set_mode(Mode m) { mode() = m; }

inline int& max_threads() {
#ifdef _OPENMP
    static int n = omp_get_max_threads();
#else
    static int n = 1;
#endif
    return n;
}

inline void set_max_threads(int n) {
    if (n > 0) max_threads() = n;
}

// body(i) for i in [0, n). Iterations must be independent.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    if (mode() == Mode::serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

// Sum of term(i) with a fixed left-to-right combination order over per-chunk
// partials, so serial and OpenMP runs are bitwise identical.
template <class T, class F>
T parallel_sum(std::size_t n, F&& term, std::size_t n_chunks = 64) {
    if (n == 0) return T{};
    if (n_chunks > n) n_chunks = n;
    std::vector<T> partial(n_chunks, T{});
    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * n / n_chunks;
        const std::size_t hi = (c + 1) * n / n_chunks;
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[c] = acc;
    });
    T total{};
    for (const T& p : partial) total += p;
    return total;
}

}  // namespace ftqcr::par
