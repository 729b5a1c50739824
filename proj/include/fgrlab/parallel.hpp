// parallel.hpp: Worker-thread configuration and a deterministic parallel index loop

#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>

#include <omp.h>

namespace fgrlab::parallel {

namespace detail {
inline int& thread_override() {
    static int n = 0;
    return n;
}
} // namespace detail

// Explicit worker count; 0 restores the default (FGRLAB_THREADS, then OpenMP's default).
inline void set_thread_count(int n) { detail::thread_override() = n < 0 ? 0 : n; }

inline int thread_count() {
    if (detail::thread_override() > 0) return detail::thread_override();
    if (const char* env = std::getenv("FGRLAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

// Runs f(i) for i in [0, n). Every index writes only its own output slot, so
// results do not depend on the schedule. If several indices throw, the
// exception from the lowest index is rethrown.
template <typename F>
void for_each_index(std::size_t n, F&& f) {
    std::exception_ptr first_error;
    std::size_t first_index = std::numeric_limits<std::size_t>::max();
    std::mutex guard;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (static_cast<std::size_t>(i) < first_index) {
                first_index = static_cast<std::size_t>(i);
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace fgrlab::parallel
