#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace iar::parallel {

// Static-schedule OpenMP loop over [0, n). Each index must write only its own
// output slot, so results do not depend on the thread count. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <typename Fn>
void for_each_index(std::size_t n, Fn&& fn) {
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
        try {
            fn(static_cast<std::size_t>(si));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

inline int max_threads() { return omp_get_max_threads(); }
inline void set_threads(int n) { omp_set_num_threads(n); }

}  // namespace iar::parallel
