#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "common.hpp"

namespace graphsim {

/// Run fn(worker) for each worker id. In parallel mode each worker gets its
/// own thread and the join is the barrier; otherwise workers run in order.
/// The first exception thrown by any worker is rethrown.
inline void run_workers(WorkerId k, bool parallel, const std::function<void(WorkerId)> &fn) {
    if (!parallel || k <= 1) {
        for (WorkerId w = 0; w < k; ++w)
            fn(w);
        return;
    }
    std::mutex mtx;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    threads.reserve(k);
    for (WorkerId w = 0; w < k; ++w)
        threads.emplace_back([&, w] {
            try {
                fn(w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mtx);
                if (!first_error)
                    first_error = std::current_exception();
            }
        });
    for (auto &t : threads)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace graphsim
