#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace egocurate {

/// Worker cap: EGOCURATE_THREADS when set (must be >= 1), else hardware
/// concurrency, at least 1.
inline int thread_budget() {
    if (const char* env = std::getenv("EGOCURATE_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n < 1) throw std::invalid_argument("below 1");
            return n;
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("EGOCURATE_THREADS must be a positive integer, got '") +
                                        env + "'");
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// out[i] = fn(i) for i in [0, n), computed on up to thread_budget() threads.
/// Results land at their index, so the output is independent of scheduling.
/// The first exception (by worker index) is rethrown after all workers join.
/// T must be default-constructible.
template <typename T, typename Fn>
std::vector<T> parallel_map(size_t n, Fn fn) {
    std::vector<T> out(n);
    const int budget = thread_budget();
    if (budget == 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const size_t workers = std::min<size_t>(static_cast<size_t>(budget), n);
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (size_t i = w; i < n; i += workers) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace egocurate
