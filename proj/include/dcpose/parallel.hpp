#pragma once

#include <exception>
#include <mutex>

namespace dcpose {

// Exceptions cannot unwind out of an OpenMP region; loop bodies run through
// this collector and the first captured exception is rethrown afterwards.
class ExceptionCollector {
public:
    template <typename F>
    void run(F&& body) noexcept {
        if (failed_) return;
        try {
            body();
        } catch (...) {
            const std::lock_guard<std::mutex> lock(mutex_);
            if (!first_) first_ = std::current_exception();
            failed_ = true;
        }
    }

    void rethrow() {
        if (first_) std::rethrow_exception(first_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr first_;
    volatile bool failed_ = false;
};

}  // namespace dcpose
