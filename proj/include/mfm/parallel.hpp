#pragma once
#include <exception>

namespace mfm {

// Exceptions may not escape an OpenMP region; workers park the first one
// here and the caller rethrows after the join.
class ParallelGuard {
public:
    template <class F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            capture();
        }
    }

    void rethrow_if_any() const {
        if (eptr_) std::rethrow_exception(eptr_);
    }

    bool failed() const { return eptr_ != nullptr; }

private:
    void capture() {
#pragma omp critical(mfm_parallel_guard)
        {
            if (!eptr_) eptr_ = std::current_exception();
        }
    }

    std::exception_ptr eptr_ = nullptr;
};

}  // namespace mfm
