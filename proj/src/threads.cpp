#include "cslsm/threads.hpp"

#include <cstdlib>

namespace cslsm::threads {

int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("CSLSM_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<int>(v);
        }
        const int hw = static_cast<int>(std::thread::hardware_concurrency());
        return hw < 1 ? 1 : hw;
    }();
    return n;
}

} // namespace cslsm::threads
