#include "adharden/simd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace adharden::simd {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const Kernels* resolve() {
    const char* override = std::getenv("ADHARDEN_SIMD");
    if (override != nullptr) {
        if (std::strcmp(override, "scalar") == 0) return &scalar_kernels();
        if (std::strcmp(override, "avx2") == 0 && avx2_kernels() != nullptr &&
            cpu_has_avx2()) {
            return avx2_kernels();
        }
        return &scalar_kernels();
    }
    if (avx2_kernels() != nullptr && cpu_has_avx2()) return avx2_kernels();
    return &scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() {
    static const Kernels* chosen = resolve();
    return *chosen;
}

}  // namespace adharden::simd
