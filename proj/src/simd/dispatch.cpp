#include <cstdlib>
#include <string_view>

#include "dispatch_internal.hpp"

namespace revert::simd {

const KernelTable* vector_table() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2")) return detail::avx2_table();
    return nullptr;
#else
    return detail::neon_table();
#endif
}

const KernelTable& active() noexcept {
    static const KernelTable& chosen = []() -> const KernelTable& {
        if (const char* env = std::getenv("REVERT_FIELD_SIMD");
            env != nullptr && std::string_view(env) == "scalar") {
            return scalar_table();
        }
        const KernelTable* vec = vector_table();
        return vec != nullptr ? *vec : scalar_table();
    }();
    return chosen;
}

}  // namespace revert::simd
