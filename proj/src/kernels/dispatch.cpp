#include "pm/kernels.hpp"

#include "pm/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace pm::kernels {

#if defined(PM_HAVE_AVX2_KERNEL)
const KernelTable& avx2_kernel_table() noexcept;  // avx2.cpp
#endif

bool cpu_supports_avx2() noexcept {
#if defined(PM_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* avx2_table() noexcept {
#if defined(PM_HAVE_AVX2_KERNEL)
    if (cpu_supports_avx2()) return &avx2_kernel_table();
#endif
    return nullptr;
}

namespace {

const KernelTable* initial_choice() noexcept {
    if (const char* env = std::getenv("PM_KERNEL"); env && std::string_view(env) == "scalar") {
        return &scalar_table();
    }
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> current{initial_choice()};
    return current;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) {
    if (isa == Isa::Scalar) {
        slot().store(&scalar_table(), std::memory_order_release);
        return;
    }
    const KernelTable* t = avx2_table();
    if (t == nullptr) throw MarketError(ErrorCode::InvalidArgument, "AVX2 kernel not available on this CPU");
    slot().store(t, std::memory_order_release);
}

}  // namespace pm::kernels
