#include <atomic>
#include <cstdlib>
#include <string>

#include "affect/error.hpp"
#include "affect/kernels.hpp"

namespace affect::kernels {

#if defined(AFFECT_HAVE_AVX2)
const KernelTable* avx2_compiled_table();
#endif

std::string_view to_string(Backend backend) { return backend == Backend::avx2 ? "avx2" : "scalar"; }

std::optional<Backend> parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2") return Backend::avx2;
    return std::nullopt;
}

bool cpu_supports_avx2() {
#if defined(AFFECT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* avx2_table() {
#if defined(AFFECT_HAVE_AVX2)
    static const bool ok = cpu_supports_avx2();
    return ok ? avx2_compiled_table() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() {
    if (const char* env = std::getenv("AFFECT_KERNELS")) {
        const auto b = parse_backend(env);
        if (b == Backend::scalar) return &scalar_table();
        if (b == Backend::avx2 && avx2_table() != nullptr) return avx2_table();
    }
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

} // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Backend backend) {
    if (backend == Backend::scalar) {
        current().store(&scalar_table(), std::memory_order_release);
        return;
    }
    const KernelTable* t = avx2_table();
    if (t == nullptr) {
        throw Error("avx2 kernels are not available on this machine");
    }
    current().store(t, std::memory_order_release);
}

} // namespace affect::kernels
