#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

// Data-parallel inner loops used by the tensor ops and the optimizer.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA variant compiled in its own translation unit. The variant is
// picked at runtime from CPUID; AFFECT_KERNELS=scalar|avx2 in the environment
// or select() overrides the choice. axpy, add, adamw, gemm_nn and gemm_tn are
// bit-identical across backends; dot and gemm_nt reassociate their sums.

namespace affect::kernels {

enum class Backend { scalar, avx2 };

std::string_view to_string(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

struct AdamWCoeffs {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double weight_decay;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    Backend backend;

    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y[i] = a[i] + b[i]
    void (*add)(const double* a, const double* b, double* y, std::size_t n);

    // Row-major GEMMs accumulating into C (C += op(A) * op(B)).
    // nn: A m x k, B k x n.   nt: A m x k, B n x k.   tn: A k x m, B k x n.
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

    // One decoupled-weight-decay Adam update over n coordinates.
    void (*adamw)(double* theta, const double* grad, double* m, double* v, std::size_t n, const AdamWCoeffs& c);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

/// The table used by default everywhere.
const KernelTable& active();
/// Throws affect::Error if the backend is unavailable on this machine.
void select(Backend backend);

} // namespace affect::kernels
