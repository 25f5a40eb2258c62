#include <cmath>

#include "affect/kernels.hpp"

namespace affect::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* a, const double* b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, c + i * n, n);
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
    }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < m; ++i) axpy(a[p * m + i], b + p * n, c + i * n, n);
    }
}

void adamw(double* theta, const double* grad, double* m, double* v, std::size_t n, const AdamWCoeffs& c) {
    const double one_minus_b1 = 1.0 - c.beta1;
    const double one_minus_b2 = 1.0 - c.beta2;
    const double decay = c.lr * c.weight_decay;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = c.beta1 * m[i] + one_minus_b1 * g;
        v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] / c.bias_correction1;
        const double v_hat = v[i] / c.bias_correction2;
        const double old = theta[i];
        theta[i] = old - c.lr * m_hat / (std::sqrt(v_hat) + c.eps) - decay * old;
    }
}

constexpr KernelTable kScalar{Backend::scalar, dot, axpy, add, gemm_nn, gemm_nt, gemm_tn, adamw};

} // namespace

const KernelTable& scalar_table() { return kScalar; }

} // namespace affect::kernels
