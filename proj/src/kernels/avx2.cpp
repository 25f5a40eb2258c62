#include <immintrin.h>

#include <cmath>

#include "affect/kernels.hpp"

namespace affect::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

// No FMA here: keeps axpy (and the GEMMs built on it) bit-identical to scalar.
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* a, const double* b, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) y[i] = a[i] + b[i];
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

// Same operation order as the scalar reference, lane by lane.
void adamw(double* theta, const double* grad, double* m, double* v, std::size_t n, const AdamWCoeffs& c) {
    const double one_minus_b1 = 1.0 - c.beta1;
    const double one_minus_b2 = 1.0 - c.beta2;
    const double decay = c.lr * c.weight_decay;
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
    const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
    const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
    const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
    const __m256d lr = _mm256_set1_pd(c.lr);
    const __m256d eps = _mm256_set1_pd(c.eps);
    const __m256d dec = _mm256_set1_pd(decay);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d m_hat = _mm256_div_pd(mi, bc1);
        const __m256d v_hat = _mm256_div_pd(vi, bc2);
        const __m256d old = _mm256_loadu_pd(theta + i);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
        _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_sub_pd(old, step), _mm256_mul_pd(dec, old)));
    }
    for (; i < n; ++i) {
        const double g = grad[i];
        m[i] = c.beta1 * m[i] + one_minus_b1 * g;
        v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] / c.bias_correction1;
        const double v_hat = v[i] / c.bias_correction2;
        const double old = theta[i];
        theta[i] = old - c.lr * m_hat / (std::sqrt(v_hat) + c.eps) - decay * old;
    }
}

constexpr KernelTable kAvx2{Backend::avx2, dot, axpy, add, gemm_nn, gemm_nt, gemm_tn, adamw};

} // namespace

const KernelTable* avx2_compiled_table() { return &kAvx2; }

} // namespace affect::kernels
