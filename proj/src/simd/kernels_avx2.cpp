// AVX2 variants of the double-precision kernels. This translation unit is
// compiled with -mavx2 on x86-64; the dispatcher only hands out this table
// after checking cpuid, so no AVX2 instruction runs on unsupported hosts.

#include "adharden/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <cmath>
#include <immintrin.h>

namespace adharden::simd {

namespace {

inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i),
                               _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                               _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i),
                               _mm256_loadu_pd(y + i), acc0);
    }
    double acc = hsum4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

void gemv_avx2(const double* w, std::size_t m, std::size_t n, const double* x,
               const double* bias, double* y) {
    for (std::size_t r = 0; r < m; ++r) {
        y[r] = dot_avx2(w + r * n, x, n) + (bias ? bias[r] : 0.0);
    }
}

void gemv_t_avx2(const double* w, std::size_t m, std::size_t n,
                 const double* d, double* y) {
    for (std::size_t r = 0; r < m; ++r) {
        const double dr = d[r];
        if (dr == 0.0) continue;
        axpy_avx2(dr, w + r * n, y, n);
    }
}

void ger_avx2(double* w, std::size_t m, std::size_t n, double alpha,
              const double* u, const double* v) {
    for (std::size_t r = 0; r < m; ++r) {
        const double ur = alpha * u[r];
        if (ur == 0.0) continue;
        axpy_avx2(ur, v, w + r * n, n);
    }
}

void adam_avx2(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        vm = _mm256_fmadd_pd(vb1, vm, _mm256_mul_pd(vb1c, vg));
        vv = _mm256_fmadd_pd(vb2, vv, _mm256_mul_pd(vb2c, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d denom =
            _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vbc2)), veps);
        const __m256d vstep = _mm256_div_pd(_mm256_mul_pd(vm, vbc1), denom);
        __m256d vp = _mm256_loadu_pd(p + i);
        vp = _mm256_fnmadd_pd(vlr, vstep, vp);
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

}  // namespace

const Kernels* avx2_kernels() {
    static const Kernels k = {dot_avx2, axpy_avx2, scale_avx2, gemv_avx2,
                              gemv_t_avx2, ger_avx2, adam_avx2, "avx2"};
    return &k;
}

}  // namespace adharden::simd

#else  // non-x86 build: no AVX2 table

namespace adharden::simd {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace adharden::simd

#endif
