#pragma once

#include <cstddef>

namespace adharden::simd {

// Double-precision kernels behind the policy/critic math. Each entry has a
// scalar reference implementation and, on x86-64 with AVX2, a vectorized
// variant. The active table is chosen once at startup from CPU capabilities;
// set ADHARDEN_SIMD=scalar (or =avx2) to override.
//
// Matrix layout is row-major throughout: w[r * n + c].
struct Kernels {
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    // y[r] = bias[r] + sum_c w[r,c] * x[c]   (bias may be null -> 0)
    void (*gemv)(const double* w, std::size_t m, std::size_t n,
                 const double* x, const double* bias, double* y);
    // y[c] += sum_r w[r,c] * d[r]
    void (*gemv_t)(const double* w, std::size_t m, std::size_t n,
                   const double* d, double* y);
    // w[r,c] += alpha * u[r] * v[c]
    void (*ger)(double* w, std::size_t m, std::size_t n, double alpha,
                const double* u, const double* v);
    // Adam step with precomputed bias corrections bc1 = 1/(1-beta1^t),
    // bc2 = 1/(1-beta2^t):
    //   m = beta1*m + (1-beta1)*g ; v = beta2*v + (1-beta2)*g^2
    //   p -= lr * (m*bc1) / (sqrt(v*bc2) + eps)
    void (*adam_step)(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);
    const char* name;
};

const Kernels& scalar_kernels();
// Null when the CPU (or build target) lacks AVX2.
const Kernels* avx2_kernels();
// Best available table, resolved once; honors ADHARDEN_SIMD override.
const Kernels& active_kernels();

}  // namespace adharden::simd
