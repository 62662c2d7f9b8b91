#include "adharden/simd/kernels.hpp"

#include <cmath>

namespace adharden::simd {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void gemv_scalar(const double* w, std::size_t m, std::size_t n,
                 const double* x, const double* bias, double* y) {
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = w + r * n;
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += row[c] * x[c];
        y[r] = acc + (bias ? bias[r] : 0.0);
    }
}

void gemv_t_scalar(const double* w, std::size_t m, std::size_t n,
                   const double* d, double* y) {
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = w + r * n;
        const double dr = d[r];
        if (dr == 0.0) continue;
        for (std::size_t c = 0; c < n; ++c) y[c] += row[c] * dr;
    }
}

void ger_scalar(double* w, std::size_t m, std::size_t n, double alpha,
                const double* u, const double* v) {
    for (std::size_t r = 0; r < m; ++r) {
        double* row = w + r * n;
        const double ur = alpha * u[r];
        if (ur == 0.0) continue;
        for (std::size_t c = 0; c < n; ++c) row[c] += ur * v[c];
    }
}

void adam_scalar(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {dot_scalar,    axpy_scalar, scale_scalar,
                              gemv_scalar,   gemv_t_scalar, ger_scalar,
                              adam_scalar,   "scalar"};
    return k;
}

}  // namespace adharden::simd
