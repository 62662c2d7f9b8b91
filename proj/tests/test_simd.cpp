#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "adharden/rng.hpp"
#include "adharden/simd/kernels.hpp"

using namespace adharden;
using simd::Kernels;

TEST_SUITE_BEGIN("simd");

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

bool close(double a, double b, double tol = 1e-11) {
    return std::abs(a - b) <= tol * (1.0 + std::abs(a) + std::abs(b));
}

// Exercises every kernel entry on sizes that cover the vector width and the
// scalar remainder lanes, comparing the candidate against the reference.
void check_equivalence(const Kernels& ref, const Kernels& alt) {
    Rng rng(1234);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 17u, 64u, 129u, 1000u}) {
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);
        CHECK(close(ref.dot(x.data(), y.data(), n), alt.dot(x.data(), y.data(), n)));

        auto y1 = y, y2 = y;
        ref.axpy(0.37, x.data(), y1.data(), n);
        alt.axpy(0.37, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));

        auto s1 = x, s2 = x;
        ref.scale(-1.7, s1.data(), n);
        alt.scale(-1.7, s2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(s1[i], s2[i]));
    }

    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{3, 5},
                        {8, 8},
                        {16, 33},
                        {128, 41}}) {
        auto w = random_vec(rng, m * n);
        auto x = random_vec(rng, n);
        auto b = random_vec(rng, m);
        std::vector<double> out1(m), out2(m);
        ref.gemv(w.data(), m, n, x.data(), b.data(), out1.data());
        alt.gemv(w.data(), m, n, x.data(), b.data(), out2.data());
        for (std::size_t i = 0; i < m; ++i) CHECK(close(out1[i], out2[i]));

        auto d = random_vec(rng, m);
        d[0] = 0.0;  // exercise the zero-skip path
        std::vector<double> t1(n, 0.1), t2(n, 0.1);
        ref.gemv_t(w.data(), m, n, d.data(), t1.data());
        alt.gemv_t(w.data(), m, n, d.data(), t2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(close(t1[i], t2[i]));

        auto w1 = w, w2 = w;
        auto u = random_vec(rng, m);
        u[m / 2] = 0.0;
        auto v = random_vec(rng, n);
        ref.ger(w1.data(), m, n, 0.9, u.data(), v.data());
        alt.ger(w2.data(), m, n, 0.9, u.data(), v.data());
        for (std::size_t i = 0; i < m * n; ++i) CHECK(close(w1[i], w2[i]));
    }

    for (std::size_t n : {1u, 5u, 8u, 130u}) {
        auto p1 = random_vec(rng, n), m1 = random_vec(rng, n);
        auto v1 = random_vec(rng, n), g = random_vec(rng, n);
        for (double& q : v1) q = std::abs(q);
        auto p2 = p1, m2 = m1, v2 = v1;
        ref.adam_step(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9,
                      0.999, 1e-8, 1.5, 1.2);
        alt.adam_step(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9,
                      0.999, 1e-8, 1.5, 1.2);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(close(p1[i], p2[i]));
            CHECK(close(m1[i], m2[i]));
            CHECK(close(v1[i], v2[i]));
        }
    }
}

}  // namespace

TEST_CASE("scalar reference sanity") {
    const Kernels& k = simd::scalar_kernels();
    const double x[3] = {1, 2, 3}, y[3] = {4, 5, 6};
    CHECK(k.dot(x, y, 3) == 32.0);
    double acc[3] = {1, 1, 1};
    k.axpy(2.0, x, acc, 3);
    CHECK(acc[0] == 3.0);
    CHECK(acc[2] == 7.0);
    // gemv on a 2x3 row-major matrix
    const double w[6] = {1, 0, 0, 0, 1, 0};
    double out[2];
    k.gemv(w, 2, 3, x, nullptr, out);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
}

TEST_CASE("avx2 variant matches the scalar reference") {
    const Kernels* avx2 = simd::avx2_kernels();
#if defined(__x86_64__)
    const bool supported = __builtin_cpu_supports("avx2") != 0;
#else
    const bool supported = false;
#endif
    if (avx2 == nullptr || !supported) {
        MESSAGE("AVX2 not available on this host; equivalence check skipped");
        return;
    }
    check_equivalence(simd::scalar_kernels(), *avx2);
}

TEST_CASE("active table resolves and works") {
    const Kernels& k = simd::active_kernels();
    CHECK((std::strcmp(k.name, "scalar") == 0 || std::strcmp(k.name, "avx2") == 0));
    const double x[2] = {1.5, -2.0};
    CHECK(k.dot(x, x, 2) == doctest::Approx(6.25));
}

TEST_SUITE_END();
