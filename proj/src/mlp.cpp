#include "adharden/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "adharden/simd/kernels.hpp"

namespace adharden {

void MlpGrads::match(const MlpParams& p) {
    w1.assign(p.w1.size(), 0.0);
    b1.assign(p.b1.size(), 0.0);
    w2.assign(p.w2.size(), 0.0);
    b2.assign(p.b2.size(), 0.0);
}

void MlpGrads::zero() {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    std::fill(b2.begin(), b2.end(), 0.0);
}

void MlpGrads::scale(double a) {
    const auto& k = simd::active_kernels();
    k.scale(a, w1.data(), w1.size());
    k.scale(a, b1.data(), b1.size());
    k.scale(a, w2.data(), w2.size());
    k.scale(a, b2.data(), b2.size());
}

namespace {

// Orthogonalizes the shorter dimension via modified Gram-Schmidt.
void orthogonal_fill(std::vector<double>& w, std::size_t rows, std::size_t cols,
                     double gain, Rng& rng) {
    w.resize(rows * cols);
    for (double& x : w) x = rng.normal();
    const bool by_rows = rows <= cols;
    const std::size_t vecs = by_rows ? rows : cols;
    const std::size_t dim = by_rows ? cols : rows;
    auto at = [&](std::size_t v, std::size_t i) -> double& {
        return by_rows ? w[v * cols + i] : w[i * cols + v];
    };
    for (std::size_t v = 0; v < vecs; ++v) {
        for (std::size_t u = 0; u < v; ++u) {
            double proj = 0.0;
            for (std::size_t i = 0; i < dim; ++i) proj += at(v, i) * at(u, i);
            for (std::size_t i = 0; i < dim; ++i) at(v, i) -= proj * at(u, i);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < dim; ++i) norm += at(v, i) * at(v, i);
        norm = std::sqrt(norm);
        if (norm < 1e-12) norm = 1.0;
        for (std::size_t i = 0; i < dim; ++i) at(v, i) /= norm;
    }
    for (double& x : w) x *= gain;
}

}  // namespace

MlpParams init_mlp(std::size_t in, std::size_t hidden, std::size_t out,
                   double hidden_gain, double out_gain, Rng& rng) {
    MlpParams p;
    p.in = in;
    p.hidden = hidden;
    p.out = out;
    orthogonal_fill(p.w1, in, hidden, hidden_gain, rng);  // input-major layout
    orthogonal_fill(p.w2, out, hidden, out_gain, rng);
    p.b1.assign(hidden, 0.0);
    p.b2.assign(out, 0.0);
    return p;
}

void hidden_preactivation(const MlpParams& p, std::span<const double> x,
                          std::span<double> z1) {
    const auto& k = simd::active_kernels();
    std::copy(p.b1.begin(), p.b1.end(), z1.begin());
    // z1 += sum_i x[i] * w1_row(i); zero inputs stream nothing.
    k.gemv_t(p.w1.data(), p.in, p.hidden, x.data(), z1.data());
}

void mlp_forward(const MlpParams& p, std::span<const double> x,
                 std::span<double> h, std::span<double> y) {
    const auto& k = simd::active_kernels();
    hidden_preactivation(p, x, h);
    for (std::size_t i = 0; i < p.hidden; ++i) h[i] = std::tanh(h[i]);
    k.gemv(p.w2.data(), p.out, p.hidden, h.data(), p.b2.data(), y.data());
}

void mlp_backward(const MlpParams& p, std::span<const double> x,
                  std::span<const double> h, std::span<const double> dy,
                  MlpGrads& grads) {
    const auto& k = simd::active_kernels();
    // Output layer (zero rows of dy stream nothing).
    k.ger(grads.w2.data(), p.out, p.hidden, 1.0, dy.data(), h.data());
    k.axpy(1.0, dy.data(), grads.b2.data(), p.out);
    // Through tanh.
    std::vector<double> dh(p.hidden, 0.0);
    k.gemv_t(p.w2.data(), p.out, p.hidden, dy.data(), dh.data());
    for (std::size_t i = 0; i < p.hidden; ++i) dh[i] *= 1.0 - h[i] * h[i];
    // Input layer: rank-1 over the nonzero inputs only.
    k.ger(grads.w1.data(), p.in, p.hidden, 1.0, x.data(), dh.data());
    k.axpy(1.0, dh.data(), grads.b1.data(), p.hidden);
}

void AdamState::match(const MlpParams& p) {
    m_w1.assign(p.w1.size(), 0.0);
    v_w1.assign(p.w1.size(), 0.0);
    m_b1.assign(p.b1.size(), 0.0);
    v_b1.assign(p.b1.size(), 0.0);
    m_w2.assign(p.w2.size(), 0.0);
    v_w2.assign(p.w2.size(), 0.0);
    m_b2.assign(p.b2.size(), 0.0);
    v_b2.assign(p.b2.size(), 0.0);
    t = 0;
}

void adam_update(MlpParams& p, AdamState& s, const MlpGrads& g,
                 const AdamConfig& cfg) {
    const auto& k = simd::active_kernels();
    ++s.t;
    const double bc1 = 1.0 / (1.0 - std::pow(cfg.beta1, static_cast<double>(s.t)));
    const double bc2 = 1.0 / (1.0 - std::pow(cfg.beta2, static_cast<double>(s.t)));
    k.adam_step(p.w1.data(), s.m_w1.data(), s.v_w1.data(), g.w1.data(),
                p.w1.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    k.adam_step(p.b1.data(), s.m_b1.data(), s.v_b1.data(), g.b1.data(),
                p.b1.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    k.adam_step(p.w2.data(), s.m_w2.data(), s.v_w2.data(), g.w2.data(),
                p.w2.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    k.adam_step(p.b2.data(), s.m_b2.data(), s.v_b2.data(), g.b2.data(),
                p.b2.size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
}

}  // namespace adharden
