#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adharden/rng.hpp"

namespace adharden {

// One-hidden-layer perceptron with tanh activation, double precision.
// w1 is stored input-major (in x hidden, row i = weights fed by input i) so
// sparse observations stream only the rows they touch; w2 is out x hidden.
struct MlpParams {
    std::size_t in = 0, hidden = 0, out = 0;
    std::vector<double> w1, b1, w2, b2;

    std::size_t parameter_count() const {
        return w1.size() + b1.size() + w2.size() + b2.size();
    }
    const double* w1_row(std::size_t input_dim) const {
        return w1.data() + input_dim * hidden;
    }
};

struct MlpGrads {
    std::vector<double> w1, b1, w2, b2;

    void match(const MlpParams& p);
    void zero();
    void scale(double a);
};

// Orthogonal rows/columns scaled by gain on the hidden layer, small-gain
// output layer; biases zero.
MlpParams init_mlp(std::size_t in, std::size_t hidden, std::size_t out,
                   double hidden_gain, double out_gain, Rng& rng);

// z1 = b1 + sum_i x[i] * w1_row(i); the hot paths patch this incrementally
// when consecutive states differ in one coordinate.
void hidden_preactivation(const MlpParams& p, std::span<const double> x,
                          std::span<double> z1);

// h = tanh(z1(x)), y = w2 h + b2. h and y are outputs.
void mlp_forward(const MlpParams& p, std::span<const double> x,
                 std::span<double> h, std::span<double> y);

// Accumulates parameter gradients for upstream dL/dy; x and h must come
// from the matching forward pass.
void mlp_backward(const MlpParams& p, std::span<const double> x,
                  std::span<const double> h, std::span<const double> dy,
                  MlpGrads& grads);

// Adam with bias correction, one state per tensor.
struct AdamState {
    std::vector<double> m_w1, v_w1, m_b1, v_b1, m_w2, v_w2, m_b2, v_b2;
    std::int64_t t = 0;

    void match(const MlpParams& p);
};

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_update(MlpParams& p, AdamState& state, const MlpGrads& grads,
                 const AdamConfig& cfg);

}  // namespace adharden
