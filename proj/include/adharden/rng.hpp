#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace adharden {

// Deterministic random stream: xoshiro256++ seeded via splitmix64.
// Distributions are implemented here because the standard library leaves
// distribution algorithms unspecified and run-to-run reproducibility of
// every sampled value is a hard requirement.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Derives an independent child stream from a master seed and a label,
    // e.g. Rng::stream(master, "env", 3). Same inputs, same stream.
    static Rng stream(std::uint64_t master_seed, std::string_view label,
                      std::uint64_t index = 0);

    std::uint64_t next_u64();

    double uniform();       // [0, 1)
    double uniform_open();  // (0, 1]
    double uniform_range(double lo, double hi);

    // Unbiased integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p);
    double normal();  // standard normal (Box-Muller, cached pair)
    int poisson(double mean);

    // k distinct values from [0, n), in random order.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n,
                                                          std::uint32_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace adharden
