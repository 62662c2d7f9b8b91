#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>

#include "adharden/graph.hpp"
#include "adharden/rng.hpp"

namespace adharden {

enum class ProbDistribution : std::uint8_t { Ind, Pos, Neg };

const char* to_string(ProbDistribution d);
ProbDistribution distribution_from_string(const std::string& s);

struct GenSpec {
    std::uint32_t n_computers = 1000;
    std::uint64_t seed = 0;
    ProbDistribution distribution = ProbDistribution::Ind;
    std::uint32_t n_entry_pool = 40;
    std::uint32_t n_entries = 20;
};

struct InsufficientNodes : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Synthetic AD topology: n computers, n users, n groups. Group 0 is the
// Domain Admins group and the single DA target; a handful of admin users
// are members. Users hold 1-2 sessions (Computer -> User), belong to 1-3
// groups, groups nest sparsely, and users/groups hold AdminTo rights over
// computers with a fan-out calibrated to the r1000/r2000/r4000 reference
// sizes. Deterministic in the spec seed.
AttackGraph generate_topology(const GenSpec& spec);

// Marks is_entry on n_entries nodes sampled from the n_entry_pool nodes
// with the largest min-hop distance to the DA (ties by node id). Throws
// InsufficientNodes when fewer than n_entry_pool candidates can reach DA.
AttackGraph select_entries(const AttackGraph& g, Rng& rng,
                           std::uint32_t n_entry_pool = 40,
                           std::uint32_t n_entries = 20);

// Each edge turns blockable with probability minhops(head, DA) divided by
// the maximum such distance; edges touching the DA never do.
AttackGraph assign_blockable(const AttackGraph& g, Rng& rng);

// Per-edge (p_d, p_f): Ind draws each from U[0, 0.2]; Pos/Neg draw a
// bivariate normal with mean (0.1, 0.1), sd 0.05 and correlation +/-0.5,
// clamped componentwise to [0, 0.2].
AttackGraph assign_probabilities(const AttackGraph& g, ProbDistribution dist, Rng& rng);

// Raw correlated pair before clamping (calibration hook).
std::pair<double, double> sample_prob_pair_raw(ProbDistribution dist, Rng& rng);

// Full pipeline: topology, entry selection, blockable flags, probabilities,
// each on its own labeled stream of spec.seed.
AttackGraph generate(const GenSpec& spec);

}  // namespace adharden
