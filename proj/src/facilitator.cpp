#include "adharden/facilitator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "adharden/simd/kernels.hpp"

namespace adharden {

UsageStats::UsageStats(std::size_t n_envs, std::size_t n_nsps, std::size_t window)
    : n_nsps_(n_nsps), window_(window), words_((n_nsps + 63) / 64) {
    per_env_.resize(n_envs);
    for (auto& e : per_env_) {
        e.legal_count.assign(n_nsps, 0);
        e.chosen_count.assign(n_nsps, 0);
    }
    cumulative_chosen_.assign(n_nsps, 0);
}

namespace {

std::vector<std::uint64_t> pack_bits(const std::vector<std::uint8_t>& bits,
                                     std::size_t words) {
    std::vector<std::uint64_t> out(words, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) out[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    return out;
}

}  // namespace

void UsageStats::record_episode(std::size_t env,
                                const std::vector<std::uint8_t>& legal,
                                const std::vector<std::uint8_t>& chosen) {
    EnvWindow& w = per_env_[env];
    for (std::size_t i = 0; i < n_nsps_; ++i) {
        if (legal[i]) ++w.legal_count[i];
        if (chosen[i]) {
            ++w.chosen_count[i];
            ++cumulative_chosen_[i];
        }
    }
    w.ring.emplace_back(pack_bits(legal, words_), pack_bits(chosen, words_));
    if (w.ring.size() > window_) {
        const auto& [old_legal, old_chosen] = w.ring.front();
        for (std::size_t i = 0; i < n_nsps_; ++i) {
            if ((old_legal[i / 64] >> (i % 64)) & 1) --w.legal_count[i];
            if ((old_chosen[i / 64] >> (i % 64)) & 1) --w.chosen_count[i];
        }
        w.ring.pop_front();
    }
}

bool UsageStats::window_full() const {
    for (const auto& e : per_env_) {
        if (e.ring.size() < window_) return false;
    }
    return !per_env_.empty();
}

std::size_t UsageStats::episodes_in_window(std::size_t env) const {
    return per_env_[env].ring.size();
}

std::uint64_t UsageStats::window_legal(std::size_t env, NspId n) const {
    return per_env_[env].legal_count[n];
}

std::uint64_t UsageStats::window_chosen(std::size_t env, NspId n) const {
    return per_env_[env].chosen_count[n];
}

std::uint64_t UsageStats::cumulative_chosen(NspId n) const {
    return cumulative_chosen_[n];
}

std::vector<NspId> find_candidates(const UsageStats& stats,
                                   const std::vector<std::uint8_t>* exclude) {
    std::vector<NspId> out;
    if (!stats.window_full()) return out;
    for (NspId n = 0; n < stats.n_nsps(); ++n) {
        if (exclude != nullptr && (*exclude)[n]) continue;
        bool chosen_anywhere = false;
        bool legal_somewhere = false;
        for (std::size_t e = 0; e < stats.n_envs(); ++e) {
            if (stats.window_chosen(e, n) > 0) {
                chosen_anywhere = true;
                break;
            }
            if (stats.window_legal(e, n) > 0) legal_somewhere = true;
        }
        if (!chosen_anywhere && legal_somewhere) out.push_back(n);
    }
    return out;
}

namespace {

// Per-probe critic hidden pre-activations, so probe variants cost one axpy
// per changed coordinate instead of a full forward pass.
struct CriticProbes {
    std::size_t hidden = 0;
    std::vector<double> z1;        // count x hidden
    std::vector<double> baseline;  // critic value per probe

    CriticProbes(const PolicyParams& params, const ProbeSet& probes) {
        const MlpParams& c = params.critic;
        hidden = c.hidden;
        z1.resize(probes.count * hidden);
        baseline.resize(probes.count);
        std::vector<double> scaled(probes.dim), h(hidden);
        const auto& k = simd::active_kernels();
        for (std::size_t i = 0; i < probes.count; ++i) {
            auto src = probes.at(i);
            for (std::size_t d = 0; d < probes.dim; ++d) {
                scaled[d] = src[d] * params.dim_scale[d];
            }
            std::span<double> zi(z1.data() + i * hidden, hidden);
            hidden_preactivation(c, scaled, zi);
            for (std::size_t j = 0; j < hidden; ++j) h[j] = std::tanh(zi[j]);
            baseline[i] = k.dot(c.w2.data(), h.data(), hidden) + c.b2[0];
        }
    }

    double value_of(const MlpParams& c, std::span<const double> z) const {
        const auto& k = simd::active_kernels();
        thread_local std::vector<double> h;
        h.resize(hidden);
        for (std::size_t j = 0; j < hidden; ++j) h[j] = std::tanh(z[j]);
        return k.dot(c.w2.data(), h.data(), hidden) + c.b2[0];
    }
};

// Max |critic(probe with mask forced to F) - critic(probe)| over the
// probes, filling per-probe deltas when sink != nullptr.
double forced_delta(const PolicyParams& params, const ProbeSet& probes,
                    const CriticProbes& pre,
                    const std::vector<std::uint8_t>& force_mask,
                    std::vector<double>* sink) {
    const auto& k = simd::active_kernels();
    const MlpParams& c = params.critic;
    std::vector<double> z(pre.hidden);
    std::vector<std::uint32_t> forced;
    for (std::uint32_t d = 0; d < probes.dim; ++d) {
        if (force_mask[d]) forced.push_back(d);
    }
    double max_delta = 0.0;
    if (sink != nullptr) sink->assign(probes.count, 0.0);
    for (std::size_t i = 0; i < probes.count; ++i) {
        auto src = probes.at(i);
        std::copy(pre.z1.begin() + static_cast<std::ptrdiff_t>(i * pre.hidden),
                  pre.z1.begin() + static_cast<std::ptrdiff_t>((i + 1) * pre.hidden),
                  z.begin());
        for (std::uint32_t d : forced) {
            const double shift = (-1.0 - src[d]) * params.dim_scale[d];
            if (shift != 0.0) k.axpy(shift, c.w1_row(d), z.data(), pre.hidden);
        }
        const double delta = std::abs(pre.value_of(c, z) - pre.baseline[i]);
        if (sink != nullptr) (*sink)[i] = delta;
        max_delta = std::max(max_delta, delta);
    }
    return max_delta;
}

}  // namespace

VerifyResult verify_irrelevant(const std::vector<NspId>& candidates,
                               const PolicyParams& params, const ProbeSet& probes,
                               double tolerance, Rng& rng) {
    VerifyResult result;
    if (candidates.empty() || probes.count == 0) return result;

    const CriticProbes pre(params, probes);
    std::vector<std::uint8_t> accepted_mask(probes.dim, 0);
    std::vector<NspId> pool = candidates;
    rng.shuffle(pool);

    std::vector<std::vector<NspId>> stack{pool};
    while (!stack.empty()) {
        std::vector<NspId> subset = std::move(stack.back());
        stack.pop_back();
        if (subset.empty()) continue;

        std::vector<std::uint8_t> trial = accepted_mask;
        for (NspId n : subset) trial[n] = 1;
        const double delta = forced_delta(params, probes, pre, trial, nullptr);
        if (delta < tolerance) {
            accepted_mask = std::move(trial);
            result.accepted.insert(result.accepted.end(), subset.begin(), subset.end());
        } else if (subset.size() > 1) {
            const std::size_t half = subset.size() / 2;
            stack.emplace_back(subset.begin() + half, subset.end());
            stack.emplace_back(subset.begin(), subset.begin() + half);
        }
        // A rejected singleton is simply dropped: the critic reacts to it.
    }
    std::sort(result.accepted.begin(), result.accepted.end());
    forced_delta(params, probes, pre, accepted_mask, &result.probe_deltas);
    return result;
}

const char* to_string(PruneStatus s) {
    switch (s) {
        case PruneStatus::Candidate: return "Candidate";
        case PruneStatus::Removed: return "Removed";
        case PruneStatus::Reintroduced: return "Reintroduced";
        case PruneStatus::ConfirmedIrrelevant: return "ConfirmedIrrelevant";
        case PruneStatus::Restored: return "Restored";
    }
    return "?";
}

PruneRecord apply_env_pruning(std::vector<Environment>& envs,
                              const VerifyResult& verified, double fraction,
                              std::uint64_t epoch) {
    PruneRecord rec;
    rec.epoch_removed = epoch;
    rec.removed_nsps = verified.accepted;
    rec.critic_delta = verified.probe_deltas;
    if (verified.accepted.empty() || fraction <= 0.0) {
        rec.status = PruneStatus::Candidate;
        return rec;
    }
    const auto affected = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(envs.size())));
    for (std::size_t e = 0; e < std::min(affected, envs.size()); ++e) {
        envs[e].force_f(rec.removed_nsps, true);
        rec.env_ids.push_back(e);
    }
    rec.status = PruneStatus::Removed;
    return rec;
}

void reintroduce(std::vector<Environment>& envs, PruneRecord& record,
                 const UsageStats& stats, std::uint64_t epoch) {
    if (record.status != PruneStatus::Removed) return;
    for (std::size_t e : record.env_ids) {
        envs[e].force_f(record.removed_nsps, false);
    }
    record.chosen_marker.clear();
    for (NspId n : record.removed_nsps) {
        record.chosen_marker.push_back(stats.cumulative_chosen(n));
    }
    record.epoch_reintroduced = epoch;
    record.status = PruneStatus::Reintroduced;
}

void confirm_irrelevance(std::vector<Environment>& envs, PruneRecord& record,
                         const UsageStats& stats, std::uint64_t epoch) {
    if (record.status != PruneStatus::Reintroduced) return;
    record.confirmed.clear();
    record.restored.clear();
    for (std::size_t i = 0; i < record.removed_nsps.size(); ++i) {
        const NspId n = record.removed_nsps[i];
        if (stats.cumulative_chosen(n) == record.chosen_marker[i]) {
            record.confirmed.push_back(n);
        } else {
            record.restored.push_back(n);
        }
    }
    for (std::size_t e : record.env_ids) {
        envs[e].force_f(record.confirmed, true);
    }
    record.epoch_confirmed = epoch;
    record.status = record.confirmed.empty() ? PruneStatus::Restored
                                             : PruneStatus::ConfirmedIrrelevant;
}

NnPruneReport nn_prune_step(PolicyParams& params, const ProbeSet& probes,
                            double ratio, double tolerance) {
    if (ratio <= 0.0 || ratio >= 1.0) {
        throw std::invalid_argument("nn_prune_step: ratio must be in (0,1)");
    }
    NnPruneReport report;
    report.probe_delta.assign(params.nsp_count(), 0.0);
    if (probes.count == 0) return report;

    const CriticProbes pre(params, probes);
    const MlpParams& c = params.critic;
    const auto& k = simd::active_kernels();
    std::vector<double> z(pre.hidden);
    for (std::size_t d = 0; d < params.nsp_count(); ++d) {
        double max_delta = 0.0;
        for (std::size_t i = 0; i < probes.count; ++i) {
            const double xd = probes.at(i)[d] * params.dim_scale[d];
            if (xd == 0.0) continue;  // zeroing a zero changes nothing
            std::copy(
                pre.z1.begin() + static_cast<std::ptrdiff_t>(i * pre.hidden),
                pre.z1.begin() + static_cast<std::ptrdiff_t>((i + 1) * pre.hidden),
                z.begin());
            k.axpy(-xd, c.w1_row(d), z.data(), pre.hidden);
            max_delta = std::max(
                max_delta, std::abs(pre.value_of(c, z) - pre.baseline[i]));
        }
        report.probe_delta[d] = max_delta;
    }
    for (std::size_t d = 0; d < params.nsp_count(); ++d) {
        if (report.probe_delta[d] < tolerance) {
            params.dim_scale[d] *= 1.0 - ratio;
            ++report.reduced;
        } else if (params.dim_scale[d] < 1.0) {
            params.dim_scale[d] = std::min(1.0, params.dim_scale[d] / (1.0 - ratio));
            ++report.restored;
        }
    }
    return report;
}

namespace {

using nlohmann::json;

json record_to_json(const PruneRecord& r) {
    return {{"epoch_removed", r.epoch_removed},
            {"epoch_reintroduced", r.epoch_reintroduced},
            {"epoch_confirmed", r.epoch_confirmed},
            {"removed_nsps", r.removed_nsps},
            {"env_ids", r.env_ids},
            {"critic_delta", r.critic_delta},
            {"status", to_string(r.status)},
            {"confirmed", r.confirmed},
            {"restored", r.restored},
            {"chosen_marker", r.chosen_marker}};
}

PruneStatus status_from_string(const std::string& s) {
    if (s == "Candidate") return PruneStatus::Candidate;
    if (s == "Removed") return PruneStatus::Removed;
    if (s == "Reintroduced") return PruneStatus::Reintroduced;
    if (s == "ConfirmedIrrelevant") return PruneStatus::ConfirmedIrrelevant;
    if (s == "Restored") return PruneStatus::Restored;
    throw std::runtime_error("unknown prune status: " + s);
}

}  // namespace

std::string serialize_prune_records(const std::vector<PruneRecord>& records) {
    json doc;
    doc["records"] = json::array();
    for (const PruneRecord& r : records) doc["records"].push_back(record_to_json(r));
    return doc.dump(1);
}

std::vector<PruneRecord> deserialize_prune_records(const std::string& text) {
    json doc = json::parse(text);
    std::vector<PruneRecord> out;
    for (const json& j : doc.at("records")) {
        PruneRecord r;
        r.epoch_removed = j.at("epoch_removed").get<std::uint64_t>();
        r.epoch_reintroduced = j.at("epoch_reintroduced").get<std::uint64_t>();
        r.epoch_confirmed = j.at("epoch_confirmed").get<std::uint64_t>();
        r.removed_nsps = j.at("removed_nsps").get<std::vector<NspId>>();
        r.env_ids = j.at("env_ids").get<std::vector<std::size_t>>();
        r.critic_delta = j.at("critic_delta").get<std::vector<double>>();
        r.status = status_from_string(j.at("status").get<std::string>());
        r.confirmed = j.at("confirmed").get<std::vector<NspId>>();
        r.restored = j.at("restored").get<std::vector<NspId>>();
        r.chosen_marker = j.at("chosen_marker").get<std::vector<std::uint64_t>>();
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_prune_report(const std::vector<PruneRecord>& records) {
    std::ostringstream out;
    out << "prune records: " << records.size() << "\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const PruneRecord& r = records[i];
        out << "[" << i << "] status=" << to_string(r.status)
            << " removed_at_epoch=" << r.epoch_removed
            << " nsps=" << r.removed_nsps.size()
            << " envs=" << r.env_ids.size();
        double max_delta = 0.0;
        for (double d : r.critic_delta) max_delta = std::max(max_delta, d);
        out << " max_critic_delta=" << max_delta;
        if (r.status == PruneStatus::ConfirmedIrrelevant ||
            r.status == PruneStatus::Restored) {
            out << " confirmed=" << r.confirmed.size()
                << " restored=" << r.restored.size();
        }
        out << "\n";
        out << "    nsp ids:";
        for (NspId n : r.removed_nsps) out << ' ' << n;
        out << "\n";
    }
    return out.str();
}

}  // namespace adharden
