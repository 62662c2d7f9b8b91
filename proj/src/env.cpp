#include "adharden/env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace adharden {

DefensePlan empty_plan(const CondensedGraph& cg) {
    DefensePlan p;
    p.blocked.assign(cg.bw_edges.size(), 0);
    return p;
}

DefensePlan plan_from_edges(const CondensedGraph& cg, std::span<const EdgeId> blocked_edges) {
    DefensePlan p = empty_plan(cg);
    for (EdgeId eid : blocked_edges) {
        auto it = std::lower_bound(cg.bw_edges.begin(), cg.bw_edges.end(), eid);
        if (it == cg.bw_edges.end() || *it != eid) {
            throw std::invalid_argument("edge " + std::to_string(eid) +
                                        " is not block-worthy");
        }
        p.blocked[static_cast<std::size_t>(it - cg.bw_edges.begin())] = 1;
    }
    return p;
}

std::vector<EdgeId> plan_to_edges(const CondensedGraph& cg, const DefensePlan& plan) {
    std::vector<EdgeId> out;
    for (std::size_t i = 0; i < plan.blocked.size(); ++i) {
        if (plan.blocked[i]) out.push_back(cg.bw_edges[i]);
    }
    return out;
}

std::string serialize_plan(const CondensedGraph& cg, const DefensePlan& plan) {
    nlohmann::json doc;
    doc["blocked_edges"] = plan_to_edges(cg, plan);
    return doc.dump(1);
}

DefensePlan deserialize_plan(const CondensedGraph& cg, const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<EdgeId> ids = doc.at("blocked_edges").get<std::vector<EdgeId>>();
    return plan_from_edges(cg, ids);
}

void save_plan(const CondensedGraph& cg, const DefensePlan& plan,
               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << serialize_plan(cg, plan) << '\n';
}

DefensePlan load_plan(const CondensedGraph& cg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_plan(cg, ss.str());
}

AttackerState init_state(const CondensedGraph& cg, const Snapshot& snapshot,
                         const DefensePlan& plan,
                         const std::vector<std::uint8_t>* forced_f) {
    AttackerState s;
    s.marks.assign(cg.nsps.size(), Mark::Unknown);
    for (const Nsp& nsp : cg.nsps) {
        bool dead = !nsp_available(nsp, snapshot);
        if (!dead && nsp.bw_edge != kNoEdge) {
            const std::uint32_t bw = cg.bw_index_of_nsp[nsp.id];
            if (plan.blocked[bw]) dead = true;
        }
        if (!dead && forced_f != nullptr && (*forced_f)[nsp.id]) dead = true;
        if (dead) s.marks[nsp.id] = Mark::Failed;
    }
    return s;
}

std::vector<NspId> legal_actions(const AttackerState& state, const CondensedGraph& cg) {
    std::vector<char> controlled(cg.out_nsps.size(), 0);
    for (NodeId v : cg.entries) controlled[v] = 1;
    for (const Nsp& nsp : cg.nsps) {
        if (state.marks[nsp.id] == Mark::Success) controlled[nsp.dst] = 1;
    }
    std::vector<NspId> out;
    for (const Nsp& nsp : cg.nsps) {
        if (state.marks[nsp.id] == Mark::Unknown && controlled[nsp.src]) {
            out.push_back(nsp.id);
        }
    }
    return out;
}

void encode_state(const AttackerState& state, std::span<double> out) {
    for (std::size_t i = 0; i < state.marks.size(); ++i) {
        switch (state.marks[i]) {
            case Mark::Unknown: out[i] = 0.0; break;
            case Mark::Success: out[i] = 1.0; break;
            case Mark::Failed: out[i] = -1.0; break;
        }
    }
}

StepResult step(AttackerState& state, NspId action, const CondensedGraph& cg, Rng& rng) {
    if (action >= cg.nsps.size() || state.marks[action] != Mark::Unknown) {
        throw IllegalAction("action " + std::to_string(action) + " is not legal");
    }
    {
        // src must be controlled
        auto legal = legal_actions(state, cg);
        if (std::find(legal.begin(), legal.end(), action) == legal.end()) {
            throw IllegalAction("action " + std::to_string(action) + " is not legal");
        }
    }
    const Nsp& nsp = cg.nsps[action];
    const double u = rng.uniform();
    StepResult r;
    if (u < nsp.p_s) {
        state.marks[action] = Mark::Success;
        r.outcome = Mark::Success;
        if (nsp.dst == cg.da) {
            r.reward = 1.0;
            r.done = true;
        } else {
            r.done = legal_actions(state, cg).empty();
        }
    } else if (u < nsp.p_s + nsp.p_f) {
        state.marks[action] = Mark::Failed;
        r.outcome = Mark::Failed;
        r.done = legal_actions(state, cg).empty();
    } else {
        // detected: episode over, no marks change
        r.outcome = Mark::Unknown;
        r.done = true;
    }
    return r;
}

Environment::Environment(const CondensedGraph& cg, SnapshotPool pool,
                         DefensePlan plan, Rng rng)
    : cg_(&cg), pool_(std::move(pool)), plan_(std::move(plan)), rng_(std::move(rng)) {
    forced_f_.assign(cg_->nsps.size(), 0);
    ep_legal_.assign(cg_->nsps.size(), 0);
    ep_chosen_.assign(cg_->nsps.size(), 0);
}

void Environment::mark_legal_now() {
    for (NspId a : legal_actions(state_, *cg_)) ep_legal_[a] = 1;
}

bool Environment::reset() {
    const Snapshot& snap = pool_.rotate();
    state_ = init_state(*cg_, snap, plan_, &forced_f_);
    std::fill(ep_legal_.begin(), ep_legal_.end(), 0);
    std::fill(ep_chosen_.begin(), ep_chosen_.end(), 0);
    ep_steps_ = 0;
    active_ = !legal_actions(state_, *cg_).empty();
    if (active_) mark_legal_now();
    return active_;
}

std::size_t Environment::legal_mask(std::vector<std::uint8_t>& mask) const {
    mask.assign(cg_->nsps.size(), 0);
    std::size_t count = 0;
    for (NspId a : legal_actions(state_, *cg_)) {
        mask[a] = 1;
        ++count;
    }
    return count;
}

StepResult Environment::step_action(NspId action) {
    if (!active_) throw IllegalAction("episode is not active");
    StepResult r = step(state_, action, *cg_, rng_);
    ep_chosen_[action] = 1;
    ++ep_steps_;
    if (r.done) {
        active_ = false;
    } else {
        mark_legal_now();
    }
    return r;
}

void Environment::force_f(const std::vector<NspId>& nsps, bool on) {
    for (NspId n : nsps) forced_f_[n] = on ? 1 : 0;
}

void Environment::set_pool(SnapshotPool pool) {
    pool_ = std::move(pool);
}

}  // namespace adharden
