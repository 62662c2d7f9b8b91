#include "adharden/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace adharden {

PolicyParams init_policy(std::size_t nsp_count, std::size_t hidden, Rng& rng) {
    PolicyParams p;
    const double root2 = std::sqrt(2.0);
    p.actor = init_mlp(nsp_count, hidden, nsp_count, root2, 0.01, rng);
    p.critic = init_mlp(nsp_count, hidden, 1, root2, 1.0, rng);
    p.dim_scale.assign(nsp_count, 1.0);
    return p;
}

namespace {

void scaled_input(const PolicyParams& p, std::span<const double> obs,
                  std::vector<double>& x) {
    x.resize(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) x[i] = obs[i] * p.dim_scale[i];
}

}  // namespace

void actor_forward(const PolicyParams& p, std::span<const double> obs,
                   std::span<const std::uint8_t> mask, std::span<double> probs) {
    thread_local std::vector<double> x, h, logits;
    scaled_input(p, obs, x);
    h.resize(p.actor.hidden);
    logits.resize(p.actor.out);
    mlp_forward(p.actor, x, h, logits);

    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
    }
    if (max_logit == -std::numeric_limits<double>::infinity()) {
        throw NoLegalAction("legal-action mask is empty");
    }
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i]) {
            probs[i] = std::exp(logits[i] - max_logit);
            z += probs[i];
        } else {
            probs[i] = 0.0;
        }
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i]) probs[i] /= z;
    }
}

double critic_forward(const PolicyParams& p, std::span<const double> obs) {
    thread_local std::vector<double> x, h;
    scaled_input(p, obs, x);
    h.resize(p.critic.hidden);
    double y = 0.0;
    mlp_forward(p.critic, x, h, std::span<double>(&y, 1));
    return y;
}

std::size_t sample_from_probs(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    bool any = false;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        any = true;
        last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    if (!any) throw NoLegalAction("distribution has no support");
    return last_positive;  // u landed in the rounding tail
}

std::size_t argmax_action(std::span<const double> probs) {
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > best_p) {
            best_p = probs[i];
            best = i;
        }
    }
    return best;
}

namespace {

using nlohmann::json;

json mlp_to_json(const MlpParams& p) {
    return {{"in", p.in},   {"hidden", p.hidden}, {"out", p.out},
            {"w1", p.w1},   {"b1", p.b1},         {"w2", p.w2},
            {"b2", p.b2}};
}

MlpParams mlp_from_json(const json& j) {
    MlpParams p;
    p.in = j.at("in").get<std::size_t>();
    p.hidden = j.at("hidden").get<std::size_t>();
    p.out = j.at("out").get<std::size_t>();
    p.w1 = j.at("w1").get<std::vector<double>>();
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.w2 = j.at("w2").get<std::vector<double>>();
    p.b2 = j.at("b2").get<std::vector<double>>();
    if (p.w1.size() != p.hidden * p.in || p.w2.size() != p.out * p.hidden ||
        p.b1.size() != p.hidden || p.b2.size() != p.out) {
        throw std::runtime_error("checkpoint: inconsistent layer shapes");
    }
    return p;
}

json adam_to_json(const AdamState& s) {
    return {{"m_w1", s.m_w1}, {"v_w1", s.v_w1}, {"m_b1", s.m_b1},
            {"v_b1", s.v_b1}, {"m_w2", s.m_w2}, {"v_w2", s.v_w2},
            {"m_b2", s.m_b2}, {"v_b2", s.v_b2}, {"t", s.t}};
}

AdamState adam_from_json(const json& j) {
    AdamState s;
    s.m_w1 = j.at("m_w1").get<std::vector<double>>();
    s.v_w1 = j.at("v_w1").get<std::vector<double>>();
    s.m_b1 = j.at("m_b1").get<std::vector<double>>();
    s.v_b1 = j.at("v_b1").get<std::vector<double>>();
    s.m_w2 = j.at("m_w2").get<std::vector<double>>();
    s.v_w2 = j.at("v_w2").get<std::vector<double>>();
    s.m_b2 = j.at("m_b2").get<std::vector<double>>();
    s.v_b2 = j.at("v_b2").get<std::vector<double>>();
    s.t = j.at("t").get<std::int64_t>();
    return s;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
    json doc;
    doc["version"] = 1;
    doc["nsp_count"] = ck.params.nsp_count();
    doc["actor"] = mlp_to_json(ck.params.actor);
    doc["critic"] = mlp_to_json(ck.params.critic);
    doc["dim_scale"] = ck.params.dim_scale;
    if (ck.has_adam) {
        doc["adam_actor"] = adam_to_json(ck.adam_actor);
        doc["adam_critic"] = adam_to_json(ck.adam_critic);
    }
    return doc.dump();
}

Checkpoint deserialize_checkpoint(const std::string& text) {
    json doc = json::parse(text);
    if (doc.at("version").get<int>() != 1) {
        throw std::runtime_error("unsupported checkpoint version");
    }
    Checkpoint ck;
    ck.params.actor = mlp_from_json(doc.at("actor"));
    ck.params.critic = mlp_from_json(doc.at("critic"));
    ck.params.dim_scale = doc.at("dim_scale").get<std::vector<double>>();
    if (doc.contains("adam_actor")) {
        ck.adam_actor = adam_from_json(doc.at("adam_actor"));
        ck.adam_critic = adam_from_json(doc.at("adam_critic"));
        ck.has_adam = true;
    }
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << serialize_checkpoint(ck) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace adharden
