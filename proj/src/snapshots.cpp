#include "adharden/snapshots.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace adharden {

Snapshot sample_snapshot(std::size_t session_edge_count, double session_p, Rng& rng) {
    Snapshot s;
    s.active.resize(session_edge_count);
    for (std::size_t i = 0; i < session_edge_count; ++i) {
        s.active[i] = rng.bernoulli(session_p) ? 1 : 0;
    }
    return s;
}

bool nsp_available(const Nsp& nsp, const Snapshot& snapshot) {
    for (std::uint32_t bit : nsp.session_bits) {
        if (!snapshot.active[bit]) return false;
    }
    return true;
}

SnapshotPool::SnapshotPool(std::vector<Snapshot> snapshots)
    : snapshots_(std::move(snapshots)) {
    if (snapshots_.empty()) throw std::invalid_argument("empty snapshot pool");
}

SnapshotPool SnapshotPool::sample(std::size_t session_edge_count, std::size_t count,
                                  double session_p, Rng& rng) {
    std::vector<Snapshot> snaps;
    snaps.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        snaps.push_back(sample_snapshot(session_edge_count, session_p, rng));
    }
    return SnapshotPool(std::move(snaps));
}

const Snapshot& SnapshotPool::rotate() {
    const Snapshot& s = snapshots_[cursor_];
    cursor_ = (cursor_ + 1) % snapshots_.size();
    return s;
}

namespace {

std::string bits_to_string(const Snapshot& s) {
    std::string out(s.active.size(), '0');
    for (std::size_t i = 0; i < s.active.size(); ++i) {
        if (s.active[i]) out[i] = '1';
    }
    return out;
}

Snapshot string_to_bits(const std::string& s) {
    Snapshot snap;
    snap.active.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') {
            throw std::runtime_error("bad snapshot bit string");
        }
        snap.active[i] = s[i] == '1' ? 1 : 0;
    }
    return snap;
}

}  // namespace

std::string serialize_pools(const std::vector<SnapshotPool>& pools) {
    nlohmann::json doc;
    doc["pools"] = nlohmann::json::array();
    for (const SnapshotPool& pool : pools) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Snapshot& s : pool.snapshots()) arr.push_back(bits_to_string(s));
        doc["pools"].push_back(arr);
    }
    return doc.dump(1);
}

std::vector<SnapshotPool> deserialize_pools(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<SnapshotPool> pools;
    for (const nlohmann::json& arr : doc.at("pools")) {
        std::vector<Snapshot> snaps;
        for (const nlohmann::json& s : arr) {
            snaps.push_back(string_to_bits(s.get<std::string>()));
        }
        pools.emplace_back(std::move(snaps));
    }
    return pools;
}

void save_pools(const std::vector<SnapshotPool>& pools, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << serialize_pools(pools) << '\n';
}

std::vector<SnapshotPool> load_pools(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_pools(ss.str());
}

}  // namespace adharden
