#include "eakr/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "eakr/digest.hpp"
#include "eakr/rng.hpp"
#include "json.hpp"

namespace eakr {

namespace {

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void validate_failure_model(const FailureModel& m) {
    switch (m.kind) {
        case FailureModel::Kind::Constant:
            if (!(m.f >= 0.0 && m.f < 1.0))
                throw ConfigError("failure_model.f must be in [0, 1)");
            break;
        case FailureModel::Kind::Uniform:
            if (!(m.lo >= 0.0 && m.lo <= m.hi && m.hi < 1.0))
                throw ConfigError("failure_model uniform bounds must satisfy 0 <= lo <= hi < 1");
            break;
        case FailureModel::Kind::DistanceLinear:
            if (!(m.scale >= 0.0 && m.scale < 1.0))
                throw ConfigError("failure_model.scale must be in [0, 1)");
            break;
    }
}

double link_failure(const FailureModel& m, NodeId u, NodeId v, double distance,
                    double gate_range, std::uint64_t seed) {
    switch (m.kind) {
        case FailureModel::Kind::Constant:
            return m.f;
        case FailureModel::Kind::Uniform: {
            CounterRng rng(seed, CounterRng::stream_tag(stream::kLinkFailure, u, v));
            return m.lo + (m.hi - m.lo) * rng.next_double();
        }
        case FailureModel::Kind::DistanceLinear:
            return gate_range > 0 ? m.scale * distance / gate_range : 0.0;
    }
    return 0.0;
}

}  // namespace

void validate_params(const DeploymentParams& p) {
    if (p.node_count < 2) throw ConfigError("node_count must be >= 2");
    if (!(p.h_fraction >= 0.0 && p.h_fraction <= 1.0))
        throw ConfigError("h_fraction must be in [0, 1]");
    if (!(p.area_w > 0 && p.area_h > 0)) throw ConfigError("area dimensions must be positive");
    if (!(p.range_l > 0 && p.range_h > 0)) throw ConfigError("ranges must be positive");
    if (p.pool_size == 0) throw ConfigError("pool_size must be positive");
    if (p.k1 == 0 || p.k2 == 0) throw ConfigError("ring sizes must be positive");
    if (p.k1 > p.k2) throw ConfigError("k1 must be <= k2");
    if (p.k2 > p.pool_size) throw ConfigError("k2 must be <= pool_size");
    validate_failure_model(p.failure);
}

std::vector<KeyId> shared_keys(const std::vector<KeyId>& a, const std::vector<KeyId>& b) {
    std::vector<KeyId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

NetworkGraph generate_deployment(const DeploymentParams& p) {
    validate_params(p);
    NetworkGraph g;
    g.area_w = p.area_w;
    g.area_h = p.area_h;
    g.pool_size = p.pool_size;
    g.seed = p.seed;
    g.sink = 0;
    g.nodes.resize(p.node_count);

    std::uint32_t h_count = static_cast<std::uint32_t>(std::lround(p.h_fraction * p.node_count));
    h_count = std::min(h_count, p.node_count - 1);

    Point sink_pos = p.sink_position.value_or(Point{p.area_w / 2, p.area_h / 2});

    for (NodeId id = 0; id < p.node_count; ++id) {
        NodeSpec& n = g.nodes[id];
        n.id = id;
        if (id == 0) {
            n.tier = Tier::Sink;
            n.pos = sink_pos;
        } else {
            n.tier = id <= h_count ? Tier::H : Tier::L;
            CounterRng pos_rng(p.seed, CounterRng::stream_tag(stream::kPositions, id));
            n.pos = {pos_rng.next_double() * p.area_w, pos_rng.next_double() * p.area_h};
        }
        n.range = n.tier == Tier::L ? p.range_l : p.range_h;
        std::uint32_t ring_size = n.tier == Tier::L ? p.k1 : p.k2;
        CounterRng ring_rng(p.seed, CounterRng::stream_tag(stream::kRing, id));
        n.ring = ring_rng.sample_subset(p.pool_size, ring_size);
    }

    build_links(g, p.failure);
    return g;
}

void build_links(NetworkGraph& g, const FailureModel& model) {
    validate_failure_model(model);
    g.links.clear();
    for (NodeId u = 0; u < g.nodes.size(); ++u) {
        for (NodeId v = u + 1; v < g.nodes.size(); ++v) {
            double d = dist(g.nodes[u].pos, g.nodes[v].pos);
            double gate = std::min(g.nodes[u].range, g.nodes[v].range);
            if (d > gate) continue;
            std::vector<KeyId> shared = shared_keys(g.nodes[u].ring, g.nodes[v].ring);
            if (shared.empty()) continue;
            LinkInfo link;
            link.u = u;
            link.v = v;
            link.shared = std::move(shared);
            link.distance = d;
            link.failure = link_failure(model, u, v, d, gate, g.seed);
            if (!(link.failure >= 0.0 && link.failure < 1.0))
                throw ConfigError("failure model produced f outside [0, 1)");
            g.links.push_back(std::move(link));
        }
    }
    g.adjacency.assign(g.nodes.size(), {});
    for (std::size_t i = 0; i < g.links.size(); ++i) {
        const LinkInfo& l = g.links[i];
        g.adjacency[l.u].push_back({l.v, i});
        g.adjacency[l.v].push_back({l.u, i});
    }
    for (auto& adj : g.adjacency)
        std::sort(adj.begin(), adj.end());
}

const LinkInfo* NetworkGraph::link_between(NodeId a, NodeId b) const {
    if (a >= adjacency.size()) return nullptr;
    for (const auto& [nb, idx] : adjacency[a])
        if (nb == b) return &links[idx];
    return nullptr;
}

bool NetworkGraph::fully_connected() const {
    if (nodes.empty()) return false;
    std::vector<char> seen(nodes.size(), 0);
    std::deque<NodeId> queue{sink};
    seen[sink] = 1;
    std::size_t count = 1;
    while (!queue.empty()) {
        NodeId u = queue.front();
        queue.pop_front();
        for (const auto& [nb, idx] : adjacency[u]) {
            (void)idx;
            if (!seen[nb]) {
                seen[nb] = 1;
                ++count;
                queue.push_back(nb);
            }
        }
    }
    return count == nodes.size();
}

std::string graph_to_json(const NetworkGraph& g) {
    nlohmann::ordered_json j;
    j["area"] = {{"w", g.area_w}, {"h", g.area_h}};
    j["pool_size"] = g.pool_size;
    j["seed"] = g.seed;
    j["sink"] = g.sink;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const NodeSpec& n : g.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = n.id;
        nj["tier"] = tier_name(n.tier);
        nj["x"] = n.pos.x;
        nj["y"] = n.pos.y;
        nj["range"] = n.range;
        nj["ring"] = n.ring;
        j["nodes"].push_back(std::move(nj));
    }
    j["links"] = nlohmann::ordered_json::array();
    for (const LinkInfo& l : g.links) {
        nlohmann::ordered_json lj;
        lj["u"] = l.u;
        lj["v"] = l.v;
        lj["k"] = l.key_count();
        lj["shared"] = l.shared;
        lj["distance"] = l.distance;
        lj["f"] = l.failure;
        j["links"].push_back(std::move(lj));
    }
    return j.dump(2) + "\n";
}

std::string graph_to_dot(const NetworkGraph& g) {
    std::ostringstream os;
    os << "graph deployment {\n  node [shape=circle fontsize=10];\n";
    for (const NodeSpec& n : g.nodes) {
        os << "  n" << n.id << " [label=\"" << n.id << "\""
           << (n.tier == Tier::Sink ? " shape=doublecircle" : "") << " pos=\"" << n.pos.x << ","
           << n.pos.y << "!\"];\n";
    }
    for (const LinkInfo& l : g.links)
        os << "  n" << l.u << " -- n" << l.v << " [label=\"k=" << l.key_count() << "\"];\n";
    os << "}\n";
    return os.str();
}

std::uint64_t graph_digest(const NetworkGraph& g) {
    Digest64 d;
    d.str(graph_to_json(g));
    return d.value();
}

}  // namespace eakr
