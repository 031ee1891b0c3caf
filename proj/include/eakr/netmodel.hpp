// Network model: deployment generation, key ring assignment, and the secure
// link relation (in radio range AND at least one pre-distributed key shared).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eakr/types.hpp"

namespace eakr {

struct Point {
    double x = 0;
    double y = 0;
};

struct NodeSpec {
    NodeId id = 0;
    Tier tier = Tier::L;
    Point pos;
    double range = 0;
    std::vector<KeyId> ring;  // sorted, unique, subset of the pool
};

struct LinkInfo {
    NodeId u = 0;  // u < v
    NodeId v = 0;
    std::vector<KeyId> shared;  // sorted intersection of the two rings
    double distance = 0;
    double failure = 0;  // per-transmission failure probability, in [0, 1)
    int key_count() const { return static_cast<int>(shared.size()); }
};

struct FailureModel {
    enum class Kind { Constant, Uniform, DistanceLinear };
    Kind kind = Kind::Constant;
    double f = 0.5;       // Constant
    double lo = 0.0;      // Uniform
    double hi = 0.5;      // Uniform
    double scale = 0.5;   // DistanceLinear: f = scale * distance / effective range
};

struct DeploymentParams {
    std::uint32_t node_count = 100;
    double h_fraction = 0.15;
    double area_w = 500;
    double area_h = 500;
    double range_l = 100;
    double range_h = 150;
    std::uint32_t pool_size = 1000;
    std::uint32_t k1 = 30;
    std::uint32_t k2 = 60;
    FailureModel failure;
    std::optional<Point> sink_position;  // default: area center
    std::uint64_t seed = 1;
};

struct NetworkGraph {
    double area_w = 0;
    double area_h = 0;
    std::uint32_t pool_size = 0;
    std::uint64_t seed = 0;
    NodeId sink = 0;
    std::vector<NodeSpec> nodes;  // indexed by id
    std::vector<LinkInfo> links;

    // adjacency[u] lists (neighbor, index into links), sorted by neighbor id.
    std::vector<std::vector<std::pair<NodeId, std::size_t>>> adjacency;

    const LinkInfo* link_between(NodeId a, NodeId b) const;
    std::size_t node_count() const { return nodes.size(); }
    bool fully_connected() const;  // every node reaches the sink over links
};

// Sink id 0 at sink_position; ids 1..H are H-tier (count = round(h_fraction*n)),
// the rest L-tier; positions uniform over the area; rings of size k1 (L) or
// k2 (H and sink) drawn without replacement from the pool. Fully determined by
// params.seed.
NetworkGraph generate_deployment(const DeploymentParams& params);

// Sorted intersection of two rings.
std::vector<KeyId> shared_keys(const std::vector<KeyId>& a, const std::vector<KeyId>& b);

// Recompute the link set of a graph whose nodes are already populated:
// a link exists iff distance <= min(range_u, range_v) and the rings intersect.
// Failure probabilities are drawn per the model (seeded per link, order free).
void build_links(NetworkGraph& graph, const FailureModel& model);

// Canonical JSON (stable field order) and Graphviz DOT exports.
std::string graph_to_json(const NetworkGraph& graph);
std::string graph_to_dot(const NetworkGraph& graph);
std::uint64_t graph_digest(const NetworkGraph& graph);

void validate_params(const DeploymentParams& params);  // throws ConfigError

}  // namespace eakr
