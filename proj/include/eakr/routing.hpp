// Network-wide EAK fixpoint, forwarder-list dispatch, topology collection at
// the sink, and query/reply route construction.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eakr/eak.hpp"
#include "eakr/keyproto.hpp"
#include "eakr/netmodel.hpp"

namespace eakr {

enum class FixpointMode { GreedyFinalize, IterativeRelax };

struct FixpointOptions {
    double epsilon = 1e-9;
    // Sweep cap; 0 means |V|.
    std::size_t max_rounds = 0;
};

struct RoutingState {
    FixpointMode mode = FixpointMode::GreedyFinalize;
    std::vector<EakRecord> records;      // indexed by node id
    std::vector<NhList> nhlists;         // indexed by node id
    std::vector<std::vector<NodeId>> selectors;  // inverse relation, filled by dispatch
    std::size_t rounds = 0;
    bool converged = true;
    std::vector<NodeId> oscillating;  // non-empty when the round cap bound

    bool reachable(NodeId u) const { return u < nhlists.size() && !nhlists[u].empty(); }
};

// Candidate filter shared by both modes: a neighbor v of u can relay for u iff
// it is the sink, or it is strictly closer to the sink in link hops and has a
// nonempty forwarder list. Hop layering keeps the forwarding relation a DAG
// and makes the EAK fixpoint unique regardless of update order.
std::vector<RelayCandidate> admissible_candidates(const NetworkGraph& graph,
                                                  const RoutingState& state, NodeId u);

// Computes per-node EAK records and forwarder lists.
//   GreedyFinalize: Dijkstra-style pass (finalize the max-EAK node, relax its
//   unfinalized neighbors against finalized candidates only), then deterministic
//   relaxation sweeps until stable.
//   IterativeRelax: the same relaxation sweeps started from the zero table.
// Sweeps update nodes in (current EAK descending, id ascending) order against
// the live table. If the sweep cap binds, converged=false and `oscillating`
// lists the nodes still changing; callers decide whether that is fatal.
RoutingState compute_eak_to_sink(const NetworkGraph& graph, FixpointMode mode,
                                 const FixpointOptions& options = {});

struct DispatchNotification {
    NodeId selector = 0;  // node announcing its forwarder list
    NodeId relay = 0;     // list member being notified
    int priority = 1;
};

struct DispatchResult {
    std::vector<DispatchNotification> notifications;
    std::size_t message_count = 0;  // one unicast per (selector, relay) pair
};

// Sends each node's forwarder list to its members and fills state.selectors
// with the exact inverse relation.
DispatchResult dispatch_nhlists(const NetworkGraph& graph, RoutingState& state);

struct TopologyRecord {
    NodeId node = 0;
    std::vector<NodeId> selectors;
    std::vector<NodeId> relays;
};

struct SinkTable {
    std::vector<TopologyRecord> records;       // reachable nodes, by id
    std::vector<NodeId> unreachable;           // nodes with empty forwarder lists
    std::size_t unicasts_without_aggregation = 0;  // every record travels alone
    std::size_t unicasts_with_aggregation = 0;     // co-resident records merged
};

// Every reachable node's (selectors, relays) record travels to the sink along
// its highest-priority relay chain; a relay merges everything it holds into one
// upstream message. Returns the table plus both unicast counts.
SinkTable collect_topology_at_sink(const NetworkGraph& graph, const RoutingState& state);

enum class RoutePolicy { MinHop, MaxMinKeys, AllPaths };

struct RouteSet {
    NodeId destination = 0;
    // Chained (frontier, forwarder-union) pairs from the destination to the sink.
    std::vector<std::pair<std::vector<NodeId>, std::vector<NodeId>>> hops;
    // Expanded simple paths, destination first, sink last.
    std::vector<std::vector<NodeId>> paths;
    std::size_t chosen = 0;  // index into paths per policy (AllPaths: 0)
    bool truncated = false;  // path cap hit during expansion
};

// Builds the route set for a destination from the sink table. destination ==
// sink yields an empty route set. Unreachable destinations throw
// UnreachableError. Expansion enumerates simple paths along forwarder lists,
// capped at `path_cap`; MinHop picks the shortest path (tie: lexicographic ids),
// MaxMinKeys maximizes the weakest link's shared-key count (tie: fewer hops,
// then lexicographic ids).
RouteSet construct_query_routes(const NetworkGraph& graph, const SinkTable& table,
                                NodeId destination, RoutePolicy policy,
                                std::size_t path_cap = 128);

struct HopTrace {
    NodeId from = 0;
    NodeId to = 0;
    // Group key protecting the hop: "fr" (forward-relay group of `group_owner`)
    // for replies, "br" (backward-relay group) for queries.
    std::string group_kind;
    NodeId group_owner = 0;
    bool integrity_ok = true;
};

struct DeliveryTrace {
    bool delivered = false;
    std::size_t failed_hop = 0;  // index into hops when !delivered
    std::vector<HopTrace> query_hops;  // sink -> destination
    std::vector<HopTrace> reply_hops;  // destination -> sink (primary chain)
};

struct DeliveryOptions {
    // Flip a payload bit before delivering this query hop (integrity test).
    std::optional<std::size_t> tamper_query_hop;
};

// Walks the chosen route: the query travels sink->destination along the
// reversed path, each hop sealed under the carrying node's backward-relay
// group; the reply returns destination->sink along the replier's primary relay
// chain, each hop sealed under the forward-relay group. Every hop is a real
// sealed envelope run through the engine's replay/integrity gate; the first
// failing hop aborts the walk.
DeliveryTrace forward_query_and_reply(const NetworkGraph& graph, const RoutingState& state,
                                      const RouteSet& route, ProtocolEngine& engine,
                                      const DeliveryOptions& options = {});

// Highest-priority relay chain from u to the sink (u first). Throws
// UnreachableError when u has no forwarder list.
std::vector<NodeId> primary_chain(const RoutingState& state, NodeId u, NodeId sink);

}  // namespace eakr
