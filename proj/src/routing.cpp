#include "eakr/routing.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

#include "eakr/digest.hpp"

namespace eakr {

namespace {

// Link-hop distance from the sink (plain BFS over the secure-link graph);
// unreachable nodes get SIZE_MAX. Adjacent nodes differ by at most one, so
// "strictly smaller depth" layers the forwarding relation into a DAG with a
// unique EAK fixpoint, independent of update order.
std::vector<std::size_t> sink_hop_depths(const NetworkGraph& graph) {
    std::vector<std::size_t> depth(graph.node_count(), SIZE_MAX);
    std::deque<NodeId> queue{graph.sink};
    depth[graph.sink] = 0;
    while (!queue.empty()) {
        const NodeId x = queue.front();
        queue.pop_front();
        for (const auto& [v, link_index] : graph.adjacency[x]) {
            (void)link_index;
            if (depth[v] != SIZE_MAX) continue;
            depth[v] = depth[x] + 1;
            queue.push_back(v);
        }
    }
    return depth;
}

RelayCandidate make_candidate(const NetworkGraph& graph, const RoutingState& state, NodeId u,
                              NodeId v, std::size_t link_index) {
    const LinkInfo& link = graph.links[link_index];
    (void)u;
    return {v, state.records[v].eak, link.key_count(), link.failure, v == graph.sink};
}

bool same_nhlist(const NhList& a, const NhList& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        if (a.entries[i].node != b.entries[i].node) return false;
    return true;
}

// One relaxation sweep over all non-sink nodes against the live table, in
// (current EAK descending, id ascending) order — the same priority greedy
// finalization uses, which keeps the two modes aligned on ties. Returns the
// nodes whose record or list changed.
std::vector<NodeId> relaxation_sweep(const NetworkGraph& graph, RoutingState& state,
                                     double epsilon) {
    std::vector<NodeId> order;
    order.reserve(graph.node_count());
    for (NodeId u = 0; u < graph.node_count(); ++u)
        if (u != graph.sink) order.push_back(u);
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        if (state.records[a].eak != state.records[b].eak)
            return state.records[a].eak > state.records[b].eak;
        return a < b;
    });

    std::vector<NodeId> changed;
    for (NodeId u : order) {
        const auto candidates = admissible_candidates(graph, state, u);
        UpdateResult res = update_eak(u, candidates);
        const bool list_changed = !same_nhlist(res.nhlist, state.nhlists[u]);
        const bool value_changed = std::abs(res.record.eak - state.records[u].eak) > epsilon;
        if (list_changed || value_changed) {
            state.records[u] = res.record;
            state.nhlists[u] = std::move(res.nhlist);
            changed.push_back(u);
        }
    }
    return changed;
}

}  // namespace

std::vector<RelayCandidate> admissible_candidates(const NetworkGraph& graph,
                                                  const RoutingState& state, NodeId u) {
    const auto depth = sink_hop_depths(graph);
    std::vector<RelayCandidate> out;
    for (const auto& [v, link_index] : graph.adjacency[u]) {
        if (v == graph.sink) {
            out.push_back(make_candidate(graph, state, u, v, link_index));
            continue;
        }
        if (depth[v] >= depth[u]) continue;
        if (state.nhlists[v].empty() || !(state.records[v].eak > 0)) continue;
        out.push_back(make_candidate(graph, state, u, v, link_index));
    }
    return out;
}

RoutingState compute_eak_to_sink(const NetworkGraph& graph, FixpointMode mode,
                                 const FixpointOptions& options) {
    RoutingState state;
    state.mode = mode;
    state.records.resize(graph.node_count());
    state.nhlists.resize(graph.node_count());
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        state.records[u].node = u;
        state.nhlists[u].owner = u;
    }

    if (mode == FixpointMode::GreedyFinalize) {
        // Dijkstra-style pass: the highest-EAK unfinalized node is finalized
        // and its unfinalized neighbors recompute against finalized candidates.
        std::vector<char> finalized(graph.node_count(), 0);
        finalized[graph.sink] = 1;

        auto relax = [&](NodeId u) {
            auto candidates = admissible_candidates(graph, state, u);
            std::erase_if(candidates,
                          [&](const RelayCandidate& c) { return !finalized[c.node]; });
            UpdateResult res = update_eak(u, candidates);
            state.records[u] = res.record;
            state.nhlists[u] = std::move(res.nhlist);
        };

        for (const auto& [v, link_index] : graph.adjacency[graph.sink]) {
            (void)link_index;
            relax(v);
        }
        for (std::size_t step = 1; step < graph.node_count(); ++step) {
            NodeId pick = kNoNode;
            for (NodeId u = 0; u < graph.node_count(); ++u) {
                if (finalized[u]) continue;
                if (pick == kNoNode || state.records[u].eak > state.records[pick].eak)
                    pick = u;
            }
            if (pick == kNoNode) break;
            finalized[pick] = 1;
            for (const auto& [v, link_index] : graph.adjacency[pick]) {
                (void)link_index;
                if (!finalized[v]) relax(v);
            }
        }
        state.rounds = 1;
    }

    // Relaxation sweeps to the fixpoint (the published procedure's outer
    // "repeat until no change"); the iterative mode starts here from zero.
    const std::size_t cap =
        options.max_rounds > 0 ? options.max_rounds : std::max<std::size_t>(graph.node_count(), 2);
    std::vector<NodeId> last_changed;
    bool stable = false;
    for (std::size_t sweep = 0; sweep < cap; ++sweep) {
        last_changed = relaxation_sweep(graph, state, options.epsilon);
        ++state.rounds;
        if (last_changed.empty()) {
            stable = true;
            break;
        }
    }
    state.converged = stable;
    if (!stable) state.oscillating = last_changed;
    return state;
}

DispatchResult dispatch_nhlists(const NetworkGraph& graph, RoutingState& state) {
    DispatchResult out;
    state.selectors.assign(graph.node_count(), {});
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        for (const NhEntry& e : state.nhlists[u].entries) {
            out.notifications.push_back({u, e.node, e.priority});
            state.selectors[e.node].push_back(u);
        }
    }
    for (auto& sel : state.selectors) std::sort(sel.begin(), sel.end());
    out.message_count = out.notifications.size();
    return out;
}

std::vector<NodeId> primary_chain(const RoutingState& state, NodeId u, NodeId sink) {
    std::vector<NodeId> chain{u};
    NodeId cur = u;
    while (cur != sink) {
        if (state.nhlists[cur].empty())
            throw UnreachableError("node " + std::to_string(cur) + " has no route to the sink");
        cur = state.nhlists[cur].entries.front().node;
        chain.push_back(cur);
        if (chain.size() > state.nhlists.size())
            throw ConvergenceError("primary relay chain does not terminate");
    }
    return chain;
}

SinkTable collect_topology_at_sink(const NetworkGraph& graph, const RoutingState& state) {
    SinkTable table;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        const bool reachable = u == graph.sink || !state.nhlists[u].empty();
        if (!reachable) {
            table.unreachable.push_back(u);
            continue;
        }
        TopologyRecord rec;
        rec.node = u;
        rec.selectors = u < state.selectors.size() ? state.selectors[u] : std::vector<NodeId>{};
        for (const NhEntry& e : state.nhlists[u].entries) rec.relays.push_back(e.node);
        table.records.push_back(std::move(rec));

        if (u != graph.sink) {
            // Without aggregation the record rides its primary chain alone:
            // one unicast per hop. With aggregation every holder forwards all
            // co-resident records in one message, so each non-sink reachable
            // node transmits exactly once.
            table.unicasts_without_aggregation += primary_chain(state, u, graph.sink).size() - 1;
            table.unicasts_with_aggregation += 1;
        }
    }
    return table;
}

RouteSet construct_query_routes(const NetworkGraph& graph, const SinkTable& table,
                                NodeId destination, RoutePolicy policy, std::size_t path_cap) {
    if (destination >= graph.node_count())
        throw ConfigError("destination id out of range");
    RouteSet rs;
    rs.destination = destination;
    if (destination == graph.sink) return rs;

    std::vector<const TopologyRecord*> by_id(graph.node_count(), nullptr);
    for (const TopologyRecord& rec : table.records) by_id[rec.node] = &rec;
    if (by_id[destination] == nullptr || by_id[destination]->relays.empty())
        throw UnreachableError("destination " + std::to_string(destination) +
                               " has no route to the sink");

    // Chained (frontier, forwarder-union) pairs.
    std::vector<NodeId> frontier{destination};
    while (!(frontier.size() == 1 && frontier[0] == graph.sink)) {
        std::set<NodeId> next;
        for (NodeId x : frontier) {
            if (x == graph.sink) continue;
            for (NodeId r : by_id[x]->relays) next.insert(r);
        }
        std::vector<NodeId> next_vec(next.begin(), next.end());
        rs.hops.push_back({frontier, next_vec});
        frontier = std::move(next_vec);
        if (rs.hops.size() > graph.node_count()) break;  // defensive; relation is a DAG
    }

    // Expand simple paths destination -> sink along forwarder lists.
    std::vector<NodeId> path{destination};
    std::vector<char> on_path(graph.node_count(), 0);
    on_path[destination] = 1;
    auto dfs = [&](auto&& self, NodeId u) -> void {
        if (rs.paths.size() >= path_cap) {
            rs.truncated = true;
            return;
        }
        if (u == graph.sink) {
            rs.paths.push_back(path);
            return;
        }
        for (NodeId r : by_id[u]->relays) {
            if (on_path[r]) continue;  // cycle guard; cannot fire on a DAG
            path.push_back(r);
            on_path[r] = 1;
            self(self, r);
            on_path[r] = 0;
            path.pop_back();
        }
    };
    dfs(dfs, destination);
    if (rs.paths.empty())
        throw UnreachableError("destination " + std::to_string(destination) +
                               " has no expandable path to the sink");

    auto min_link_keys = [&](const std::vector<NodeId>& p) {
        int weakest = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            const LinkInfo* link = graph.link_between(p[i], p[i + 1]);
            weakest = std::min(weakest, link ? link->key_count() : 0);
        }
        return weakest;
    };

    rs.chosen = 0;
    if (policy != RoutePolicy::AllPaths) {
        for (std::size_t i = 1; i < rs.paths.size(); ++i) {
            const auto& cur = rs.paths[i];
            const auto& best = rs.paths[rs.chosen];
            bool better = false;
            if (policy == RoutePolicy::MinHop) {
                better = cur.size() != best.size() ? cur.size() < best.size() : cur < best;
            } else {
                const int ck = min_link_keys(cur);
                const int bk = min_link_keys(best);
                if (ck != bk)
                    better = ck > bk;
                else if (cur.size() != best.size())
                    better = cur.size() < best.size();
                else
                    better = cur < best;
            }
            if (better) rs.chosen = i;
        }
    }
    return rs;
}

DeliveryTrace forward_query_and_reply(const NetworkGraph& graph, const RoutingState& state,
                                      const RouteSet& route, ProtocolEngine& engine,
                                      const DeliveryOptions& options) {
    DeliveryTrace trace;
    if (route.destination == graph.sink) {
        trace.delivered = true;
        return trace;
    }
    if (route.paths.empty()) return trace;

    // Query: sink -> destination over the reversed chosen path; hop carrier x
    // seals for its backward-relay group, which contains the next node (a
    // selector of x).
    std::vector<NodeId> query_path(route.paths[route.chosen].rbegin(),
                                   route.paths[route.chosen].rend());
    Material128 packet{0x517565727944u, route.destination};
    for (std::size_t i = 0; i + 1 < query_path.size(); ++i) {
        const NodeId from = query_path[i];
        const NodeId to = query_path[i + 1];
        const GroupKeyId gid{"br", from};
        HopTrace hop{from, to, "br", from, true};
        if (!engine.group_key(gid) || !engine.node_holds(to, gid)) {
            hop.integrity_ok = false;
            trace.query_hops.push_back(hop);
            trace.failed_hop = i;
            return trace;
        }
        Envelope env = engine.seal_app_envelope(from, to, gid, packet);
        if (options.tamper_query_hop && *options.tamper_query_hop == i) env.payload.lo ^= 1;
        if (engine.open_app_envelope(env) != DeliveryStatus::Ok) {
            hop.integrity_ok = false;
            trace.query_hops.push_back(hop);
            trace.failed_hop = i;
            return trace;
        }
        trace.query_hops.push_back(hop);
    }

    // Reply: destination -> sink along the primary relay chain; hop carrier x
    // seals for its forward-relay group, which contains the next relay.
    const std::vector<NodeId> reply_path = primary_chain(state, route.destination, graph.sink);
    for (std::size_t i = 0; i + 1 < reply_path.size(); ++i) {
        const NodeId from = reply_path[i];
        const NodeId to = reply_path[i + 1];
        const GroupKeyId gid{"fr", from};
        HopTrace hop{from, to, "fr", from, true};
        if (!engine.group_key(gid) || !engine.node_holds(to, gid)) {
            hop.integrity_ok = false;
            trace.reply_hops.push_back(hop);
            trace.failed_hop = trace.query_hops.size() + i;
            return trace;
        }
        Envelope env = engine.seal_app_envelope(from, to, gid, packet);
        if (engine.open_app_envelope(env) != DeliveryStatus::Ok) {
            hop.integrity_ok = false;
            trace.reply_hops.push_back(hop);
            trace.failed_hop = trace.query_hops.size() + i;
            return trace;
        }
        trace.reply_hops.push_back(hop);
    }
    trace.delivered = true;
    return trace;
}

}  // namespace eakr
