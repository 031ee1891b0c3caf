#include "eakr/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "eakr/digest.hpp"
#include "eakr/simharness.hpp"
#include "json.hpp"

namespace eakr {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

void check_keys(const ojson& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed) {
            if (it.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) fail(path, "unknown field \"" + it.key() + "\"");
    }
}

double as_number(const ojson& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

std::uint64_t as_uint(const ojson& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    fail(path, "expected a non-negative integer");
}

std::string as_string(const ojson& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

const ojson& as_object(const ojson& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    return v;
}

const ojson& as_array(const ojson& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
}

FailureModel parse_failure_model(const ojson& v, const std::string& path) {
    const ojson& obj = as_object(v, path);
    check_keys(obj, path, {"kind", "f", "lo", "hi", "scale"});
    if (!obj.contains("kind")) fail(path, "missing \"kind\"");
    const std::string kind = as_string(obj.at("kind"), path + ".kind");
    FailureModel model;
    if (kind == "constant") {
        model.kind = FailureModel::Kind::Constant;
        check_keys(obj, path, {"kind", "f"});
        if (obj.contains("f")) model.f = as_number(obj.at("f"), path + ".f");
    } else if (kind == "uniform") {
        model.kind = FailureModel::Kind::Uniform;
        check_keys(obj, path, {"kind", "lo", "hi"});
        if (obj.contains("lo")) model.lo = as_number(obj.at("lo"), path + ".lo");
        if (obj.contains("hi")) model.hi = as_number(obj.at("hi"), path + ".hi");
    } else if (kind == "distance_linear") {
        model.kind = FailureModel::Kind::DistanceLinear;
        check_keys(obj, path, {"kind", "scale"});
        if (obj.contains("scale")) model.scale = as_number(obj.at("scale"), path + ".scale");
    } else {
        fail(path + ".kind", "expected constant | uniform | distance_linear");
    }
    return model;
}

Tier parse_tier(const std::string& s, const std::string& path) {
    if (s == "L") return Tier::L;
    if (s == "H") return Tier::H;
    if (s == "sink") return Tier::Sink;
    fail(path, "expected L | H | sink");
}

ExplicitNode parse_explicit_node(const ojson& v, const std::string& path) {
    const ojson& obj = as_object(v, path);
    check_keys(obj, path, {"id", "tier", "x", "y", "range", "ring"});
    for (const char* key : {"id", "tier", "x", "y", "range", "ring"}) {
        if (!obj.contains(key)) fail(path, std::string("missing \"") + key + "\"");
    }
    ExplicitNode node;
    node.id = static_cast<NodeId>(as_uint(obj.at("id"), path + ".id"));
    node.tier = parse_tier(as_string(obj.at("tier"), path + ".tier"), path + ".tier");
    node.pos = {as_number(obj.at("x"), path + ".x"), as_number(obj.at("y"), path + ".y")};
    node.range = as_number(obj.at("range"), path + ".range");
    const ojson& ring = as_array(obj.at("ring"), path + ".ring");
    for (std::size_t i = 0; i < ring.size(); ++i) {
        node.ring.push_back(static_cast<KeyId>(
            as_uint(ring.at(i), path + ".ring[" + std::to_string(i) + "]")));
    }
    std::sort(node.ring.begin(), node.ring.end());
    if (std::adjacent_find(node.ring.begin(), node.ring.end()) != node.ring.end()) {
        fail(path + ".ring", "duplicate key id");
    }
    return node;
}

const char* mode_name(FixpointMode m) {
    return m == FixpointMode::GreedyFinalize ? "greedy" : "iterative";
}

const char* policy_name(RoutePolicy p) {
    switch (p) {
        case RoutePolicy::MinHop: return "min_hop";
        case RoutePolicy::MaxMinKeys: return "max_min_keys";
        case RoutePolicy::AllPaths: return "all_paths";
    }
    return "?";
}

const char* outcome_name(RunOutcome o) {
    switch (o) {
        case RunOutcome::Established: return "established";
        case RunOutcome::NoChannel: return "no_channel";
        case RunOutcome::IntegrityFailure: return "integrity_failure";
        case RunOutcome::MissingGroupKey: return "missing_group_key";
    }
    return "?";
}

std::string group_label(const GroupKeyId& id) {
    return id.kind + ":" + std::to_string(id.owner);
}

std::string material_digest(Material128 m) {
    return Digest64().str("material").u64(m.hi).u64(m.lo).hex();
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

ojson eak_report(const NetworkGraph& graph, const RoutingState& state,
                 const DispatchResult& dispatch, const SinkTable& table) {
    ojson doc;
    doc["mode"] = mode_name(state.mode);
    doc["rounds"] = state.rounds;
    doc["converged"] = state.converged;
    ojson nodes = ojson::array();
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        ojson n;
        n["id"] = u;
        n["eak"] = state.records[u].eak;
        n["last_hop"] = state.records[u].last_hop;
        n["relay"] = state.records[u].relay;
        ojson list = ojson::array();
        for (const NhEntry& e : state.nhlists[u].entries) {
            list.push_back(ojson{{"node", e.node},
                                 {"priority", e.priority},
                                 {"eak_at_selection", e.eak_at_selection}});
        }
        n["nhlist"] = std::move(list);
        n["selectors"] = state.selectors[u];
        nodes.push_back(std::move(n));
    }
    doc["nodes"] = std::move(nodes);
    doc["unreachable"] = table.unreachable;
    doc["dispatch_messages"] = dispatch.message_count;
    doc["topology_collection"] =
        ojson{{"unicasts_without_aggregation", table.unicasts_without_aggregation},
              {"unicasts_with_aggregation", table.unicasts_with_aggregation}};
    return doc;
}

ojson transcripts_report(const ProtocolEngine& engine) {
    ojson runs = ojson::array();
    for (const ProtocolTranscript& t : engine.transcripts()) {
        ojson run;
        run["key"] = group_label(t.key_id);
        run["participants"] = t.participants;
        run["outcome"] = outcome_name(t.outcome);
        if (!t.failure_reason.empty()) run["failure_reason"] = t.failure_reason;
        ojson steps = ojson::array();
        for (const TranscriptStep& s : t.steps) {
            const Envelope& e = s.envelope;
            ojson step;
            step["step"] = s.step;
            step["sender"] = e.sender;
            step["receiver"] = e.receiver;
            step["mode"] = e.mode == SealMode::Pairwise ? "pairwise" : "group";
            if (e.mode == SealMode::Pairwise) {
                step["required_keys"] = e.required_keys.size();
            } else if (e.group) {
                step["group"] = group_label(*e.group);
            }
            step["kind"] = payload_kind_name(e.payload_kind);
            step["counter"] = e.counter;
            step["payload_digest"] = Digest64().u64(e.payload.hi).u64(e.payload.lo).hex();
            steps.push_back(std::move(step));
        }
        run["steps"] = std::move(steps);
        runs.push_back(std::move(run));
    }

    ojson keys = ojson::array();
    for (const ProtocolTranscript& t : engine.transcripts()) {
        if (t.outcome != RunOutcome::Established) continue;
        const auto gk = engine.group_key(t.key_id);
        if (!gk) continue;
        keys.push_back(ojson{{"key", group_label(gk->id)},
                             {"members", gk->members},
                             {"material_digest", material_digest(gk->material)}});
    }
    ojson doc;
    doc["protocol_runs"] = std::move(runs);
    doc["group_keys"] = std::move(keys);
    return doc;
}

ojson hop_json(const HopTrace& hop) {
    return ojson{{"from", hop.from},
                 {"to", hop.to},
                 {"group", hop.group_kind + ":" + std::to_string(hop.group_owner)},
                 {"integrity_ok", hop.integrity_ok}};
}

ojson routes_report(const NetworkGraph& graph, const RouteSet& route, RoutePolicy policy,
                    const DeliveryTrace& trace, const RouteDeliveryResult& sim) {
    ojson doc;
    doc["destination"] = route.destination;
    doc["policy"] = policy_name(policy);
    ojson hops = ojson::array();
    for (const auto& [frontier, forwarders] : route.hops) {
        hops.push_back(ojson{{"frontier", frontier}, {"forwarders", forwarders}});
    }
    doc["hops"] = std::move(hops);
    doc["paths"] = route.paths;
    doc["chosen"] = route.chosen;
    doc["truncated"] = route.truncated;

    if (!route.paths.empty()) {
        const std::vector<NodeId>& path = route.paths[route.chosen];
        ojson links = ojson::array();
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            const LinkInfo* link = graph.link_between(path[i], path[i + 1]);
            links.push_back(ojson{{"u", path[i]},
                                  {"v", path[i + 1]},
                                  {"shared_keys", link ? link->key_count() : 0},
                                  {"failure", link ? link->failure : 1.0}});
        }
        doc["chosen_links"] = std::move(links);
    }

    ojson delivery;
    delivery["delivered"] = trace.delivered;
    if (!trace.delivered) delivery["failed_hop"] = trace.failed_hop;
    ojson q = ojson::array();
    for (const HopTrace& hop : trace.query_hops) q.push_back(hop_json(hop));
    ojson r = ojson::array();
    for (const HopTrace& hop : trace.reply_hops) r.push_back(hop_json(hop));
    delivery["query_hops"] = std::move(q);
    delivery["reply_hops"] = std::move(r);
    doc["delivery"] = std::move(delivery);

    if (sim.trials > 0) {
        doc["transmissions"] = ojson{{"analytic", sim.analytic_mean},
                                     {"empirical", sim.empirical_mean},
                                     {"stderr", sim.std_error},
                                     {"trials", sim.trials},
                                     {"per_hop_analytic", sim.per_hop_analytic}};
    }
    return doc;
}

ojson mc_report(const std::vector<McCell>& cells, std::uint64_t seed, std::uint64_t trials) {
    ojson rows = ojson::array();
    for (const McCell& cell : cells) {
        rows.push_back(ojson{{"semantics", semantics_name(cell.semantics)},
                             {"n", cell.n},
                             {"f", cell.f},
                             {"analytic", cell.result.analytic_mean},
                             {"empirical", cell.result.empirical_mean},
                             {"stderr", cell.result.std_error}});
    }
    ojson doc;
    doc["seed"] = seed;
    doc["trials"] = trials;
    doc["cells"] = std::move(rows);
    return doc;
}

ojson adversary_report(const NetworkGraph& graph, const ProtocolEngine& engine,
                       const std::vector<std::vector<NodeId>>& sets) {
    // Deterministic target order: every established key, fr groups first.
    std::vector<GroupKeyId> targets;
    for (const char* kind : {"fr", "br"}) {
        for (NodeId u = 0; u < graph.node_count(); ++u) {
            const GroupKeyId id{kind, u};
            if (engine.group_key(id)) targets.push_back(id);
        }
    }
    ojson findings = ojson::array();
    for (const std::vector<NodeId>& compromised : sets) {
        for (NodeId c : compromised) {
            if (c >= graph.node_count()) {
                fail("config.adversary_sets", "node id " + std::to_string(c) + " out of range");
            }
        }
        ojson entry;
        entry["compromised"] = compromised;
        std::size_t derivable_count = 0;
        ojson rows = ojson::array();
        for (const GroupKeyId& target : targets) {
            const AdversaryResult res = adversary_can_derive(graph, engine, compromised, target);
            if (res.derivable) ++derivable_count;
            rows.push_back(ojson{{"key", group_label(target)},
                                 {"derivable", res.derivable},
                                 {"opened_envelopes", res.opened_envelopes},
                                 {"basis_rank", res.basis_rank}});
        }
        entry["derivable_count"] = derivable_count;
        entry["targets"] = std::move(rows);
        findings.push_back(std::move(entry));
    }
    ojson doc;
    doc["group_keys_analyzed"] = targets.size();
    doc["findings"] = std::move(findings);
    return doc;
}

// Deepest primary relay chain, ties to the highest id: a stable default for
// route construction when the config names no destination.
NodeId default_destination(const NetworkGraph& graph, const RoutingState& state) {
    NodeId best = kNoNode;
    std::size_t best_depth = 0;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        if (u == graph.sink || !state.reachable(u)) continue;
        const std::size_t depth = primary_chain(state, u, graph.sink).size() - 1;
        if (best == kNoNode || depth > best_depth || (depth == best_depth && u > best)) {
            best = u;
            best_depth = depth;
        }
    }
    if (best == kNoNode) throw UnreachableError("no node has a route to the sink");
    return best;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
    ojson doc;
    try {
        doc = ojson::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(doc, "config",
               {"node_count", "h_fraction", "area", "range_l", "range_h", "pool_size", "k1",
                "k2", "failure_model", "sink_position", "seed", "nodes", "mode", "epsilon",
                "route_policy", "route_paths_cap", "destination", "mc", "adversary_sets",
                "output_dir"});

    ScenarioConfig cfg;
    DeploymentParams& dep = cfg.deployment;
    if (doc.contains("node_count")) {
        dep.node_count = static_cast<std::uint32_t>(as_uint(doc.at("node_count"), "config.node_count"));
    }
    if (doc.contains("h_fraction")) dep.h_fraction = as_number(doc.at("h_fraction"), "config.h_fraction");
    if (doc.contains("area")) {
        const ojson& area = as_object(doc.at("area"), "config.area");
        check_keys(area, "config.area", {"w", "h"});
        if (area.contains("w")) dep.area_w = as_number(area.at("w"), "config.area.w");
        if (area.contains("h")) dep.area_h = as_number(area.at("h"), "config.area.h");
    }
    if (doc.contains("range_l")) dep.range_l = as_number(doc.at("range_l"), "config.range_l");
    if (doc.contains("range_h")) dep.range_h = as_number(doc.at("range_h"), "config.range_h");
    if (doc.contains("pool_size")) {
        dep.pool_size = static_cast<std::uint32_t>(as_uint(doc.at("pool_size"), "config.pool_size"));
    }
    if (doc.contains("k1")) dep.k1 = static_cast<std::uint32_t>(as_uint(doc.at("k1"), "config.k1"));
    if (doc.contains("k2")) dep.k2 = static_cast<std::uint32_t>(as_uint(doc.at("k2"), "config.k2"));
    if (doc.contains("failure_model")) {
        dep.failure = parse_failure_model(doc.at("failure_model"), "config.failure_model");
    }
    if (doc.contains("sink_position") && !doc.at("sink_position").is_null()) {
        const ojson& pos = as_object(doc.at("sink_position"), "config.sink_position");
        check_keys(pos, "config.sink_position", {"x", "y"});
        Point p;
        if (pos.contains("x")) p.x = as_number(pos.at("x"), "config.sink_position.x");
        if (pos.contains("y")) p.y = as_number(pos.at("y"), "config.sink_position.y");
        dep.sink_position = p;
    }
    if (doc.contains("seed")) dep.seed = as_uint(doc.at("seed"), "config.seed");

    if (doc.contains("nodes") && !doc.at("nodes").is_null()) {
        const ojson& nodes = as_array(doc.at("nodes"), "config.nodes");
        std::vector<ExplicitNode> parsed;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            parsed.push_back(
                parse_explicit_node(nodes.at(i), "config.nodes[" + std::to_string(i) + "]"));
        }
        cfg.explicit_nodes = std::move(parsed);
    }

    if (doc.contains("mode")) {
        const std::string mode = as_string(doc.at("mode"), "config.mode");
        if (mode == "greedy") {
            cfg.mode = FixpointMode::GreedyFinalize;
        } else if (mode == "iterative") {
            cfg.mode = FixpointMode::IterativeRelax;
        } else {
            fail("config.mode", "expected greedy | iterative");
        }
    }
    if (doc.contains("epsilon")) {
        cfg.epsilon = as_number(doc.at("epsilon"), "config.epsilon");
        if (cfg.epsilon < 0) fail("config.epsilon", "must be non-negative");
    }
    if (doc.contains("route_policy")) {
        const std::string policy = as_string(doc.at("route_policy"), "config.route_policy");
        if (policy == "min_hop") {
            cfg.route_policy = RoutePolicy::MinHop;
        } else if (policy == "max_min_keys") {
            cfg.route_policy = RoutePolicy::MaxMinKeys;
        } else if (policy == "all_paths") {
            cfg.route_policy = RoutePolicy::AllPaths;
        } else {
            fail("config.route_policy", "expected min_hop | max_min_keys | all_paths");
        }
    }
    if (doc.contains("route_paths_cap")) {
        cfg.route_paths_cap =
            static_cast<std::size_t>(as_uint(doc.at("route_paths_cap"), "config.route_paths_cap"));
        if (cfg.route_paths_cap == 0) fail("config.route_paths_cap", "must be positive");
    }
    if (doc.contains("destination") && !doc.at("destination").is_null()) {
        cfg.destination = static_cast<NodeId>(as_uint(doc.at("destination"), "config.destination"));
    }
    if (doc.contains("mc")) {
        const ojson& mc = as_object(doc.at("mc"), "config.mc");
        check_keys(mc, "config.mc", {"n_values", "f_values", "trials"});
        if (mc.contains("n_values")) {
            cfg.mc.n_values.clear();
            const ojson& ns = as_array(mc.at("n_values"), "config.mc.n_values");
            for (std::size_t i = 0; i < ns.size(); ++i) {
                const std::string path = "config.mc.n_values[" + std::to_string(i) + "]";
                const std::uint64_t n = as_uint(ns.at(i), path);
                if (n == 0 || n > 62) fail(path, "must be in [1, 62]");
                cfg.mc.n_values.push_back(static_cast<int>(n));
            }
            if (cfg.mc.n_values.empty()) fail("config.mc.n_values", "must not be empty");
        }
        if (mc.contains("f_values")) {
            cfg.mc.f_values.clear();
            const ojson& fs = as_array(mc.at("f_values"), "config.mc.f_values");
            for (std::size_t i = 0; i < fs.size(); ++i) {
                const std::string path = "config.mc.f_values[" + std::to_string(i) + "]";
                const double f = as_number(fs.at(i), path);
                if (f < 0 || f >= 1) fail(path, "must be in [0, 1)");
                cfg.mc.f_values.push_back(f);
            }
            if (cfg.mc.f_values.empty()) fail("config.mc.f_values", "must not be empty");
        }
        if (mc.contains("trials")) {
            cfg.mc.trials = as_uint(mc.at("trials"), "config.mc.trials");
            if (cfg.mc.trials == 0) fail("config.mc.trials", "must be positive");
        }
    }
    if (doc.contains("adversary_sets")) {
        const ojson& sets = as_array(doc.at("adversary_sets"), "config.adversary_sets");
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const std::string path = "config.adversary_sets[" + std::to_string(i) + "]";
            const ojson& one = as_array(sets.at(i), path);
            std::vector<NodeId> ids;
            for (std::size_t j = 0; j < one.size(); ++j) {
                ids.push_back(static_cast<NodeId>(
                    as_uint(one.at(j), path + "[" + std::to_string(j) + "]")));
            }
            cfg.adversary_sets.push_back(std::move(ids));
        }
    }
    if (doc.contains("output_dir")) cfg.output_dir = as_string(doc.at("output_dir"), "config.output_dir");
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string resolved_config_json(const ScenarioConfig& cfg) {
    const DeploymentParams& dep = cfg.deployment;
    ojson doc;
    doc["node_count"] = dep.node_count;
    doc["h_fraction"] = dep.h_fraction;
    doc["area"] = ojson{{"w", dep.area_w}, {"h", dep.area_h}};
    doc["range_l"] = dep.range_l;
    doc["range_h"] = dep.range_h;
    doc["pool_size"] = dep.pool_size;
    doc["k1"] = dep.k1;
    doc["k2"] = dep.k2;
    switch (dep.failure.kind) {
        case FailureModel::Kind::Constant:
            doc["failure_model"] = ojson{{"kind", "constant"}, {"f", dep.failure.f}};
            break;
        case FailureModel::Kind::Uniform:
            doc["failure_model"] =
                ojson{{"kind", "uniform"}, {"lo", dep.failure.lo}, {"hi", dep.failure.hi}};
            break;
        case FailureModel::Kind::DistanceLinear:
            doc["failure_model"] =
                ojson{{"kind", "distance_linear"}, {"scale", dep.failure.scale}};
            break;
    }
    if (dep.sink_position) {
        doc["sink_position"] = ojson{{"x", dep.sink_position->x}, {"y", dep.sink_position->y}};
    } else {
        doc["sink_position"] = nullptr;
    }
    doc["seed"] = dep.seed;
    if (cfg.explicit_nodes) {
        ojson nodes = ojson::array();
        for (const ExplicitNode& n : *cfg.explicit_nodes) {
            nodes.push_back(ojson{{"id", n.id},
                                  {"tier", tier_name(n.tier)},
                                  {"x", n.pos.x},
                                  {"y", n.pos.y},
                                  {"range", n.range},
                                  {"ring", n.ring}});
        }
        doc["nodes"] = std::move(nodes);
    } else {
        doc["nodes"] = nullptr;
    }
    doc["mode"] = mode_name(cfg.mode);
    doc["epsilon"] = cfg.epsilon;
    doc["route_policy"] = policy_name(cfg.route_policy);
    doc["route_paths_cap"] = cfg.route_paths_cap;
    if (cfg.destination) {
        doc["destination"] = *cfg.destination;
    } else {
        doc["destination"] = nullptr;
    }
    doc["mc"] = ojson{{"n_values", cfg.mc.n_values},
                      {"f_values", cfg.mc.f_values},
                      {"trials", cfg.mc.trials}};
    doc["adversary_sets"] = cfg.adversary_sets;
    doc["output_dir"] = cfg.output_dir;
    return dump(doc);
}

NetworkGraph build_graph(const ScenarioConfig& cfg) {
    if (!cfg.explicit_nodes) return generate_deployment(cfg.deployment);

    const std::vector<ExplicitNode>& spec = *cfg.explicit_nodes;
    if (spec.size() < 2) throw ConfigError("config.nodes: need at least two nodes");
    NetworkGraph g;
    g.area_w = cfg.deployment.area_w;
    g.area_h = cfg.deployment.area_h;
    g.pool_size = cfg.deployment.pool_size;
    g.seed = cfg.deployment.seed;
    g.nodes.resize(spec.size());

    std::vector<char> seen(spec.size(), 0);
    NodeId sink = kNoNode;
    for (const ExplicitNode& n : spec) {
        if (n.id >= spec.size() || seen[n.id]) {
            throw ConfigError("config.nodes: ids must be unique and dense starting at 0");
        }
        seen[n.id] = 1;
        if (n.range <= 0) throw ConfigError("config.nodes: range must be positive");
        for (KeyId k : n.ring) {
            if (k >= g.pool_size) {
                throw ConfigError("config.nodes: ring key id " + std::to_string(k) +
                                  " outside pool");
            }
        }
        if (n.tier == Tier::Sink) {
            if (sink != kNoNode) throw ConfigError("config.nodes: more than one sink");
            sink = n.id;
        }
        NodeSpec& out = g.nodes[n.id];
        out.id = n.id;
        out.tier = n.tier;
        out.pos = n.pos;
        out.range = n.range;
        out.ring = n.ring;
    }
    if (sink == kNoNode) throw ConfigError("config.nodes: no sink node");
    g.sink = sink;
    build_links(g, cfg.deployment.failure);
    return g;
}

ReportBundle run_scenario(const ScenarioConfig& cfg_in, const std::string& subcommand,
                          const CliOverrides& overrides) {
    ScenarioConfig cfg = cfg_in;
    if (overrides.seed) cfg.deployment.seed = *overrides.seed;
    if (overrides.out_dir) cfg.output_dir = *overrides.out_dir;
    if (overrides.destination) cfg.destination = *overrides.destination;
    if (overrides.trials) {
        if (*overrides.trials == 0) throw ConfigError("--trials: must be positive");
        cfg.mc.trials = *overrides.trials;
    }
    const std::string format = overrides.format.value_or("csv");
    if (format != "csv" && format != "json") throw ConfigError("--format: expected csv | json");

    const bool all = subcommand == "all";
    const bool want_graph = all || subcommand == "generate" || subcommand == "eka" ||
                            subcommand == "keys" || subcommand == "routes" ||
                            subcommand == "adversary";
    const bool want_eak = want_graph && subcommand != "generate";
    const bool want_keys = want_eak && subcommand != "eka";
    const bool want_routes = all || subcommand == "routes";
    const bool want_mc = all || subcommand == "mc";
    const bool want_adversary = all || subcommand == "adversary";
    if (!want_graph && !want_mc) throw ConfigError("unknown subcommand: " + subcommand);

    ReportBundle bundle;
    auto add = [&bundle](const char* name, std::string content) {
        bundle.files.emplace_back(name, std::move(content));
    };
    add("config.json", resolved_config_json(cfg));

    NetworkGraph graph;
    RoutingState state;
    SinkTable table;
    std::optional<ProtocolEngine> engine;

    if (want_graph) {
        graph = build_graph(cfg);
        add("graph.json", graph_to_json(graph));
    }
    if (want_eak) {
        FixpointOptions options;
        options.epsilon = cfg.epsilon;
        state = compute_eak_to_sink(graph, cfg.mode, options);
        if (!state.converged) {
            std::ostringstream why;
            why << "fixpoint did not converge in " << state.rounds << " rounds; oscillating:";
            for (NodeId u : state.oscillating) why << ' ' << u;
            throw ConvergenceError(why.str());
        }
        const DispatchResult dispatch = dispatch_nhlists(graph, state);
        table = collect_topology_at_sink(graph, state);
        add("eak.json", dump(eak_report(graph, state, dispatch, table)));
    }
    if (want_keys) {
        engine.emplace(graph, cfg.deployment.seed);
        for (NodeId u = 0; u < graph.node_count(); ++u) {
            if (state.nhlists[u].empty()) continue;
            std::vector<NodeId> relays;
            for (const NhEntry& e : state.nhlists[u].entries) relays.push_back(e.node);
            engine->run_fr_exchange(u, relays);
        }
        for (NodeId u = 0; u < graph.node_count(); ++u) {
            if (state.selectors[u].empty()) continue;
            engine->run_br_exchange(u, state.selectors[u]);
        }
        add("transcripts.json", dump(transcripts_report(*engine)));
    }
    if (want_routes) {
        const NodeId dest = cfg.destination ? *cfg.destination : default_destination(graph, state);
        const RouteSet route =
            construct_query_routes(graph, table, dest, cfg.route_policy, cfg.route_paths_cap);
        const DeliveryTrace trace = forward_query_and_reply(graph, state, route, *engine);
        RouteDeliveryResult sim;
        if (!route.paths.empty()) {
            const std::vector<NodeId>& path = route.paths[route.chosen];
            std::vector<HopSpec> hops;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                const LinkInfo* link = graph.link_between(path[i], path[i + 1]);
                hops.push_back(HopSpec{Semantics::Broadcast, {link ? link->failure : 0.0}});
            }
            if (!hops.empty()) {
                sim = simulate_route_delivery(hops, cfg.mc.trials, cfg.deployment.seed);
            }
        }
        add("routes.json", dump(routes_report(graph, route, cfg.route_policy, trace, sim)));
    }
    if (want_mc) {
        const std::vector<McCell> cells =
            run_mc_grid(cfg.mc.n_values, cfg.mc.f_values, cfg.mc.trials, cfg.deployment.seed);
        add("mc.csv", mc_grid_to_csv(cells, cfg.deployment.seed, cfg.mc.trials));
        if (format == "json") {
            add("mc.json", dump(mc_report(cells, cfg.deployment.seed, cfg.mc.trials)));
        }
    }
    if (want_adversary) {
        add("adversary.json", dump(adversary_report(graph, *engine, cfg.adversary_sets)));
    }

    ojson manifest;
    manifest["subcommand"] = subcommand;
    manifest["seed"] = cfg.deployment.seed;
    ojson files = ojson::array();
    for (const auto& [name, content] : bundle.files) {
        files.push_back(ojson{{"name", name},
                              {"bytes", content.size()},
                              {"digest", Digest64().str(content).hex()}});
    }
    manifest["files"] = std::move(files);
    bundle.manifest_json = dump(manifest);
    bundle.files.emplace_back("manifest.json", bundle.manifest_json);
    return bundle;
}

void write_bundle(const ReportBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : bundle.files) {
        const std::filesystem::path path = std::filesystem::path(dir) / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
    }
}

}  // namespace eakr
