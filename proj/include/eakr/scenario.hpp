// Scenario configuration (strict JSON schema) and the end-to-end pipeline
// behind the CLI subcommands. All outputs are deterministic functions of the
// resolved configuration; the manifest digests every emitted file.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eakr/netmodel.hpp"
#include "eakr/routing.hpp"

namespace eakr {

struct ExplicitNode {
    NodeId id = 0;
    Tier tier = Tier::L;
    Point pos;
    double range = 0;
    std::vector<KeyId> ring;
};

struct McParams {
    std::vector<int> n_values = {1, 2, 3};
    std::vector<double> f_values = {0.5};
    std::uint64_t trials = 100000;
};

struct ScenarioConfig {
    DeploymentParams deployment;
    std::optional<std::vector<ExplicitNode>> explicit_nodes;  // fixture topologies
    FixpointMode mode = FixpointMode::GreedyFinalize;
    double epsilon = 1e-9;
    RoutePolicy route_policy = RoutePolicy::MaxMinKeys;
    std::size_t route_paths_cap = 128;
    std::optional<NodeId> destination;  // routes target; null -> deepest node
    McParams mc;
    std::vector<std::vector<NodeId>> adversary_sets;
    std::string output_dir = "out";
};

// Parses and validates a config JSON document. Unknown fields anywhere in the
// document are rejected. Throws ConfigError with a path-qualified message.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

// The fully resolved configuration (every default filled in), as canonical JSON.
std::string resolved_config_json(const ScenarioConfig& cfg);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<NodeId> destination;
    std::optional<std::uint64_t> trials;
    std::optional<std::string> format;  // "csv" (default) | "json"
};

struct ReportBundle {
    // File name -> content, in emission order. manifest.json is last.
    std::vector<std::pair<std::string, std::string>> files;
    std::string manifest_json;
};

// Subcommands: generate | eka | keys | routes | mc | adversary | all.
// Each stage adds its report files; `all` runs the full pipeline. The bundle is
// pure; write_bundle puts it on disk under cfg.output_dir.
ReportBundle run_scenario(const ScenarioConfig& cfg, const std::string& subcommand,
                          const CliOverrides& overrides = {});

void write_bundle(const ReportBundle& bundle, const std::string& dir);

// Graph construction honoring explicit fixture topologies.
NetworkGraph build_graph(const ScenarioConfig& cfg);

}  // namespace eakr
