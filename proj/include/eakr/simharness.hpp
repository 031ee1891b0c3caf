// Monte Carlo validation of the retry-count formulas.
//
// Broadcast semantics: one transmission per round reaches each listed forwarder
// independently with probability 1 - f_i; the round succeeds when at least one
// receives. Pairwise semantics: every forwarder needs its own sealed unicast
// and the round succeeds only when all n unicasts get through. Round counts are
// geometric with success probability p = 1 - prod f_i (broadcast) or
// p = prod (1 - f_i) (pairwise); the harness estimates the mean empirically and
// compares against 1/p.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eakr/types.hpp"

namespace eakr {

enum class Semantics { Broadcast, Pairwise };

inline const char* semantics_name(Semantics s) {
    return s == Semantics::Broadcast ? "broadcast" : "pairwise";
}

struct TrialConfig {
    Semantics semantics = Semantics::Broadcast;
    std::vector<double> failures;  // per-forwarder f, each in [0, 1)
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
};

struct TrialResult {
    double analytic_mean = 0;
    double empirical_mean = 0;
    double std_error = 0;  // of the empirical mean
    std::uint64_t trials = 0;
    std::map<std::uint32_t, std::uint64_t> histogram;  // rounds -> count
};

// Per-round success probability for the semantics.
double round_success_probability(Semantics semantics, const std::vector<double>& failures);

// Runs cfg.trials independent trials, one RNG substream per trial. Cheap cells
// simulate each forwarder's Bernoulli draw round by round; cells whose expected
// draw volume is prohibitive sample the identically distributed geometric round
// count directly (deterministic switch on the cell parameters).
TrialResult simulate_anypath_rounds(const TrialConfig& cfg);

struct HopSpec {
    Semantics semantics = Semantics::Broadcast;
    std::vector<double> failures;
};

struct RouteDeliveryResult {
    double analytic_mean = 0;  // sum of per-hop expectations
    double empirical_mean = 0;
    double std_error = 0;
    std::uint64_t trials = 0;
    std::vector<double> per_hop_analytic;
};

// End-to-end transmission count over a multi-hop route: per-hop geometric retry
// counts, summed per trial.
RouteDeliveryResult simulate_route_delivery(const std::vector<HopSpec>& hops,
                                            std::uint64_t trials, std::uint64_t seed);

struct McCell {
    Semantics semantics = Semantics::Broadcast;
    int n = 1;
    double f = 0.5;
    TrialResult result;
};

// Grid sweep used by the CLI and the acceptance suite.
std::vector<McCell> run_mc_grid(const std::vector<int>& ns, const std::vector<double>& fs,
                                std::uint64_t trials, std::uint64_t seed);

std::string mc_grid_to_csv(const std::vector<McCell>& cells, std::uint64_t seed,
                           std::uint64_t trials);

}  // namespace eakr
