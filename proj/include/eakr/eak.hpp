// The EAK anypath metric: expected number of distinct pairwise keys protecting
// a delivery to the sink when a packet is relayed by a priority-ordered
// forwarder list. A forwarder list on n links with per-link shared-key counts
// k_i and failure probabilities f_i (priority order i = 1..n) scores
//
//   last-hop:  (sum_i k_i * w_i) / (1 - prod_i f_i),  w_i = 2^(n-i) / (2^n - 1)
//   relay:     sum_i (prod_{j<i} f_j) (1 - f_i) EAK_i   (then normalized by
//              1 - prod_i f_i to give the conditional relay value)
//   total:     last-hop + normalized relay
//
// The forwarding weights w_i halve with each priority step and sum to one; the
// relay term is the expectation over which listed forwarder is the first to
// receive the packet. A node grows its forwarder list along its canonically
// ordered neighbor list (sink first when adjacent, then EAK descending, then
// lower id), admitting candidates while each admission strictly raises the
// total.
#pragma once

#include <cstdint>
#include <vector>

#include "eakr/types.hpp"

namespace eakr {

struct FailureStats {
    double all_fail = 1;   // prod f_i
    double any_receive = 0;  // 1 - prod f_i
    double expected_trials = 0;  // 1 / any_receive; +inf when any_receive == 0
};

// Empty list is allowed and yields {1, 0, +inf}; callers treat that as the
// "no forwarders" condition.
FailureStats total_failure_and_trials(const std::vector<double>& failures);

// w_i = 2^(n-i) / (2^n - 1) for i = 1..n. n must be in [1, 62].
std::vector<double> forwarding_weights(int n);

// Last-hop component: weighted key mass over the probability at least one
// listed forwarder receives. Throws on empty input or a zero denominator.
double last_hop_eka(const std::vector<int>& key_counts, const std::vector<double>& failures);

struct RelayValue {
    double raw = 0;         // priority-weighted sum of downstream EAKs
    double normalized = 0;  // raw / (1 - prod f_i)
};

// Relay component for downstream EAKs in priority order. Throws on empty input
// or a zero denominator.
RelayValue relay_eak(const std::vector<double>& eaks, const std::vector<double>& failures);

inline double total_eak(double last_hop, double relay_normalized) {
    return last_hop + relay_normalized;
}

// One candidate forwarder as seen from the owner: the neighbor's current EAK,
// the owner->neighbor link statistics, and whether the neighbor is the sink.
struct RelayCandidate {
    NodeId node = 0;
    double eak = 0;
    int shared_keys = 0;
    double failure = 0;
    bool is_sink = false;
};

struct NhEntry {
    NodeId node = 0;
    int priority = 1;          // 1 = highest
    double eak_at_selection = 0;
};

struct NhList {
    NodeId owner = 0;
    std::vector<NhEntry> entries;
    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
};

struct EakRecord {
    NodeId node = 0;
    double eak = 0;
    double last_hop = 0;
    double relay = 0;  // normalized relay component
};

struct UpdateResult {
    EakRecord record;
    NhList nhlist;
    // Total EAK of every prefix of the canonical order (index 0 = empty).
    std::vector<double> prefix_values;
};

// Canonical candidate order: sink first when present, then EAK descending,
// then lower node id. Shared by update_eak and the oracles.
std::vector<RelayCandidate> canonical_order(std::vector<RelayCandidate> candidates);

// Walks the canonical order admitting one candidate at a time while each
// admission strictly raises the total EAK, stopping at the first extension
// that does not improve. The sink, when among the candidates, is always
// admitted. With no candidates the result is the zero record and an empty
// list; otherwise the first candidate always improves on the empty list, so
// the list is never empty.
UpdateResult update_eak(NodeId owner, const std::vector<RelayCandidate>& candidates);

struct PrefixChoice {
    std::size_t length = 0;
    double eak = 0;
    double last_hop = 0;
    double relay = 0;
};

// Reference evaluator: re-scores each prefix of the canonical order from
// scratch through last_hop_eka / relay_eak and applies the same admission walk
// as update_eak. Used to cross-check the incremental evaluation path.
PrefixChoice best_prefix_exhaustive(const std::vector<RelayCandidate>& candidates);

struct SubsetChoice {
    std::vector<NodeId> members;  // in evaluation (priority) order
    double eak = 0;
    bool beats_prefix = false;
};

// Exploratory check: evaluates every subset (each internally ordered by the
// canonical rule) and reports whether any strictly beats the best prefix.
// Candidate count must be <= 16.
SubsetChoice best_subset_exhaustive(const std::vector<RelayCandidate>& candidates);

}  // namespace eakr
