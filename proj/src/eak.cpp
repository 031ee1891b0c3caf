#include "eakr/eak.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eakr {

FailureStats total_failure_and_trials(const std::vector<double>& failures) {
    FailureStats s;
    for (double f : failures) s.all_fail *= f;
    s.any_receive = 1.0 - s.all_fail;
    s.expected_trials =
        s.any_receive > 0 ? 1.0 / s.any_receive : std::numeric_limits<double>::infinity();
    return s;
}

std::vector<double> forwarding_weights(int n) {
    if (n < 1 || n > 62)
        throw std::invalid_argument("forwarding_weights: n must be in [1, 62]");
    const double denom = std::ldexp(1.0, n) - 1.0;  // 2^n - 1
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i)
        w[static_cast<std::size_t>(i - 1)] = std::ldexp(1.0, n - i) / denom;
    return w;
}

double last_hop_eka(const std::vector<int>& key_counts, const std::vector<double>& failures) {
    if (key_counts.empty()) throw std::invalid_argument("last_hop_eka: empty forwarder list");
    if (key_counts.size() > 62) throw std::invalid_argument("last_hop_eka: list too long");
    if (key_counts.size() != failures.size())
        throw std::invalid_argument("last_hop_eka: list length mismatch");
    // sum k_i w_i == (sum k_i 2^(n-i)) / (2^n - 1); the numerator is kept as a
    // running value (num = 2*num + k) so exhaustive and incremental evaluation
    // agree bit for bit.
    double key_numerator = 0;
    double all_fail = 1;
    for (std::size_t i = 0; i < key_counts.size(); ++i) {
        key_numerator = 2.0 * key_numerator + key_counts[i];
        all_fail *= failures[i];
    }
    const double weight_denom = std::ldexp(1.0, static_cast<int>(key_counts.size())) - 1.0;
    const double receive_prob = 1.0 - all_fail;
    if (!(receive_prob > 0)) throw std::domain_error("last_hop_eka: no forwarder can ever receive");
    return key_numerator / weight_denom / receive_prob;
}

RelayValue relay_eak(const std::vector<double>& eaks, const std::vector<double>& failures) {
    if (eaks.empty()) throw std::invalid_argument("relay_eak: empty forwarder list");
    if (eaks.size() != failures.size())
        throw std::invalid_argument("relay_eak: list length mismatch");
    double raw = 0;
    double fail_prefix = 1;  // prod of f over higher-priority entries
    for (std::size_t i = 0; i < eaks.size(); ++i) {
        raw += fail_prefix * (1.0 - failures[i]) * eaks[i];
        fail_prefix *= failures[i];
    }
    const double denom = 1.0 - fail_prefix;
    if (!(denom > 0)) throw std::domain_error("relay_eak: no forwarder can ever receive");
    return {raw, raw / denom};
}

std::vector<RelayCandidate> canonical_order(std::vector<RelayCandidate> c) {
    std::sort(c.begin(), c.end(), [](const RelayCandidate& a, const RelayCandidate& b) {
        if (a.is_sink != b.is_sink) return a.is_sink;
        if (a.eak != b.eak) return a.eak > b.eak;
        return a.node < b.node;
    });
    return c;
}

namespace {

// Largest prefix length the weight formula can represent exactly enough.
constexpr std::size_t kMaxPrefix = 62;

struct PrefixEval {
    std::vector<double> total;     // index m = prefix length
    std::vector<double> last_hop;  // index m-1
    std::vector<double> relay;     // index m-1 (normalized)
};

// Incremental evaluation of all prefixes of the ordered candidate list.
PrefixEval evaluate_prefixes(const std::vector<RelayCandidate>& ordered) {
    PrefixEval ev;
    const std::size_t m_max = std::min(ordered.size(), kMaxPrefix);
    ev.total.reserve(m_max + 1);
    ev.total.push_back(0);
    double key_numerator = 0;  // sum k_i 2^(m-i), maintained as num = 2*num + k_m
    double all_fail = 1;
    double relay_raw = 0;
    for (std::size_t m = 1; m <= m_max; ++m) {
        const RelayCandidate& cand = ordered[m - 1];
        key_numerator = 2.0 * key_numerator + cand.shared_keys;
        relay_raw += all_fail * (1.0 - cand.failure) * cand.eak;
        all_fail *= cand.failure;
        const double weight_denom = std::ldexp(1.0, static_cast<int>(m)) - 1.0;
        const double receive_prob = 1.0 - all_fail;
        const double lh = key_numerator / weight_denom / receive_prob;
        const double rel = relay_raw / receive_prob;
        ev.last_hop.push_back(lh);
        ev.relay.push_back(rel);
        ev.total.push_back(lh + rel);
    }
    return ev;
}

}  // namespace

UpdateResult update_eak(NodeId owner, const std::vector<RelayCandidate>& candidates) {
    UpdateResult out;
    out.record.node = owner;
    out.nhlist.owner = owner;
    if (candidates.empty()) return out;

    const auto ordered = canonical_order(candidates);
    const PrefixEval ev = evaluate_prefixes(ordered);
    out.prefix_values = ev.total;

    // Admission walk: extend the list one candidate at a time while each
    // extension strictly raises the total; stop at the first that does not.
    // The sink, when adjacent, is always admitted.
    const std::size_t min_len = ordered.front().is_sink ? 1 : 0;
    std::size_t best = min_len;
    for (std::size_t m = min_len + 1; m < ev.total.size(); ++m) {
        if (!(ev.total[m] > ev.total[m - 1])) break;
        best = m;
    }

    if (best > 0) {
        out.record.eak = ev.total[best];
        out.record.last_hop = ev.last_hop[best - 1];
        out.record.relay = ev.relay[best - 1];
        out.nhlist.entries.reserve(best);
        for (std::size_t i = 0; i < best; ++i)
            out.nhlist.entries.push_back(
                {ordered[i].node, static_cast<int>(i + 1), ordered[i].eak});
    }
    return out;
}

PrefixChoice best_prefix_exhaustive(const std::vector<RelayCandidate>& candidates) {
    const auto ordered = canonical_order(candidates);
    const std::size_t m_max = std::min(ordered.size(), kMaxPrefix);
    const std::size_t min_len = !ordered.empty() && ordered.front().is_sink ? 1 : 0;

    PrefixChoice best;  // length 0, value 0
    for (std::size_t m = 1; m <= m_max; ++m) {
        PrefixChoice cur;
        cur.length = m;
        std::vector<int> ks;
        std::vector<double> fs;
        std::vector<double> es;
        for (std::size_t i = 0; i < m; ++i) {
            ks.push_back(ordered[i].shared_keys);
            fs.push_back(ordered[i].failure);
            es.push_back(ordered[i].eak);
        }
        cur.last_hop = last_hop_eka(ks, fs);
        cur.relay = relay_eak(es, fs).normalized;
        cur.eak = total_eak(cur.last_hop, cur.relay);
        // Same admission walk as update_eak, re-scored from scratch: admit
        // while strictly improving, except the sink's forced admission.
        if (m > std::max<std::size_t>(min_len, 1) && !(cur.eak > best.eak)) break;
        best = cur;
    }
    return best;
}

SubsetChoice best_subset_exhaustive(const std::vector<RelayCandidate>& candidates) {
    if (candidates.size() > 16)
        throw std::invalid_argument("best_subset_exhaustive: too many candidates");
    const auto ordered = canonical_order(candidates);
    const PrefixChoice prefix = best_prefix_exhaustive(candidates);

    SubsetChoice best;
    best.eak = 0;
    const std::size_t n = ordered.size();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> ks;
        std::vector<double> fs;
        std::vector<double> es;
        std::vector<NodeId> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask & (1u << i))) continue;
            ks.push_back(ordered[i].shared_keys);
            fs.push_back(ordered[i].failure);
            es.push_back(ordered[i].eak);
            members.push_back(ordered[i].node);
        }
        const double value = total_eak(last_hop_eka(ks, fs), relay_eak(es, fs).normalized);
        if (value > best.eak) {
            best.eak = value;
            best.members = std::move(members);
        }
    }
    // Strictly-beats with a small relative margin so equal-valued subsets
    // (e.g. the prefix itself) are not flagged by rounding noise.
    best.beats_prefix = best.eak > prefix.eak + 1e-9 * std::max(1.0, std::abs(prefix.eak));
    return best;
}

}  // namespace eakr
