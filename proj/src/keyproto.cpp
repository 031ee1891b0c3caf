#include "eakr/keyproto.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <stdexcept>

#include "eakr/digest.hpp"
#include "eakr/rng.hpp"

namespace eakr {

const char* payload_kind_name(PayloadKind kind) {
    switch (kind) {
        case PayloadKind::Invite: return "invite";
        case PayloadKind::ShareReply: return "share_reply";
        case PayloadKind::KeyDispatch: return "key_dispatch";
        case PayloadKind::AppData: return "app_data";
    }
    return "?";
}

Material128 generate_share(std::uint64_t seed, NodeId node, std::uint64_t nonce) {
    CounterRng rng(seed, CounterRng::stream_tag(stream::kShare, node, nonce));
    Material128 m;
    m.hi = rng.next_u64();
    m.lo = rng.next_u64();
    return m;
}

Material128 combine_shares(const std::vector<Material128>& shares) {
    if (shares.empty()) throw std::invalid_argument("combine_shares: empty share list");
    Material128 acc;
    for (const Material128& s : shares) acc ^= s;
    return acc;
}

Material128 pairwise_seal_material(const std::vector<KeyId>& shared) {
    Digest64 hi, lo;
    hi.str("pairwise-seal-hi");
    lo.str("pairwise-seal-lo");
    for (KeyId k : shared) {
        hi.u32(k);
        lo.u32(k);
    }
    return {hi.value(), lo.value()};
}

std::uint64_t envelope_tag(const Envelope& env, Material128 seal_material) {
    Digest64 d;
    d.str("envelope-tag");
    d.u32(env.sender).u32(env.receiver);
    d.u64(static_cast<std::uint64_t>(env.mode));
    d.u64(static_cast<std::uint64_t>(env.payload_kind));
    d.u64(env.counter);
    d.u64(env.payload.hi).u64(env.payload.lo);
    if (env.mode == SealMode::Pairwise) {
        d.u64(env.required_keys.size());
        for (KeyId k : env.required_keys) d.u32(k);
    } else if (env.group) {
        d.str(env.group->kind).u32(env.group->owner);
    }
    d.u64(seal_material.hi).u64(seal_material.lo);
    return d.value();
}

ProtocolEngine::ProtocolEngine(const NetworkGraph& graph, std::uint64_t seed)
    : graph_(graph),
      seed_(seed),
      share_nonce_(graph.node_count(), 0),
      send_counter_(graph.node_count(), 0) {}

Material128 ProtocolEngine::fresh_share(NodeId node) {
    return generate_share(seed_, node, ++share_nonce_[node]);
}

std::vector<Material128> ProtocolEngine::shares_of(NodeId node) const {
    std::vector<Material128> out;
    if (node >= share_nonce_.size()) return out;
    for (std::uint64_t nonce = 1; nonce <= share_nonce_[node]; ++nonce) {
        out.push_back(generate_share(seed_, node, nonce));
    }
    return out;
}

Envelope ProtocolEngine::seal_pairwise(int step, NodeId from, NodeId to, PayloadKind kind,
                                       Material128 payload) {
    const LinkInfo* link = graph_.link_between(from, to);
    if (!link) throw std::logic_error("seal_pairwise: no link between endpoints");
    Envelope env;
    env.step = step;
    env.sender = from;
    env.receiver = to;
    env.mode = SealMode::Pairwise;
    env.required_keys = link->shared;
    env.payload_kind = kind;
    env.payload = payload;
    env.counter = ++send_counter_[from];
    env.tag = envelope_tag(env, pairwise_seal_material(env.required_keys));
    return env;
}

Envelope ProtocolEngine::seal_group(int step, NodeId from, NodeId to, const GroupKeyId& gid,
                                    PayloadKind kind, Material128 payload) {
    Envelope env;
    env.step = step;
    env.sender = from;
    env.receiver = to;
    env.mode = SealMode::Group;
    env.group = gid;
    env.payload_kind = kind;
    env.payload = payload;
    env.counter = ++send_counter_[from];
    env.tag = envelope_tag(env, keys_.at(gid).material);
    return env;
}

DeliveryStatus ProtocolEngine::deliver(const Envelope& env) {
    Material128 seal;
    if (env.mode == SealMode::Pairwise) {
        if (env.receiver >= graph_.node_count()) return DeliveryStatus::CannotOpen;
        const std::vector<KeyId>& ring = graph_.nodes[env.receiver].ring;
        if (!std::includes(ring.begin(), ring.end(), env.required_keys.begin(),
                           env.required_keys.end())) {
            return DeliveryStatus::CannotOpen;
        }
        seal = pairwise_seal_material(env.required_keys);
    } else {
        if (!env.group || !node_holds(env.receiver, *env.group)) return DeliveryStatus::CannotOpen;
        seal = keys_.at(*env.group).material;
    }
    if (envelope_tag(env, seal) != env.tag) return DeliveryStatus::TagMismatch;
    const auto channel = std::make_pair(env.sender, env.receiver);
    auto it = replay_floor_.find(channel);
    const std::uint64_t floor = it == replay_floor_.end() ? 0 : it->second;
    if (env.counter <= floor) return DeliveryStatus::Replayed;
    replay_floor_[channel] = env.counter;
    return DeliveryStatus::Ok;
}

ProtocolTranscript ProtocolEngine::run_fr_exchange(NodeId selector,
                                                   const std::vector<NodeId>& relays) {
    ProtocolTranscript t;
    t.key_id = GroupKeyId{"fr", selector};
    t.participants.push_back(selector);
    t.participants.insert(t.participants.end(), relays.begin(), relays.end());

    auto abort = [&](RunOutcome outcome, const std::string& why) {
        t.outcome = outcome;
        t.failure_reason = why;
        transcripts_.push_back(t);
        return t;
    };
    if (relays.empty()) return abort(RunOutcome::NoChannel, "no relays to key");
    for (NodeId r : relays) {
        if (graph_.link_between(selector, r)) continue;
        std::ostringstream why;
        why << "no pairwise channel between " << selector << " and " << r;
        return abort(RunOutcome::NoChannel, why.str());
    }

    const Material128 own = fresh_share(selector);
    std::vector<Material128> relay_shares;
    relay_shares.reserve(relays.size());
    for (NodeId r : relays) relay_shares.push_back(fresh_share(r));
    Material128 key = own;
    for (const Material128& s : relay_shares) key ^= s;

    auto send = [&](Envelope env) {
        t.steps.push_back({env.step, env});
        const DeliveryStatus st = deliver(env);
        if (st != DeliveryStatus::Ok && t.outcome == RunOutcome::Established) {
            std::ostringstream why;
            why << "envelope rejected at step " << env.step;
            t.outcome = RunOutcome::IntegrityFailure;
            t.failure_reason = why.str();
        }
    };
    int step = 0;
    for (NodeId r : relays) send(seal_pairwise(++step, selector, r, PayloadKind::Invite, {}));
    for (std::size_t i = 0; i < relays.size(); ++i) {
        send(seal_pairwise(++step, relays[i], selector, PayloadKind::ShareReply, relay_shares[i]));
    }
    for (std::size_t i = 0; i < relays.size(); ++i) {
        send(seal_pairwise(++step, selector, relays[i], PayloadKind::KeyDispatch,
                           key ^ relay_shares[i]));
    }

    if (t.outcome == RunOutcome::Established) {
        GroupKey gk;
        gk.id = t.key_id;
        gk.members = t.participants;
        std::sort(gk.members.begin(), gk.members.end());
        gk.material = key;
        keys_[gk.id] = gk;
        for (NodeId m : gk.members) holdings_[m].insert(gk.id);
    }
    transcripts_.push_back(t);
    return t;
}

ProtocolTranscript ProtocolEngine::run_br_exchange(NodeId node,
                                                   const std::vector<NodeId>& selectors) {
    ProtocolTranscript t;
    t.key_id = GroupKeyId{"br", node};
    t.participants.push_back(node);
    t.participants.insert(t.participants.end(), selectors.begin(), selectors.end());

    auto abort = [&](RunOutcome outcome, const std::string& why) {
        t.outcome = outcome;
        t.failure_reason = why;
        transcripts_.push_back(t);
        return t;
    };
    if (selectors.empty()) return abort(RunOutcome::NoChannel, "no selectors to key");
    for (NodeId s : selectors) {
        const GroupKeyId fid{"fr", s};
        if (keys_.count(fid) && node_holds(node, fid)) continue;
        std::ostringstream why;
        why << "missing forward-relay group key of selector " << s;
        return abort(RunOutcome::MissingGroupKey, why.str());
    }

    const Material128 own = fresh_share(node);
    std::vector<Material128> selector_shares;
    selector_shares.reserve(selectors.size());
    for (NodeId s : selectors) selector_shares.push_back(fresh_share(s));
    Material128 key = own;
    for (const Material128& s : selector_shares) key ^= s;

    auto send = [&](Envelope env) {
        t.steps.push_back({env.step, env});
        const DeliveryStatus st = deliver(env);
        if (st != DeliveryStatus::Ok && t.outcome == RunOutcome::Established) {
            std::ostringstream why;
            why << "envelope rejected at step " << env.step;
            t.outcome = RunOutcome::IntegrityFailure;
            t.failure_reason = why.str();
        }
    };
    const int m = static_cast<int>(selectors.size());
    int step = 0;
    for (NodeId s : selectors) {
        send(seal_group(++step, node, s, GroupKeyId{"fr", s}, PayloadKind::Invite, {}));
    }
    for (std::size_t i = 0; i < selectors.size(); ++i) {
        send(seal_group(++step, selectors[i], node, GroupKeyId{"fr", selectors[i]},
                        PayloadKind::ShareReply, selector_shares[i]));
    }
    // One completion step: every selector receives the XOR of all shares except
    // its own and finishes the key locally.
    const int completion = 2 * m + 1;
    for (std::size_t i = 0; i < selectors.size(); ++i) {
        send(seal_group(completion, node, selectors[i], GroupKeyId{"fr", selectors[i]},
                        PayloadKind::KeyDispatch, key ^ selector_shares[i]));
    }

    if (t.outcome == RunOutcome::Established) {
        GroupKey gk;
        gk.id = t.key_id;
        gk.members = t.participants;
        std::sort(gk.members.begin(), gk.members.end());
        gk.material = key;
        keys_[gk.id] = gk;
        for (NodeId member : gk.members) holdings_[member].insert(gk.id);
    }
    transcripts_.push_back(t);
    return t;
}

Envelope ProtocolEngine::seal_app_envelope(NodeId from, NodeId to, const GroupKeyId& gid,
                                           Material128 payload) {
    if (!keys_.count(gid)) throw std::logic_error("seal_app_envelope: group key not established");
    if (!node_holds(from, gid)) throw std::logic_error("seal_app_envelope: sender lacks group key");
    return seal_group(0, from, to, gid, PayloadKind::AppData, payload);
}

DeliveryStatus ProtocolEngine::open_app_envelope(const Envelope& env) { return deliver(env); }

std::optional<GroupKey> ProtocolEngine::group_key(const GroupKeyId& id) const {
    auto it = keys_.find(id);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

bool ProtocolEngine::node_holds(NodeId node, const GroupKeyId& id) const {
    auto it = holdings_.find(node);
    return it != holdings_.end() && it->second.count(id) > 0;
}

namespace {

// GF(2) linear span of 128-bit materials; rows keep strictly descending,
// pairwise-distinct leading bits, so one reduction pass decides membership.
class XorSpan {
  public:
    bool insert(Material128 m) {
        m = reduce(m);
        if (m.is_zero()) return false;
        rows_.push_back(m);
        std::sort(rows_.begin(), rows_.end(), [](const Material128& a, const Material128& b) {
            return leading_bit(a) > leading_bit(b);
        });
        return true;
    }
    bool contains(Material128 m) const { return reduce(m).is_zero(); }
    std::size_t rank() const { return rows_.size(); }

  private:
    static int leading_bit(const Material128& m) {
        if (m.hi) return 127 - std::countl_zero(m.hi);
        return 63 - std::countl_zero(m.lo);
    }
    static bool bit_set(const Material128& m, int b) {
        return b >= 64 ? (m.hi >> (b - 64)) & 1u : (m.lo >> b) & 1u;
    }
    Material128 reduce(Material128 m) const {
        for (const Material128& row : rows_) {
            if (m.is_zero()) break;
            if (bit_set(m, leading_bit(row))) m ^= row;
        }
        return m;
    }
    std::vector<Material128> rows_;
};

}  // namespace

AdversaryResult adversary_can_derive(const NetworkGraph& graph, const ProtocolEngine& engine,
                                     const std::vector<NodeId>& compromised,
                                     const GroupKeyId& target) {
    std::set<KeyId> known_ids;
    XorSpan span;
    for (NodeId c : compromised) {
        if (c < graph.node_count()) {
            known_ids.insert(graph.nodes[c].ring.begin(), graph.nodes[c].ring.end());
        }
        for (const Material128& share : engine.shares_of(c)) span.insert(share);
    }

    std::vector<const Envelope*> envelopes;
    for (const ProtocolTranscript& t : engine.transcripts()) {
        for (const TranscriptStep& s : t.steps) envelopes.push_back(&s.envelope);
    }

    AdversaryResult result;
    std::vector<char> opened(envelopes.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < envelopes.size(); ++i) {
            if (opened[i]) continue;
            const Envelope& e = *envelopes[i];
            bool can_open = false;
            if (e.mode == SealMode::Pairwise) {
                can_open = std::all_of(e.required_keys.begin(), e.required_keys.end(),
                                       [&](KeyId k) { return known_ids.count(k) > 0; });
            } else if (e.group) {
                const auto gk = engine.group_key(*e.group);
                can_open = gk.has_value() && span.contains(gk->material);
            }
            if (!can_open) continue;
            opened[i] = 1;
            ++result.opened_envelopes;
            span.insert(e.payload);
            changed = true;
        }
    }

    const auto gk = engine.group_key(target);
    result.derivable = gk.has_value() && span.contains(gk->material);
    result.basis_rank = span.rank();
    return result;
}

}  // namespace eakr
