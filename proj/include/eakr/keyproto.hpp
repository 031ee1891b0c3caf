// Symbolic group-key establishment. Two group kinds exist per node u:
//   fR(u): u plus the members of u's forwarder list (u acts as selector);
//   bR(u): u plus the nodes that selected u (u acts as shared relay).
// Keys are XORs of 128-bit per-party shares. Messages are modeled as sealed
// envelopes: pairwise envelopes require the full shared-key set of the link,
// group envelopes require the named group key. Envelope tags bind sender,
// receiver, counter, payload and sealing material; per-(sender, receiver)
// monotone counters give replay detection. Nobody ever transmits a raw share
// to a party that should not learn it: dispatches carry XOR aggregates of all
// shares except the receiver's own.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eakr/netmodel.hpp"
#include "eakr/types.hpp"

namespace eakr {

enum class SealMode { Pairwise, Group };

enum class PayloadKind {
    Invite,       // protocol metadata only, no secret material
    ShareReply,   // a party's fresh share
    KeyDispatch,  // XOR of all shares except the receiver's own
    AppData,      // application traffic under an established group key
};

const char* payload_kind_name(PayloadKind kind);

struct GroupKeyId {
    std::string kind;  // "fr" | "br"
    NodeId owner = 0;
    friend auto operator<=>(const GroupKeyId&, const GroupKeyId&) = default;
};

struct Envelope {
    int step = 0;
    NodeId sender = 0;
    NodeId receiver = 0;
    SealMode mode = SealMode::Pairwise;
    std::vector<KeyId> required_keys;        // Pairwise: full shared set of the link
    std::optional<GroupKeyId> group;         // Group: sealing group key
    PayloadKind payload_kind = PayloadKind::Invite;
    Material128 payload;                     // zero for Invite
    std::uint64_t counter = 0;               // sender's monotone counter
    std::uint64_t tag = 0;
};

enum class RunOutcome { Established, NoChannel, IntegrityFailure, MissingGroupKey };

struct TranscriptStep {
    int step = 0;
    Envelope envelope;
};

struct ProtocolTranscript {
    GroupKeyId key_id;
    std::vector<NodeId> participants;  // owner first
    std::vector<TranscriptStep> steps;
    RunOutcome outcome = RunOutcome::Established;
    std::string failure_reason;
};

struct GroupKey {
    GroupKeyId id;
    std::vector<NodeId> members;  // sorted
    Material128 material;
};

Material128 generate_share(std::uint64_t seed, NodeId node, std::uint64_t nonce);

// XOR of shares; order independent by construction.
Material128 combine_shares(const std::vector<Material128>& shares);

enum class DeliveryStatus { Ok, Replayed, TagMismatch, CannotOpen };

// Protocol engine. Holds per-node share nonces, per-(sender, receiver) replay
// counters, the registry of established group keys, and the full envelope log
// (the adversary model treats the radio as public).
class ProtocolEngine {
  public:
    ProtocolEngine(const NetworkGraph& graph, std::uint64_t seed);

    // Forward-relay key for `selector` with the members of its forwarder list.
    // 3*n single-envelope steps for n relays: invites 1..n, share replies
    // n+1..2n, key dispatches 2n+1..3n. All parties derive the same key: the
    // XOR of the selector's and every relay's share.
    ProtocolTranscript run_fr_exchange(NodeId selector, const std::vector<NodeId>& relays);

    // Backward-relay key for `node` with the selectors that chose it. Requires
    // the fR keys established when each selector ran its exchange (setup and
    // share dispatch ride those groups). Steps: setups 1..m, share dispatches
    // m+1..2m, and one completion step 2m+1 carrying one envelope per selector.
    ProtocolTranscript run_br_exchange(NodeId node, const std::vector<NodeId>& selectors);

    // Replay/integrity gate used for every envelope the engine delivers; also
    // exposed so tests can replay captured envelopes.
    DeliveryStatus deliver(const Envelope& env);

    // Application traffic sealed under an established group key (query/reply
    // forwarding). Sealing requires the sender to hold the key; opening runs
    // the same gate as protocol envelopes.
    Envelope seal_app_envelope(NodeId from, NodeId to, const GroupKeyId& gid,
                               Material128 payload);
    DeliveryStatus open_app_envelope(const Envelope& env);

    const std::vector<ProtocolTranscript>& transcripts() const { return transcripts_; }
    std::optional<GroupKey> group_key(const GroupKeyId& id) const;
    bool node_holds(NodeId node, const GroupKeyId& id) const;
    // Every share `node` has generated so far, oldest first. This is the
    // "own shares" part of a compromised node's initial knowledge.
    std::vector<Material128> shares_of(NodeId node) const;
    const std::map<std::pair<NodeId, NodeId>, std::uint64_t>& replay_floor() const {
        return replay_floor_;
    }

  private:
    friend struct EngineProbe;  // test hook
    const NetworkGraph& graph_;
    std::uint64_t seed_;
    std::vector<std::uint64_t> share_nonce_;
    std::vector<std::uint64_t> send_counter_;
    std::map<std::pair<NodeId, NodeId>, std::uint64_t> replay_floor_;
    std::map<GroupKeyId, GroupKey> keys_;
    std::map<NodeId, std::set<GroupKeyId>> holdings_;
    std::vector<ProtocolTranscript> transcripts_;

    Material128 fresh_share(NodeId node);
    Envelope seal_pairwise(int step, NodeId from, NodeId to, PayloadKind kind,
                           Material128 payload);
    Envelope seal_group(int step, NodeId from, NodeId to, const GroupKeyId& gid,
                        PayloadKind kind, Material128 payload);
};

std::uint64_t envelope_tag(const Envelope& env, Material128 seal_material);

// Sealing material entering the tag: for pairwise envelopes a value derived
// from the link's full shared-key set; for group envelopes the group key.
Material128 pairwise_seal_material(const std::vector<KeyId>& shared);

struct AdversaryResult {
    bool derivable = false;
    std::size_t opened_envelopes = 0;
    std::size_t basis_rank = 0;  // rank of the known-material XOR span
};

// Dolev-Yao style closure. Initial knowledge: the compromised nodes' key rings
// and their own shares; every recorded envelope is observable. The closure
// opens envelopes whose sealing requirements are covered (pairwise: key ids;
// group: group key material already in the XOR span) and grows the span with
// learned payloads until stable. The target key is derivable iff its material
// lies in the final span.
AdversaryResult adversary_can_derive(const NetworkGraph& graph, const ProtocolEngine& engine,
                                     const std::vector<NodeId>& compromised,
                                     const GroupKeyId& target);

}  // namespace eakr
