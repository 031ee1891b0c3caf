#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "eakr/keyproto.hpp"
#include "eakr/netmodel.hpp"
#include "eakr/rng.hpp"

using namespace eakr;

namespace {

NodeSpec make_node(NodeId id, Tier tier, double x, double y, double range,
                   std::vector<KeyId> ring) {
    NodeSpec n;
    n.id = id;
    n.tier = tier;
    n.pos = {x, y};
    n.range = range;
    n.ring = std::move(ring);
    return n;
}

std::vector<KeyId> key_range(KeyId lo, KeyId hi) {
    std::vector<KeyId> v(hi - lo + 1);
    std::iota(v.begin(), v.end(), lo);
    return v;
}

NetworkGraph graph_from_nodes(std::vector<NodeSpec> nodes, double f = 0.5) {
    NetworkGraph g;
    g.area_w = 2000;
    g.area_h = 2000;
    g.pool_size = 1000;
    g.seed = 1;
    g.sink = 0;
    g.nodes = std::move(nodes);
    FailureModel m;
    m.kind = FailureModel::Kind::Constant;
    m.f = f;
    build_links(g, m);
    return g;
}

// Selector 3 with relays 1 and 2; node 0 is the sink the relays forward to.
// Link key sets: 3-1 = {0,1}, 3-2 = {2..7}, 1-0 = {8..17}, 2-0 = {18..23}.
NetworkGraph four_node_fixture(std::vector<KeyId> fourth_ring) {
    std::vector<KeyId> ring1 = {0, 1};
    for (KeyId k : key_range(8, 17)) ring1.push_back(k);
    std::vector<KeyId> ring2 = key_range(2, 7);
    for (KeyId k : key_range(18, 23)) ring2.push_back(k);
    return graph_from_nodes({
        make_node(0, Tier::Sink, 0, 0, 100, std::move(fourth_ring)),
        make_node(1, Tier::L, 0, 80, 100, ring1),
        make_node(2, Tier::L, 80, 0, 100, ring2),
        make_node(3, Tier::L, 80, 80, 100, key_range(0, 7)),
    });
}

// Brute-force reference: iteratively open envelopes, deciding group-key
// knowledge by enumerating every XOR combination of collected materials.
struct BruteForce {
    std::vector<Material128> atoms;
    std::set<KeyId> key_ids;

    void add_atom(Material128 m) {
        if (m.is_zero()) return;
        if (std::find(atoms.begin(), atoms.end(), m) == atoms.end()) atoms.push_back(m);
    }

    bool spans(Material128 target) const {
        REQUIRE(atoms.size() <= 20);
        const std::size_t combos = std::size_t{1} << atoms.size();
        for (std::size_t mask = 0; mask < combos; ++mask) {
            Material128 acc;
            for (std::size_t i = 0; i < atoms.size(); ++i)
                if (mask & (std::size_t{1} << i)) acc ^= atoms[i];
            if (acc == target) return true;
        }
        return false;
    }

    bool run(const NetworkGraph& graph, const ProtocolEngine& engine,
             const std::vector<NodeId>& compromised, const GroupKeyId& target) {
        for (NodeId c : compromised) {
            for (KeyId k : graph.nodes[c].ring) key_ids.insert(k);
            for (Material128 s : engine.shares_of(c)) add_atom(s);
        }
        std::vector<const Envelope*> envelopes;
        for (const auto& tr : engine.transcripts())
            for (const auto& st : tr.steps) envelopes.push_back(&st.envelope);
        std::vector<char> opened(envelopes.size(), 0);
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < envelopes.size(); ++i) {
                if (opened[i]) continue;
                const Envelope& e = *envelopes[i];
                bool can = false;
                if (e.mode == SealMode::Pairwise) {
                    can = std::all_of(e.required_keys.begin(), e.required_keys.end(),
                                      [&](KeyId k) { return key_ids.count(k) > 0; });
                } else {
                    const auto gk = engine.group_key(*e.group);
                    can = gk && spans(gk->material);
                }
                if (!can) continue;
                opened[i] = 1;
                progress = true;
                add_atom(e.payload);
            }
        }
        const auto gk = engine.group_key(target);
        return gk && spans(gk->material);
    }
};

}  // namespace

TEST_CASE("shares are deterministic per (seed, node, nonce) and collision free") {
    const Material128 a = generate_share(1, 5, 1);
    CHECK(a == generate_share(1, 5, 1));
    CHECK(a != generate_share(1, 5, 2));
    CHECK(a != generate_share(1, 6, 1));
    CHECK(a != generate_share(2, 5, 1));

    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (std::uint64_t n = 1; n <= 10000; ++n) {
        const Material128 s = generate_share(7, 3, n);
        CHECK(seen.insert({s.hi, s.lo}).second);
    }
}

TEST_CASE("combining shares is xor: identity, involution, permutation invariance") {
    const Material128 x{0, 1}, y{0, 2}, z{0, 4};
    CHECK(combine_shares({x, y, z}) == Material128{0, 7});
    CHECK(combine_shares({x, x}).is_zero());
    CHECK(combine_shares({x, y, z}) == combine_shares({z, x, y}));
    CHECK_THROWS(combine_shares({}));

    CounterRng rng(9, 9);
    std::vector<Material128> shares;
    for (int i = 0; i < 8; ++i) shares.push_back({rng.next_u64(), rng.next_u64()});
    auto shuffled = shares;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
    CHECK(combine_shares(shares) == combine_shares(shuffled));
}

TEST_CASE("forward-relay exchange: 3n steps, key is the xor of all shares") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    const auto tr = engine.run_fr_exchange(3, {1, 2});
    REQUIRE(tr.outcome == RunOutcome::Established);
    CHECK(tr.key_id == GroupKeyId{"fr", 3});
    CHECK(tr.participants == std::vector<NodeId>{3, 1, 2});
    REQUIRE(tr.steps.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(tr.steps[static_cast<std::size_t>(i)].step == i + 1);
    CHECK(tr.steps[0].envelope.payload_kind == PayloadKind::Invite);
    CHECK(tr.steps[0].envelope.payload.is_zero());
    CHECK(tr.steps[2].envelope.payload_kind == PayloadKind::ShareReply);
    CHECK(tr.steps[4].envelope.payload_kind == PayloadKind::KeyDispatch);

    const auto key = engine.group_key({"fr", 3});
    REQUIRE(key.has_value());
    CHECK(key->members == std::vector<NodeId>{1, 2, 3});
    CHECK_FALSE(key->material.is_zero());
    for (NodeId m : key->members) CHECK(engine.node_holds(m, key->id));
    CHECK_FALSE(engine.node_holds(0, key->id));

    // Each relay reconstructs the key as (its reply share) xor (its dispatch).
    for (std::size_t i = 0; i < 2; ++i) {
        const Envelope& reply = tr.steps[2 + i].envelope;
        const Envelope& dispatch = tr.steps[4 + i].envelope;
        CHECK(reply.sender == dispatch.receiver);
        CHECK((reply.payload ^ dispatch.payload) == key->material);
    }
    // The selector's own share closes the xor.
    Material128 replies_acc = tr.steps[2].envelope.payload ^ tr.steps[3].envelope.payload;
    const auto own = engine.shares_of(3);
    REQUIRE(own.size() == 1);
    CHECK((replies_acc ^ own[0]) == key->material);
}

TEST_CASE("every protocol envelope is sealed under the full link key set") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    const auto tr = engine.run_fr_exchange(3, {1, 2});
    REQUIRE(tr.outcome == RunOutcome::Established);
    for (const auto& st : tr.steps) {
        const Envelope& e = st.envelope;
        REQUIRE(e.mode == SealMode::Pairwise);
        const LinkInfo* link = g.link_between(e.sender, e.receiver);
        REQUIRE(link != nullptr);
        CHECK(e.required_keys == link->shared);
        CHECK(e.tag == envelope_tag(e, pairwise_seal_material(e.required_keys)));
    }
}

TEST_CASE("forward-relay exchange failures") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);

    const auto no_relays = engine.run_fr_exchange(3, {});
    CHECK(no_relays.outcome == RunOutcome::NoChannel);
    CHECK(no_relays.steps.empty());

    // 0 and 3 share no link (distance 113 > 100).
    const auto no_link = engine.run_fr_exchange(3, {1, 0});
    CHECK(no_link.outcome == RunOutcome::NoChannel);
    CHECK_FALSE(engine.group_key({"fr", 3}).has_value());
}

TEST_CASE("backward-relay exchange: 2m+1 steps over the selectors' group keys") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    // Three selectors of node 0: 1, 2 (singleton lists) and 3 via {1,2} is not
    // adjacent to 0, so build selector groups 1->{0}, 2->{0} and then key
    // bR(0) with selectors {1, 2}.
    REQUIRE(engine.run_fr_exchange(1, {0}).outcome == RunOutcome::Established);
    REQUIRE(engine.run_fr_exchange(2, {0}).outcome == RunOutcome::Established);

    const auto tr = engine.run_br_exchange(0, {1, 2});
    REQUIRE(tr.outcome == RunOutcome::Established);
    CHECK(tr.key_id == GroupKeyId{"br", 0});
    CHECK(tr.participants == std::vector<NodeId>{0, 1, 2});
    // m = 2: setups 1..2, share dispatches 3..4, one completion step 5 with
    // one envelope per selector: 6 envelopes, highest step index 5.
    REQUIRE(tr.steps.size() == 6);
    CHECK(tr.steps.back().step == 5);
    int completion_envelopes = 0;
    for (const auto& st : tr.steps) {
        REQUIRE(st.envelope.mode == SealMode::Group);
        if (st.step == 5) {
            ++completion_envelopes;
            CHECK(st.envelope.payload_kind == PayloadKind::KeyDispatch);
        }
    }
    CHECK(completion_envelopes == 2);

    const auto key = engine.group_key({"br", 0});
    REQUIRE(key.has_value());
    CHECK(key->members == std::vector<NodeId>{0, 1, 2});
    for (NodeId m : key->members) CHECK(engine.node_holds(m, key->id));

    // Each selector reconstructs: its share dispatch xor its completion.
    for (std::size_t i = 0; i < 2; ++i) {
        const Envelope& share_dispatch = tr.steps[2 + i].envelope;
        const Envelope& completion = tr.steps[4 + i].envelope;
        CHECK(share_dispatch.sender == completion.receiver);
        CHECK((share_dispatch.payload ^ completion.payload) == key->material);
        // Sealed under the sender's forward-relay group.
        REQUIRE(share_dispatch.group.has_value());
        CHECK(share_dispatch.group->kind == "fr");
        CHECK(share_dispatch.group->owner == share_dispatch.sender);
    }
}

TEST_CASE("backward-relay exchange needs every selector's group key") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    REQUIRE(engine.run_fr_exchange(1, {0}).outcome == RunOutcome::Established);
    const auto tr = engine.run_br_exchange(0, {1, 2});  // fr(2) never keyed
    CHECK(tr.outcome == RunOutcome::MissingGroupKey);
    CHECK_FALSE(engine.group_key({"br", 0}).has_value());

    CHECK(engine.run_br_exchange(0, {}).outcome == RunOutcome::NoChannel);
}

TEST_CASE("replay and tampering are rejected by the delivery gate") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    const auto tr = engine.run_fr_exchange(3, {1, 2});
    REQUIRE(tr.outcome == RunOutcome::Established);

    // Replaying any captured envelope trips the counter floor.
    for (const auto& st : tr.steps) CHECK(engine.deliver(st.envelope) == DeliveryStatus::Replayed);

    // A bit flip anywhere breaks the tag before the counter is consulted.
    Envelope tampered = tr.steps[2].envelope;
    tampered.payload.lo ^= 1;
    tampered.counter += 1000;  // fresh counter, so only the tag can reject it
    CHECK(engine.deliver(tampered) == DeliveryStatus::TagMismatch);

    Envelope wrong_kind = tr.steps[2].envelope;
    wrong_kind.payload_kind = PayloadKind::KeyDispatch;
    wrong_kind.counter += 1000;
    CHECK(engine.deliver(wrong_kind) == DeliveryStatus::TagMismatch);
}

TEST_CASE("application envelopes ride established group keys") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    REQUIRE(engine.run_fr_exchange(3, {1, 2}).outcome == RunOutcome::Established);

    Envelope env = engine.seal_app_envelope(3, 1, {"fr", 3}, {7, 9});
    CHECK(env.mode == SealMode::Group);
    CHECK(env.payload_kind == PayloadKind::AppData);
    CHECK(engine.open_app_envelope(env) == DeliveryStatus::Ok);
    CHECK(engine.open_app_envelope(env) == DeliveryStatus::Replayed);

    Envelope bad = engine.seal_app_envelope(3, 2, {"fr", 3}, {7, 9});
    bad.payload.hi ^= 2;
    CHECK(engine.open_app_envelope(bad) == DeliveryStatus::TagMismatch);

    CHECK_THROWS(engine.seal_app_envelope(3, 1, {"br", 3}, {1, 2}));  // not established
    CHECK_THROWS(engine.seal_app_envelope(0, 1, {"fr", 3}, {1, 2}));  // 0 not a member
}

TEST_CASE("four-node fixture: coverage of one full link key set decides derivability") {
    // fr(3) has members {3, 1, 2} over links 3-1 = {0,1} and 3-2 = {2..7}.
    auto run_case = [](std::vector<KeyId> fourth_ring, std::vector<NodeId> compromised) {
        NetworkGraph g = four_node_fixture(std::move(fourth_ring));
        ProtocolEngine engine(g, 42);
        REQUIRE(engine.run_fr_exchange(3, {1, 2}).outcome == RunOutcome::Established);
        const AdversaryResult res =
            adversary_can_derive(g, engine, compromised, {"fr", 3});
        BruteForce oracle;
        const bool expect = oracle.run(g, engine, compromised, {"fr", 3});
        CHECK(res.derivable == expect);
        return res.derivable;
    };

    // Nobody compromised: underivable.
    CHECK_FALSE(run_case(key_range(0, 23), {}));
    // Any member: derivable.
    CHECK(run_case(key_range(0, 23), {3}));
    CHECK(run_case(key_range(0, 23), {1}));
    CHECK(run_case(key_range(0, 23), {2}));
    // The fourth node holding every key of both selector links: derivable.
    CHECK(run_case(key_range(0, 23), {0}));
    // Holding every key of ONE link is already enough (reply xor dispatch).
    {
        std::vector<KeyId> ring = key_range(8, 23);  // own links
        ring.push_back(0);
        ring.push_back(1);  // full 3-1 set, nothing from 3-2
        std::sort(ring.begin(), ring.end());
        CHECK(run_case(ring, {0}));
    }
    // Missing at least one key from each link: underivable.
    {
        std::vector<KeyId> ring = key_range(8, 23);
        ring.push_back(0);  // 3-1 missing key 1
        for (KeyId k : key_range(2, 6)) ring.push_back(k);  // 3-2 missing key 7
        std::sort(ring.begin(), ring.end());
        CHECK_FALSE(run_case(ring, {0}));
    }
}

TEST_CASE("closure equals brute force and the link-coverage characterization") {
    // Random small deployments; every established key is checked against the
    // exhaustive subset-xor oracle and against the clean characterization:
    //   fr(u) derivable <=> some u-relay link's key set is fully covered;
    //   br(u) derivable <=> some selector's fr key is derivable that way.
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        DeploymentParams p;
        p.node_count = 7;
        p.h_fraction = 0.3;
        p.area_w = 220;
        p.area_h = 220;
        p.range_l = 140;
        p.range_h = 160;
        p.pool_size = 60;
        p.k1 = 12;
        p.k2 = 20;
        p.seed = seed;
        const NetworkGraph g = generate_deployment(p);
        ProtocolEngine engine(g, seed);

        // Key a couple of small groups per graph (kept tiny so the oracle's
        // 2^atoms enumeration stays feasible).
        std::map<NodeId, std::vector<NodeId>> fr_relays;
        for (NodeId u = 1; u < g.node_count() && fr_relays.size() < 2; ++u) {
            std::vector<NodeId> relays;
            for (const auto& [v, li] : g.adjacency[u]) {
                (void)li;
                if (relays.size() < 2) relays.push_back(v);
            }
            if (relays.empty()) continue;
            if (engine.run_fr_exchange(u, relays).outcome == RunOutcome::Established)
                fr_relays[u] = relays;
        }
        if (fr_relays.empty()) continue;

        CounterRng pick(seed, 555);
        for (int trial = 0; trial < 6; ++trial) {
            std::vector<NodeId> compromised;
            for (NodeId c = 0; c < g.node_count(); ++c)
                if (pick.next_below(3) == 0) compromised.push_back(c);

            std::set<KeyId> known;
            for (NodeId c : compromised)
                known.insert(g.nodes[c].ring.begin(), g.nodes[c].ring.end());

            for (const auto& [owner, relays] : fr_relays) {
                const GroupKeyId target{"fr", owner};
                const AdversaryResult res = adversary_can_derive(g, engine, compromised, target);
                BruteForce oracle;
                CHECK(res.derivable == oracle.run(g, engine, compromised, target));

                bool covered = false;
                for (NodeId r : relays) {
                    const LinkInfo* link = g.link_between(owner, r);
                    REQUIRE(link != nullptr);
                    covered |= std::all_of(link->shared.begin(), link->shared.end(),
                                           [&](KeyId k) { return known.count(k) > 0; });
                }
                CHECK(res.derivable == covered);
            }
        }
    }
}

TEST_CASE("sender counters increase monotonically across the whole log") {
    NetworkGraph g = four_node_fixture(key_range(0, 23));
    ProtocolEngine engine(g, 42);
    REQUIRE(engine.run_fr_exchange(3, {1, 2}).outcome == RunOutcome::Established);
    REQUIRE(engine.run_fr_exchange(1, {0}).outcome == RunOutcome::Established);
    REQUIRE(engine.run_fr_exchange(2, {0}).outcome == RunOutcome::Established);
    REQUIRE(engine.run_br_exchange(0, {1, 2}).outcome == RunOutcome::Established);

    std::map<NodeId, std::uint64_t> last;
    for (const auto& tr : engine.transcripts()) {
        for (const auto& st : tr.steps) {
            const Envelope& e = st.envelope;
            auto it = last.find(e.sender);
            if (it != last.end()) CHECK(e.counter > it->second);
            last[e.sender] = e.counter;
        }
    }
}
