#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "eakr/netmodel.hpp"

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

std::vector<KeyId> key_range(KeyId lo, KeyId hi) {  // inclusive
    std::vector<KeyId> v(hi - lo + 1);
    std::iota(v.begin(), v.end(), lo);
    return v;
}

NetworkGraph three_node_line() {
    NetworkGraph g;
    g.area_w = 300;
    g.area_h = 100;
    g.pool_size = 100;
    g.seed = 1;
    g.sink = 0;
    g.nodes.push_back(make_node(0, Tier::Sink, 0, 0, 100, key_range(0, 9)));
    g.nodes.push_back(make_node(1, Tier::L, 80, 0, 100, key_range(0, 17)));
    g.nodes.push_back(make_node(2, Tier::L, 160, 0, 100, key_range(10, 17)));
    FailureModel m;
    m.kind = FailureModel::Kind::Constant;
    m.f = 0.5;
    build_links(g, m);
    return g;
}

}  // namespace

TEST_CASE("shared_keys is the sorted ring intersection") {
    CHECK(shared_keys({1, 2, 3}, {2, 3, 4}) == std::vector<KeyId>{2, 3});
    CHECK(shared_keys({1, 2, 3}, {4, 5}) == std::vector<KeyId>{});
    CHECK(shared_keys({}, {1}) == std::vector<KeyId>{});
    CHECK(shared_keys({5, 9, 40}, {5, 9, 40}) == std::vector<KeyId>{5, 9, 40});
}

TEST_CASE("links require both radio range and a nonempty ring intersection") {
    const NetworkGraph g = three_node_line();
    REQUIRE(g.links.size() == 2);

    const LinkInfo* sa = g.link_between(0, 1);
    REQUIRE(sa != nullptr);
    CHECK(sa->key_count() == 10);
    CHECK(sa->shared == key_range(0, 9));
    CHECK(sa->distance == doctest::Approx(80));
    CHECK(sa->failure == 0.5);

    const LinkInfo* ab = g.link_between(1, 2);
    REQUIRE(ab != nullptr);
    CHECK(ab->key_count() == 8);
    CHECK(ab->shared == key_range(10, 17));

    // 0 and 2: distance 160 > 100 and disjoint rings.
    CHECK(g.link_between(0, 2) == nullptr);
    CHECK(g.fully_connected());
}

TEST_CASE("an isolated node breaks full connectivity") {
    NetworkGraph g = three_node_line();
    g.nodes.push_back(make_node(3, Tier::L, 0, 99, 1, {50}));
    FailureModel m;
    build_links(g, m);
    CHECK_FALSE(g.fully_connected());
}

TEST_CASE("generated deployment honors tier counts, rings and determinism") {
    DeploymentParams p;
    p.node_count = 100;
    p.h_fraction = 0.15;
    p.seed = 7;
    const NetworkGraph g = generate_deployment(p);

    REQUIRE(g.nodes.size() == 100);
    CHECK(g.sink == 0);
    CHECK(g.nodes[0].tier == Tier::Sink);
    int h = 0, l = 0;
    for (const NodeSpec& n : g.nodes) {
        if (n.tier == Tier::H) ++h;
        if (n.tier == Tier::L) ++l;
        CHECK(n.pos.x >= 0);
        CHECK(n.pos.x <= p.area_w);
        CHECK(n.pos.y >= 0);
        CHECK(n.pos.y <= p.area_h);
        const std::size_t want = n.tier == Tier::L ? p.k1 : p.k2;
        CHECK(n.ring.size() == want);
        CHECK(std::is_sorted(n.ring.begin(), n.ring.end()));
        CHECK(n.ring.back() < p.pool_size);
        CHECK(n.range == (n.tier == Tier::L ? p.range_l : p.range_h));
    }
    CHECK(h == 15);
    CHECK(l == 84);
    // Sink defaults to the area center.
    CHECK(g.nodes[0].pos.x == doctest::Approx(p.area_w / 2));
    CHECK(g.nodes[0].pos.y == doctest::Approx(p.area_h / 2));

    CHECK(graph_to_json(generate_deployment(p)) == graph_to_json(g));
    DeploymentParams p2 = p;
    p2.seed = 8;
    CHECK(graph_digest(generate_deployment(p2)) != graph_digest(g));

    DeploymentParams p3 = p;
    p3.sink_position = Point{10, 20};
    const NetworkGraph g3 = generate_deployment(p3);
    CHECK(g3.nodes[0].pos.x == 10);
    CHECK(g3.nodes[0].pos.y == 20);
}

TEST_CASE("every link failure respects the model") {
    DeploymentParams p;
    p.node_count = 60;
    p.seed = 3;

    SUBCASE("constant") {
        p.failure.kind = FailureModel::Kind::Constant;
        p.failure.f = 0.25;
        const NetworkGraph g = generate_deployment(p);
        REQUIRE(!g.links.empty());
        for (const LinkInfo& l : g.links) CHECK(l.failure == 0.25);
    }
    SUBCASE("uniform stays in bounds and varies") {
        p.failure.kind = FailureModel::Kind::Uniform;
        p.failure.lo = 0.2;
        p.failure.hi = 0.6;
        const NetworkGraph g = generate_deployment(p);
        REQUIRE(g.links.size() > 10);
        double lo = 1, hi = 0;
        for (const LinkInfo& l : g.links) {
            CHECK(l.failure >= 0.2);
            CHECK(l.failure < 0.6);
            lo = std::min(lo, l.failure);
            hi = std::max(hi, l.failure);
        }
        CHECK(hi - lo > 0.05);
    }
    SUBCASE("distance_linear is scale * distance / gate range") {
        p.failure.kind = FailureModel::Kind::DistanceLinear;
        p.failure.scale = 0.5;
        const NetworkGraph g = generate_deployment(p);
        REQUIRE(!g.links.empty());
        for (const LinkInfo& l : g.links) {
            const double gate = std::min(g.nodes[l.u].range, g.nodes[l.v].range);
            CHECK(l.failure == doctest::Approx(0.5 * l.distance / gate));
            CHECK(l.failure < 1.0);
        }
    }
}

TEST_CASE("mean ring overlap matches the hypergeometric expectation") {
    // Two rings of 30 from a 1000-key pool share 30*30/1000 = 0.9 keys on
    // average. Estimated over independent deployments; 4 sigma of the sample
    // mean is well inside the +/-0.05 tolerance.
    DeploymentParams p;
    p.node_count = 2;
    p.h_fraction = 0;
    p.k1 = 30;
    p.k2 = 30;  // the sink draws k2; equalize so every pair is 30-vs-30
    p.pool_size = 1000;
    const int trials = 6000;
    double sum = 0, sum_sq = 0;
    for (int t = 0; t < trials; ++t) {
        p.seed = static_cast<std::uint64_t>(t + 1);
        const NetworkGraph g = generate_deployment(p);
        const auto overlap =
            static_cast<double>(shared_keys(g.nodes[0].ring, g.nodes[1].ring).size());
        sum += overlap;
        sum_sq += overlap * overlap;
    }
    const double mean = sum / trials;
    const double var = (sum_sq - sum * sum / trials) / (trials - 1);
    const double se = std::sqrt(var / trials);
    CHECK(std::abs(mean - 0.9) < std::max(4 * se, 1e-6));
    CHECK(std::abs(mean - 0.9) < 0.05);
}

TEST_CASE("secure-neighbor fraction matches the ring-disjointness formula") {
    // P(two 30-rings from 1000 intersect) = 1 - prod_{i<30} (970-i)/(1000-i).
    double miss = 1.0;
    for (int i = 0; i < 30; ++i) miss *= (970.0 - i) / (1000.0 - i);
    const double p0 = 1.0 - miss;

    DeploymentParams p;
    p.node_count = 40;
    p.h_fraction = 0;
    p.k1 = 30;
    p.k2 = 30;
    p.pool_size = 1000;
    p.area_w = 200;
    p.area_h = 200;
    p.range_l = 300;  // every pair in radio range: links depend on rings only
    p.range_h = 300;

    std::uint64_t in_range = 0, linked = 0;
    for (int t = 0; t < 120; ++t) {
        p.seed = static_cast<std::uint64_t>(t + 1);
        const NetworkGraph g = generate_deployment(p);
        in_range += g.nodes.size() * (g.nodes.size() - 1) / 2;
        linked += g.links.size();
    }
    const double p_hat = static_cast<double>(linked) / static_cast<double>(in_range);
    const double se = std::sqrt(p0 * (1 - p0) / static_cast<double>(in_range));
    CHECK(std::abs(p_hat - p0) < 4 * se);
}

TEST_CASE("parameter validation rejects bad inputs") {
    DeploymentParams p;
    p.node_count = 1;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
    p = {};
    p.h_fraction = 1.5;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
    p = {};
    p.k1 = 80;
    p.k2 = 60;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
    p = {};
    p.k2 = 2000;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
    p = {};
    p.area_w = 0;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
    p = {};
    p.failure.f = 1.0;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
    p = {};
    p.failure.kind = FailureModel::Kind::Uniform;
    p.failure.lo = 0.7;
    p.failure.hi = 0.3;
    CHECK_THROWS_AS(generate_deployment(p), ConfigError);
}

TEST_CASE("exports are well-formed") {
    const NetworkGraph g = three_node_line();
    const std::string js = graph_to_json(g);
    CHECK(js.find("\"links\"") != std::string::npos);
    CHECK(js.find("\"ring\"") != std::string::npos);
    const std::string dot = graph_to_dot(g);
    CHECK(dot.find("graph") != std::string::npos);
    CHECK(dot.find("--") != std::string::npos);
    CHECK(graph_digest(g) == graph_digest(three_node_line()));
}
