#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "../support/oracles.hpp"
#include "fixtures.hpp"
#include "hpn/invariants.hpp"
#include "hpn/metamodel.hpp"
#include "hpn/reachability.hpp"

using namespace hpn;

namespace {

void expect_same_graph(const ReachabilityGraph& a, const ReachabilityGraph& b) {
    ASSERT_EQ(a.node_count(), b.node_count());
    for (std::uint32_t n = 0; n < a.node_count(); ++n)
        EXPECT_EQ(a.node(n), b.node(n));
    EXPECT_EQ(a.edges(), b.edges());
    EXPECT_EQ(a.blocked(), b.blocked());
    EXPECT_EQ(a.expanded_count(), b.expanded_count());
    EXPECT_EQ(a.truncated(), b.truncated());
    EXPECT_EQ(a.branch_cap_exceeded(), b.branch_cap_exceeded());
}

PetriNet fork_net(std::size_t k) {
    NetBuilder b;
    auto start = b.add_place("start", 1);
    auto end = b.add_place("end");
    auto fork = b.add_transition("fork"), join = b.add_transition("join"), back = b.add_transition("back");
    b.add_arc(start, fork);
    b.add_arc(join, end);
    b.add_arc(end, back);
    b.add_arc(back, start);
    for (std::size_t i = 0; i < k; ++i) {
        auto a = b.add_place("a" + std::to_string(i)), c = b.add_place("b" + std::to_string(i));
        auto t = b.add_transition("s" + std::to_string(i));
        b.add_arc(fork, a);
        b.add_arc(a, t);
        b.add_arc(t, c);
        b.add_arc(c, join);
    }
    return b.build();
}

} // namespace

TEST(Store, EncodeAndDeduplicate) {
    MarkingStore store(3);
    std::vector<std::uint8_t> buf;
    std::vector<std::uint32_t> m = {1, 300, 0};
    MarkingStore::encode(m, buf);
    auto h = MarkingStore::hash_bytes(buf);
    auto [id, inserted] = store.insert(buf, h);
    EXPECT_TRUE(inserted);
    EXPECT_FALSE(store.insert(buf, h).second);
    EXPECT_EQ(store.at(id), (Marking{1, 300, 0}));
    EXPECT_EQ(store.find(Marking{1, 300, 0}), id);
    EXPECT_FALSE(store.find(Marking{1, 3, 0}).has_value());
    for (std::uint32_t i = 0; i < 5000; ++i) {
        std::vector<std::uint32_t> v = {i, i * 7, i % 3};
        MarkingStore::encode(v, buf);
        store.insert(buf, MarkingStore::hash_bytes(buf));
    }
    EXPECT_EQ(store.size(), 5001u);
    EXPECT_EQ(store.at(5000), (Marking{4999, 4999 * 7, 4999 % 3}));
}

TEST(Graph, BehaviourTable) {
    auto net = fixtures::behaviour_extended();
    auto g = build_graph(net);
    ASSERT_EQ(g.node_count(), 6u);
    for (std::uint32_t n = 0; n < 6; ++n) {
        Marking m(6);
        m[n] = 1;
        EXPECT_EQ(g.node(n), m);
    }
    std::vector<std::tuple<int, std::string, int>> edges;
    for (const auto& e : g.edges())
        edges.emplace_back(e.from, net.transition(e.transition).name, e.to);
    std::vector<std::tuple<int, std::string, int>> table = {{0, "t1", 1}, {1, "t2", 2}, {2, "t3", 3}, {3, "t4", 4},
                                                            {4, "t5", 1}, {4, "t6", 5}, {5, "t7", 0}};
    EXPECT_EQ(edges, table);
}

TEST(Graph, SystemTwoMarkings) {
    auto net = standalone_net(generate_template(SystemTemplate{1}, "s"));
    auto g = build_graph(net);
    ASSERT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.node(0), (Marking{1, 0}));
    EXPECT_EQ(g.node(1), (Marking{0, 1}));
}

TEST(Graph, PurifiedCommMatchesNaiveEnumerator) {
    for (auto mode : all_comm_modes()) {
        auto net = fixtures::pure_comm(mode);
        ReachOptions ro;
        ro.mode = GuardMode::Valued;
        auto g = build_graph(net, ro);
        auto naive = oracle::naive_valued_reachability(net);
        ASSERT_TRUE(naive.complete);
        std::set<oracle::Counts> nodes;
        for (std::uint32_t n = 0; n < g.node_count(); ++n)
            nodes.insert(oracle::counts(g.node(n)));
        EXPECT_EQ(nodes, naive.nodes) << to_string(mode);
        EXPECT_EQ(g.edges().size(), naive.edges.size()) << to_string(mode);
        EXPECT_FALSE(naive.deadlock);
        EXPECT_EQ(naive.max_tokens, 1u);
    }
    // Without guards and priorities the purified net is unbounded.
    ReachOptions ro;
    ro.state_limit = 500;
    auto net = fixtures::pure_comm({Timeout::Finite, Timeout::Finite});
    EXPECT_TRUE(build_graph(net, ro).truncated());
    EXPECT_FALSE(oracle::naive_reachability(net, 500).complete);
}

TEST(Graph, NaiveOracleEquivalence) {
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int run = 0; run < 300; ++run) {
        auto net = oracle::random_net(rng, {.max_places = 8, .max_transitions = 6, .max_weight = 2, .max_tokens = 2,
                                            .pure = false});
        ReachOptions ro;
        ro.state_limit = 3000;
        auto g = build_graph(net, ro);
        auto naive = oracle::naive_reachability(net, 3000);
        if (g.truncated() || !naive.complete)
            continue;
        ++checked;
        std::set<oracle::Counts> nodes;
        for (std::uint32_t n = 0; n < g.node_count(); ++n)
            nodes.insert(oracle::counts(g.node(n)));
        EXPECT_EQ(nodes, naive.nodes);
        EXPECT_EQ(g.edges().size(), naive.edges.size());
        auto v = check_properties(g);
        EXPECT_EQ(v.deadlock_free, !naive.deadlock);
        EXPECT_EQ(v.safe, naive.max_tokens <= 1);
    }
    EXPECT_GT(checked, 100);
}

TEST(Graph, Closure) {
    std::mt19937_64 rng(78);
    for (int run = 0; run < 100; ++run) {
        auto net = oracle::random_net(rng, {.max_tokens = 2});
        ReachOptions ro;
        ro.state_limit = 2000;
        auto g = build_graph(net, ro);
        if (g.truncated())
            continue;
        for (std::uint32_t n = 0; n < g.node_count(); ++n) {
            auto m = g.node(n);
            auto out = g.out_edges(n);
            auto e = enabled(net, m);
            ASSERT_EQ(out.size(), e.size());
            for (std::size_t i = 0; i < e.size(); ++i) {
                EXPECT_EQ(out[i].transition, e[i]);
                EXPECT_EQ(g.node(out[i].to), fire(net, m, e[i]));
            }
        }
    }
}

TEST(Graph, ParallelEqualsSerial) {
    std::mt19937_64 rng(79);
    for (int run = 0; run < 100; ++run) {
        auto net = oracle::random_net(rng, {.max_places = 7, .max_transitions = 7, .max_tokens = 2});
        ReachOptions ro;
        ro.state_limit = 1 + rng() % 3000;
        expect_same_graph(build_graph(net, ro), build_graph_serial(net, ro));
    }
    for (auto mode : all_comm_modes()) {
        ReachOptions ro;
        ro.mode = GuardMode::Valued;
        auto net = fixtures::pure_comm(mode);
        expect_same_graph(build_graph(net, ro), build_graph_serial(net, ro));
        ro.threads = 3;
        expect_same_graph(build_graph(net, ro), build_graph_serial(net, ro));
    }
    auto net = fork_net(8);
    expect_same_graph(build_graph(net), build_graph_serial(net));
}

TEST(Graph, TruncationReported) {
    NetBuilder b;
    auto p = b.add_place("p", 1);
    auto t = b.add_transition("t");
    b.add_arc(p, t);
    b.add_arc(t, p, 2);
    ReachOptions ro;
    ro.state_limit = 10;
    auto g = build_graph(b.build(), ro);
    EXPECT_TRUE(g.truncated());
    EXPECT_EQ(g.node_count(), 10u);
    auto v = check_properties(g);
    EXPECT_FALSE(v.definitive);
    EXPECT_FALSE(v.safe);
}

TEST(Graph, ValuedModeBranching) {
    NetBuilder b;
    auto p = b.add_place("p", 1), q = b.add_place("q"), r = b.add_place("r");
    auto t1 = b.add_transition("t1", Guard::parse("a"));
    auto t2 = b.add_transition("t2", Guard::parse("b"));
    b.add_arc(p, t1);
    b.add_arc(t1, q);
    b.add_arc(p, t2);
    b.add_arc(t2, r);
    auto net = b.build();
    ReachOptions ro;
    ro.mode = GuardMode::Valued;
    auto g = build_graph(net, ro);
    EXPECT_EQ(g.node_count(), 3u);
    ASSERT_FALSE(g.blocked().empty());
    EXPECT_EQ(g.blocked()[0].node, 0u);
    EXPECT_EQ(g.blocked()[0].valuation, (Valuation{{"a", false}, {"b", false}}));
    auto v = check_properties(g);
    EXPECT_FALSE(v.deadlock_free);
    EXPECT_EQ(v.deadlock_node, 0u);
    EXPECT_EQ(v.deadlock_valuation, (Valuation{{"a", false}, {"b", false}}));

    ro.valuations = std::vector<Valuation>{{{"a", true}, {"b", false}}};
    auto g2 = build_graph(net, ro);
    EXPECT_EQ(g2.node_count(), 2u);
    EXPECT_EQ(g2.node(1), (Marking{0, 1, 0}));

    ro.valuations.reset();
    ro.max_branches = 2;
    auto g3 = build_graph(net, ro);
    EXPECT_TRUE(g3.branch_cap_exceeded());
    expect_same_graph(g3, build_graph_serial(net, ro));
}

TEST(Properties, SinkDeadlock) {
    NetBuilder b;
    auto p = b.add_place("p", 1);
    auto t = b.add_transition("t");
    b.add_arc(p, t);
    auto g = build_graph(b.build());
    ASSERT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.out_edges(0).size(), 1u);
    EXPECT_EQ(g.out_edges(1).size(), 0u);
    auto v = check_properties(g);
    EXPECT_FALSE(v.deadlock_free);
    EXPECT_EQ(v.deadlock_node, 1u);
    EXPECT_FALSE(v.live);
}

TEST(Properties, AgentWeightedSum) {
    for (std::size_t s = 1; s <= 5; ++s) {
        auto net = standalone_net(generate_template(AgentTemplate{s}, "a"));
        auto g = build_graph(net);
        ASSERT_EQ(g.node_count(), 3u);
        std::vector<std::int64_t> y(net.place_count(), 1);
        y.front() = y.back() = static_cast<std::int64_t>(s);
        EXPECT_TRUE(invariant_holds_everywhere(g, y));
        for (std::uint32_t n = 0; n < 3; ++n) {
            std::int64_t sum = 0;
            for (std::size_t p = 0; p < y.size(); ++p)
                sum += y[p] * g.node(n)[p];
            EXPECT_EQ(sum, static_cast<std::int64_t>(s));
        }
        auto v = check_properties(g);
        EXPECT_TRUE(v.safe);
        EXPECT_TRUE(v.deadlock_free);
        EXPECT_TRUE(v.live);
    }
}

TEST(Properties, CommNetRegions) {
    for (auto mode : all_comm_modes()) {
        auto net = fixtures::pure_comm(mode);
        ASSERT_EQ(net.initial_marking(), fixtures::comm_m0);
        ReachOptions ro;
        ro.mode = GuardMode::Valued;
        auto g = build_graph(net, ro);
        auto basis = minimal_place_invariants(incidence_matrix(net), net.initial_marking());
        auto v = check_properties(g, &basis);
        EXPECT_TRUE(v.safe) << to_string(mode);
        EXPECT_TRUE(v.deadlock_free) << to_string(mode);
        EXPECT_TRUE(v.conservative_confirmed.value_or(false));
        EXPECT_TRUE(invariant_holds_everywhere(g, fixtures::y1_model));
        EXPECT_TRUE(invariant_holds_everywhere(g, fixtures::y2_model));
        // Both regions can be active at once.
        bool both = false;
        for (std::uint32_t n = 0; n < g.node_count(); ++n) {
            auto m = g.node(n);
            both |= (m[1] + m[2] + m[3] > 0) && (m[8] + m[9] + m[10] > 0);
        }
        EXPECT_TRUE(both) << to_string(mode);
    }
}

TEST(Properties, LivenessBottomComponents) {
    // p -> t1 -> q, q <-> r loop: t1 is not live, loop transitions are live.
    NetBuilder b;
    auto p = b.add_place("p", 1), q = b.add_place("q"), r = b.add_place("r");
    auto t1 = b.add_transition("t1"), t2 = b.add_transition("t2"), t3 = b.add_transition("t3");
    b.add_arc(p, t1);
    b.add_arc(t1, q);
    b.add_arc(q, t2);
    b.add_arc(t2, r);
    b.add_arc(r, t3);
    b.add_arc(t3, q);
    auto g = build_graph(b.build());
    auto v = check_properties(g);
    EXPECT_TRUE(v.deadlock_free);
    EXPECT_FALSE(v.live);
    ASSERT_TRUE(v.not_live.has_value());
    EXPECT_EQ(v.not_live->second, t1);
    std::size_t count = 0;
    auto comp = strongly_connected_components(g, count);
    EXPECT_EQ(count, 2u);
    EXPECT_NE(comp[0], comp[1]);
    EXPECT_EQ(comp[1], comp[2]);
}

TEST(Cycle, BehaviourInnerLoopDoesNotStartAtInitial) {
    auto net = fixtures::behaviour_extended();
    auto g = build_graph(net);
    // The inner loop t2..t5 returns to M1, not to M0.
    EXPECT_FALSE(find_cycle_realizing(g, FiringCountVector{0, 1, 1, 1, 1, 0, 0}).has_value());
    EXPECT_FALSE(find_cycle_realizing(g, FiringCountVector{1, 1, 1, 1, 1, 0, 0}).has_value());
    auto exit = find_cycle_realizing(g, FiringCountVector{1, 1, 1, 1, 0, 1, 1});
    ASSERT_TRUE(exit.has_value());
    EXPECT_EQ(exit->size(), 6u);
    auto both = find_cycle_realizing(g, FiringCountVector{1, 2, 2, 2, 1, 1, 1});
    ASSERT_TRUE(both.has_value());
    EXPECT_EQ(count_firings(net, *both), (FiringCountVector{1, 2, 2, 2, 1, 1, 1}));
}

TEST(Cycle, ZeroVectorIsEmpty) {
    auto g = build_graph(fixtures::behaviour_extended());
    auto s = find_cycle_realizing(g, FiringCountVector(7));
    ASSERT_TRUE(s.has_value());
    EXPECT_TRUE(s->empty());
}

TEST(Cycle, CommModelVector) {
    auto net = fixtures::pure_comm({Timeout::Finite, Timeout::Finite});
    ReachOptions ro;
    ro.mode = GuardMode::Valued;
    auto g = build_graph(net, ro);
    std::vector<std::uint32_t> x(fixtures::x_model.begin(), fixtures::x_model.end());
    auto s = find_cycle_realizing(g, FiringCountVector(x));
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(s->size(), 36u);
    auto m = net.initial_marking();
    for (auto t : *s)
        m = fire(net, m, t);
    EXPECT_EQ(m, net.initial_marking());
}

TEST(Export, DotShapeAndDeterminism) {
    auto g = build_graph(standalone_net(generate_template(SystemTemplate{1}, "s")));
    auto dot = export_dot(g);
    EXPECT_EQ(std::count(dot.begin(), dot.end(), '\n'), 6);
    EXPECT_NE(dot.find("n0 [label=\"M0 (1,0)\"]"), std::string::npos);
    EXPECT_NE(dot.find("n0 -> n1"), std::string::npos);
    EXPECT_NE(dot.find("n1 -> n0"), std::string::npos);
    EXPECT_EQ(dot, export_dot(g));

    auto gb = build_graph(fixtures::behaviour_extended());
    auto bdot = export_dot(gb);
    std::size_t nodes = 0, edges = 0;
    std::istringstream in(bdot);
    for (std::string line; std::getline(in, line);) {
        nodes += line.find("[label=\"M") != std::string::npos;
        edges += line.find("->") != std::string::npos;
    }
    EXPECT_EQ(nodes, 6u);
    EXPECT_EQ(edges, 7u);
}

TEST(Export, JsonFields) {
    auto g = build_graph(fixtures::behaviour_extended());
    auto v = check_properties(g);
    auto j = nlohmann::json::parse(export_json(g, &v));
    EXPECT_EQ(j["node_count"], 6);
    EXPECT_EQ(j["edge_count"], 7);
    EXPECT_EQ(j["truncated"], false);
    EXPECT_EQ(j["nodes"].size(), 6u);
    EXPECT_TRUE(j.contains("verdict"));
    EXPECT_EQ(export_json(g, &v), export_json(g, &v));
}

TEST(Scale, ForkFormulaSmallK) {
    for (std::size_t k = 1; k <= 10; ++k) {
        auto net = fork_net(k);
        auto g = build_graph(net);
        EXPECT_EQ(g.node_count(), (std::size_t{1} << k) + 2);
        if (k <= 6)
            EXPECT_EQ(oracle::naive_reachability(net).nodes.size(), (std::size_t{1} << k) + 2);
    }
}
