#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "fixtures.hpp"
#include "hpn/hierarchy.hpp"
#include "hpn/isomorphism.hpp"
#include "hpn/metamodel.hpp"
#include "hpn/reachability.hpp"

using namespace hpn;

namespace {

Panel open_panel(std::string id, std::size_t inner) {
    NetBuilder b;
    auto in = b.add_place("in");
    auto prev = in;
    for (std::size_t i = 0; i < inner; ++i) {
        auto p = b.add_place("q" + std::to_string(i + 1));
        auto t = b.add_transition("t" + std::to_string(i + 1));
        b.add_arc(prev, t);
        b.add_arc(t, p);
        prev = p;
    }
    auto out = b.add_place("out");
    auto t = b.add_transition("t" + std::to_string(inner + 1));
    b.add_arc(prev, t);
    b.add_arc(t, out);
    Panel panel;
    panel.id = std::move(id);
    panel.net = b.build();
    panel.input_place = in;
    panel.output_place = out;
    return panel;
}

std::multiset<std::tuple<int, std::string, std::string, std::uint32_t>> arc_multiset(const PetriNet& net) {
    std::multiset<std::tuple<int, std::string, std::string, std::uint32_t>> out;
    for (const auto& a : net.arcs()) {
        if (a.source.kind == NodeKind::Place)
            out.emplace(0, net.place(PlaceId{a.source.index}).name, net.transition(TransitionId{a.target.index}).name,
                        a.weight);
        else
            out.emplace(1, net.transition(TransitionId{a.source.index}).name, net.place(PlaceId{a.target.index}).name,
                        a.weight);
    }
    return out;
}

} // namespace

TEST(Ports, DetectedFromStructure) {
    auto panel = open_panel("x", 2);
    auto [in, out] = detect_ports(panel.net);
    EXPECT_EQ(in, panel.input_place);
    EXPECT_EQ(out, panel.output_place);
}

TEST(CloseLoop, BehaviourGetsT7) {
    auto panel = generate_template(BehaviourTemplate{}, "b");
    auto net = close_loop(panel);
    EXPECT_EQ(net.place_count(), panel.net.place_count());
    ASSERT_EQ(net.transition_count(), panel.net.transition_count() + 1);
    TransitionId t7{static_cast<std::uint32_t>(panel.net.transition_count())};
    EXPECT_EQ(net.transition(t7).name, "t7");
    EXPECT_EQ(net.pre(t7, *panel.output_place), 1u);
    EXPECT_EQ(net.post(t7, *panel.input_place), 1u);
}

TEST(CloseLoop, DegenerateSinglePlace) {
    NetBuilder b;
    auto p = b.add_place("p");
    Panel panel;
    panel.id = "one";
    panel.net = b.build();
    panel.input_place = p;
    panel.output_place = p;
    auto net = close_loop(panel);
    EXPECT_EQ(net.place_count(), 1u);
    ASSERT_EQ(net.transition_count(), 1u);
    EXPECT_EQ(net.pre(TransitionId{0}, p), 1u);
    EXPECT_EQ(net.post(TransitionId{0}, p), 1u);
}

TEST(CloseLoop, AgentPanel) {
    auto panel = generate_template(AgentTemplate{3}, "a");
    auto net = close_loop(panel);
    EXPECT_EQ(net.transition_count(), panel.net.transition_count() + 1);
    EXPECT_EQ(net.arcs().size(), panel.net.arcs().size() + 2);
}

TEST(CloseLoop, ClosedPanelRejected) {
    auto panel = generate_template(SystemTemplate{2}, "s");
    EXPECT_THROW(close_loop(panel), StructuralError);
}

TEST(Collapse, PagesBecomePlaces) {
    auto panel = generate_template(SystemTemplate{2}, "s");
    auto c = collapse_pages(panel);
    EXPECT_EQ(c.net.place_count(), panel.net.place_count());
    EXPECT_EQ(c.net.transition_count(), panel.net.transition_count());
    EXPECT_EQ(c.net.arcs().size(), panel.net.arcs().size());
    EXPECT_EQ(c.page_to_panel.size(), panel.page_bindings.size());
    auto g = build_graph(c.net);
    ASSERT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.node(0), (Marking{1, 0, 0}));
    EXPECT_EQ(g.node(1), (Marking{0, 1, 1}));
}

TEST(Collapse, NoPagesIsIdentity) {
    auto panel = open_panel("x", 3);
    auto c = collapse_pages(panel);
    EXPECT_TRUE(c.page_to_panel.empty());
    EXPECT_EQ(arc_multiset(c.net), arc_multiset(panel.net));
}

TEST(Collapse, SubsystemExampleMatrix) {
    auto panel = make_subsystem(3, "s");
    // Rebuild the switching relation of the example on three pages.
    NetBuilder b;
    auto in = b.add_place("p1");
    PlaceId bh[3] = {b.add_place("p2"), b.add_place("p3"), b.add_place("p4")};
    auto out = b.add_place("p5");
    auto link = [&](PlaceId a, PlaceId c) {
        auto t = b.add_transition("t" + std::to_string(b.transition_count() + 1));
        b.add_arc(a, t);
        b.add_arc(t, c);
    };
    link(in, bh[0]);
    link(bh[0], out);
    link(bh[0], bh[1]);
    link(bh[1], bh[0]);
    link(bh[0], bh[2]);
    link(bh[2], bh[0]);
    link(bh[1], bh[2]);
    Panel example;
    example.id = "s";
    example.layer = Layer::Subsystem;
    example.net = b.build();
    example.input_place = in;
    example.output_place = out;
    for (int i = 0; i < 3; ++i)
        example.page_bindings[bh[i]] = "s/behaviour" + std::to_string(i + 1);
    auto reduced = reduce_panel(example);
    EXPECT_EQ(incidence_matrix(reduced.net).to_rows(), fixtures::subsystem_rows);
    EXPECT_EQ(reduced.page_to_panel.size(), 3u);
    EXPECT_TRUE(panel.page_bindings.empty());
}

TEST(Purify, CommNetRemovesThreeLoops) {
    auto panel = generate_template(CommTemplate{{Timeout::Infinite, Timeout::Infinite}, false}, "c");
    auto pure = purify(panel.net);
    std::vector<std::pair<std::string, std::string>> removed;
    for (const auto& l : pure.removed)
        removed.emplace_back(panel.net.transition(l.transition).name, panel.net.place(l.place).name);
    EXPECT_EQ(removed, (std::vector<std::pair<std::string, std::string>>{{"t3", "p7"}, {"t8", "p3"}, {"t8", "p7"}}));
    EXPECT_TRUE(incidence_matrix(pure.net).is_pure());
    EXPECT_FALSE(incidence_matrix(panel.net).is_pure());
    EXPECT_EQ(incidence_matrix(pure.net).to_rows(), fixtures::comm_rows);
}

TEST(Purify, PureNetUnchanged) {
    auto net = fixtures::net_from_rows(fixtures::subsystem_rows);
    auto pure = purify(net);
    EXPECT_TRUE(pure.removed.empty());
    EXPECT_EQ(arc_multiset(pure.net), arc_multiset(net));
}

TEST(Purify, UnequalWeightsRejected) {
    NetBuilder b;
    auto p = b.add_place("p", 2);
    auto t = b.add_transition("t");
    b.add_arc(p, t, 2);
    b.add_arc(t, p, 1);
    EXPECT_THROW(purify(b.build()), StructuralError);
}

TEST(Purify, ReinsertRestoresArcs) {
    std::mt19937_64 rng(21);
    for (int run = 0; run < 200; ++run) {
        auto base = oracle::random_net(rng, {.max_weight = 2});
        auto b = base.to_builder();
        for (std::uint32_t t = 0; t < b.transition_count(); ++t)
            for (std::uint32_t p = 0; p < b.place_count(); ++p)
                if (rng() % 6 == 0 && base.pre(TransitionId{t}, PlaceId{p}) == 0 &&
                    base.post(TransitionId{t}, PlaceId{p}) == 0) {
                    auto w = static_cast<std::uint32_t>(1 + rng() % 2);
                    b.add_arc(PlaceId{p}, TransitionId{t}, w);
                    b.add_arc(TransitionId{t}, PlaceId{p}, w);
                }
        auto net = b.build();
        auto pure = purify(net);
        EXPECT_TRUE(incidence_matrix(pure.net).is_pure());
        EXPECT_EQ(incidence_matrix(pure.net), incidence_matrix(net));
        EXPECT_EQ(arc_multiset(reinsert_self_loops(pure)), arc_multiset(net));
    }
}

TEST(Purify, ImpureGraphIsSubgraphOfPure) {
    // Read arcs only restrict behaviour: every marking of the impure comm
    // net is reachable in the purified one.
    for (auto mode : all_comm_modes()) {
        auto impure = generate_template(CommTemplate{mode, false}, "c").net;
        auto pure = purify(impure).net;
        ReachOptions ro;
        ro.mode = GuardMode::Valued;
        auto gi = build_graph(impure, ro), gp = build_graph(pure, ro);
        EXPECT_LE(gi.node_count(), gp.node_count());
        for (std::uint32_t n = 0; n < gi.node_count(); ++n)
            EXPECT_TRUE(gp.find(gi.node(n)).has_value()) << to_string(mode);
    }
}

TEST(Purify, MarkedLoopPlacesKeepGraph) {
    // Loop place always marked while its transition could fire: graphs coincide.
    NetBuilder b;
    auto p = b.add_place("p", 1), q = b.add_place("q"), r = b.add_place("r", 1);
    auto t1 = b.add_transition("t1"), t2 = b.add_transition("t2");
    b.add_arc(p, t1);
    b.add_arc(t1, q);
    b.add_arc(r, t1);
    b.add_arc(t1, r);
    b.add_arc(q, t2);
    b.add_arc(t2, p);
    auto net = b.build();
    auto g1 = build_graph(net), g2 = build_graph(purify(net).net);
    EXPECT_EQ(g1.node_count(), g2.node_count());
    EXPECT_EQ(g1.edges(), g2.edges());
}

TEST(Flatten, SinglePanel) {
    HierarchicalNet h;
    h.add_panel(open_panel("leaf", 2));
    h.set_root("leaf");
    auto flat = flatten(h, "leaf");
    EXPECT_TRUE(isomorphic(flat, h.panel("leaf").net));
}

TEST(Flatten, SystemAgentToy) {
    // Two agents, one trivial subsystem each.
    HierarchicalNet h;
    auto sys = generate_template(SystemTemplate{2}, "sys");
    std::vector<PlaceId> pages = {*sys.net.find_place("p2"), *sys.net.find_place("p3")};
    for (std::size_t a = 0; a < 2; ++a) {
        auto agent = generate_template(AgentTemplate{1}, "sys/a" + std::to_string(a + 1));
        agent.page_bindings[*agent.net.find_place("p2")] = agent.id + "/s";
        auto sub = open_panel(agent.id + "/s", 1);
        sub.layer = Layer::Subsystem;
        sys.page_bindings[pages[a]] = agent.id;
        h.add_panel(std::move(agent));
        h.add_panel(std::move(sub));
    }
    h.add_panel(std::move(sys));
    h.set_root("sys");
    h.validate();
    auto flat = flatten(h, "sys");
    auto g = build_graph(flat);
    auto oracle_graph = oracle::naive_reachability(flat);
    EXPECT_EQ(g.node_count(), oracle_graph.nodes.size());
    // Each agent runs a 5-state chain (agent in, sub in, sub q1, sub out,
    // agent out) independently between fork and join: 1 + 5*5 states.
    EXPECT_EQ(g.node_count(), 26u);
    auto v = check_properties(g);
    EXPECT_TRUE(v.safe);
    EXPECT_TRUE(v.deadlock_free);
}

TEST(Flatten, CommPairEqualsPureTemplate) {
    for (auto mode : all_comm_modes()) {
        auto pair = comm_pair(mode, true);
        auto flat = flatten(pair, pair.root());
        auto single = generate_template(CommTemplate{mode, true}, "c").net;
        EXPECT_EQ(flat.place_count(), 13u);
        EXPECT_EQ(flat.transition_count(), 17u);
        EXPECT_TRUE(isomorphic(flat, single)) << to_string(mode);
    }
}

TEST(Flatten, TokenOnPageStartsChild) {
    HierarchicalNet h;
    NetBuilder b;
    auto p = b.add_place("p", 1);
    auto page = b.add_place("page");
    auto t = b.add_transition("t");
    b.add_arc(p, t);
    b.add_arc(t, page);
    auto t2 = b.add_transition("t2");
    b.add_arc(page, t2);
    b.add_arc(t2, p);
    Panel root;
    root.id = "root";
    root.layer = Layer::System;
    root.net = b.build();
    root.page_bindings[page] = "child";
    h.add_panel(std::move(root));
    h.add_panel(open_panel("child", 1));
    h.set_root("root");
    auto flat = flatten(h, "root");
    EXPECT_EQ(flat.place_count(), 4u);
    EXPECT_EQ(build_graph(flat).node_count(), 4u);
}

TEST(Hierarchy, ValidationErrors) {
    {
        HierarchicalNet h;
        EXPECT_THROW(h.validate(), StructuralError);
    }
    {
        HierarchicalNet h;
        h.add_panel(open_panel("a", 1));
        EXPECT_THROW(h.add_panel(open_panel("a", 1)), StructuralError);
    }
    {
        // a -> b -> a
        HierarchicalNet h;
        auto a = open_panel("a", 1), b2 = open_panel("b", 1), r = open_panel("r", 1);
        r.page_bindings[PlaceId{1}] = "a";
        a.page_bindings[PlaceId{1}] = "b";
        b2.page_bindings[PlaceId{1}] = "a";
        h.add_panel(r);
        h.add_panel(a);
        h.add_panel(b2);
        h.set_root("r");
        EXPECT_THROW(h.validate(), StructuralError);
    }
    {
        HierarchicalNet h;
        auto r = open_panel("r", 1);
        r.page_bindings[PlaceId{1}] = "missing";
        h.add_panel(r);
        h.set_root("r");
        EXPECT_THROW(h.validate(), StructuralError);
    }
    {
        auto p = open_panel("r", 1);
        p.input_place.reset();
        EXPECT_THROW(validate_panel(p), StructuralError);
    }
}

TEST(Hierarchy, ParentsMap) {
    auto toy = make_toy_model();
    auto parents = toy.parents();
    EXPECT_EQ(parents.at("system/agent1"), "system");
    EXPECT_EQ(parents.count("system"), 0u);
    EXPECT_EQ(parents.count("comm"), 0u);
}

TEST(Hierarchy, InheritanceThesisOnToyModel) {
    // Every layer of the toy model is safe and deadlock-free, so its flat net is too.
    auto toy = make_toy_model();
    auto flat = standalone_net(toy);
    auto g = build_graph(flat);
    auto v = check_properties(g);
    EXPECT_FALSE(g.truncated());
    EXPECT_TRUE(v.safe);
    EXPECT_TRUE(v.deadlock_free);
}
