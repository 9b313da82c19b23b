#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "support/random_hierarchy.hpp"
#include "hpn/isomorphism.hpp"
#include "hpn/metamodel.hpp"
#include "hpn/model_io.hpp"
#include "hpn/reachability.hpp"

using namespace hpn;

TEST(CommMode, TextRoundTrip) {
    for (auto m : all_comm_modes())
        EXPECT_EQ(parse_comm_mode(to_string(m)), m);
    EXPECT_EQ(to_string(CommMode{Timeout::Zero, Timeout::Finite}), "NB-BT");
    EXPECT_FALSE(parse_comm_mode("NB").has_value());
    EXPECT_FALSE(parse_comm_mode("X-B").has_value());
}

TEST(Templates, DeclRoundTrip) {
    std::vector<LayerTemplate> ts = {SystemTemplate{3}, AgentTemplate{2}, BehaviourTemplate{},
                                     ActionTemplate{Layer::ActionSnd, Arrangement::Parallel, 4, {}},
                                     CommTemplate{{Timeout::Infinite, Timeout::Finite}, true}};
    for (const auto& t : ts) {
        auto back = parse_template_decl(to_decl(t), layer_of(t));
        EXPECT_EQ(to_decl(back), to_decl(t));
        EXPECT_EQ(layer_of(back), layer_of(t));
    }
    EXPECT_EQ(to_decl(SystemTemplate{3}), "system agents=3");
    EXPECT_THROW(parse_template_decl("system agents=0"), Error);
    EXPECT_THROW(parse_template_decl("system colour=red"), Error);
    EXPECT_THROW(parse_template_decl("wibble"), Error);
}

TEST(Templates, BehaviourExtendedNet) {
    auto net = fixtures::behaviour_extended();
    EXPECT_EQ(net.place_count(), 6u);
    EXPECT_EQ(net.transition_count(), 7u);
    // Each transition moves one token from one place to one place.
    for (std::uint32_t t = 0; t < 7; ++t) {
        EXPECT_EQ(net.inputs(TransitionId{t}).size(), 1u);
        EXPECT_EQ(net.outputs(TransitionId{t}).size(), 1u);
    }
    auto panel = generate_template(BehaviourTemplate{}, "b");
    auto d = check_guard_determinism(panel.net, *panel.net.find_place("p5"));
    EXPECT_TRUE(d.complete);
    EXPECT_TRUE(d.exclusive);
}

TEST(Templates, SystemMarkings) {
    for (std::size_t a = 1; a <= 8; ++a) {
        auto panel = generate_template(SystemTemplate{a}, "s");
        auto g = build_graph(standalone_net(panel));
        ASSERT_EQ(g.node_count(), 2u);
        Marking m1(a + 1);
        for (std::size_t p = 1; p <= a; ++p)
            m1[p] = 1;
        EXPECT_EQ(g.node(1), m1);
    }
}

TEST(Templates, CommBBMatrix) {
    auto panel = generate_template(CommTemplate{{Timeout::Infinite, Timeout::Infinite}, false}, "c");
    EXPECT_EQ(incidence_matrix(purify(panel.net).net).to_rows(), fixtures::comm_rows);
    EXPECT_EQ(panel.net.initial_marking(), fixtures::comm_m0);
}

TEST(Templates, ModesOnlyChangeGuards) {
    auto ref = generate_template(CommTemplate{{Timeout::Zero, Timeout::Zero}, false}, "c").net;
    for (auto m : all_comm_modes()) {
        auto net = generate_template(CommTemplate{m, false}, "c").net;
        EXPECT_EQ(incidence_matrix(net), incidence_matrix(ref));
        EXPECT_EQ(net.arcs(), ref.arcs());
    }
}

TEST(Templates, InvalidParameters) {
    EXPECT_THROW(generate_template(SystemTemplate{0}), Error);
    EXPECT_THROW(generate_template(AgentTemplate{0}), Error);
    EXPECT_THROW(generate_template(ActionTemplate{Layer::ActionF, Arrangement::Sequential, 0, {}}), Error);
    EXPECT_THROW(generate_template(ActionTemplate{Layer::Behaviour, Arrangement::Sequential, 1, {}}), Error);
}

TEST(Templates, SweepMatchesChecker) {
    for (std::size_t k = 1; k <= 8; ++k) {
        for (LayerTemplate t : std::vector<LayerTemplate>{
                 SystemTemplate{k}, AgentTemplate{k}, ActionTemplate{Layer::ActionF, Arrangement::Sequential, k, {}},
                 ActionTemplate{Layer::ActionRcv, Arrangement::Parallel, k, {}}}) {
            auto panel = generate_template(t, "x");
            std::string note;
            auto m = match_template(panel, &note);
            ASSERT_TRUE(m.has_value()) << note;
            EXPECT_EQ(to_decl(*m), to_decl(t));
            panel.template_decl.reset();
            auto inferred = match_template(panel, &note);
            ASSERT_TRUE(inferred.has_value()) << to_decl(t) << ": " << note;
            // One page in sequence or in parallel is the same net.
            if (k == 1)
                EXPECT_TRUE(isomorphic(generate_template(*inferred, "x").net, panel.net));
            else
                EXPECT_EQ(to_decl(*inferred), to_decl(t));
        }
    }
    for (auto mode : all_comm_modes())
        for (bool pure : {false, true}) {
            auto panel = generate_template(CommTemplate{mode, pure}, "c");
            panel.template_decl.reset();
            auto m = match_template(panel);
            ASSERT_TRUE(m.has_value());
            EXPECT_EQ(to_decl(*m), to_decl(CommTemplate{mode, pure}));
        }
}

TEST(Templates, TamperedPanelDoesNotMatch) {
    auto panel = generate_template(AgentTemplate{2}, "a");
    auto b = panel.net.to_builder();
    b.add_arc(*panel.input_place, b.add_transition("extra"));
    panel.net = b.build();
    std::string note;
    EXPECT_FALSE(match_template(panel, &note).has_value());
    EXPECT_FALSE(note.empty());
}

TEST(Templates, Verdicts) {
    auto& sys = template_verdict(SystemTemplate{4});
    EXPECT_EQ(sys.conservativeness.cls, Conservativeness::Conservative);
    EXPECT_EQ(sys.conservativeness.witness, (std::vector<std::int64_t>{4, 1, 1, 1, 1}));
    EXPECT_EQ(sys.conservativeness.weighted_sum, 4);
    auto& agent = template_verdict(AgentTemplate{3});
    EXPECT_EQ(agent.conservativeness.witness, (std::vector<std::int64_t>{3, 1, 1, 1, 3}));
    EXPECT_EQ(agent.conservativeness.weighted_sum, 3);
    EXPECT_TRUE(agent.safe);
    EXPECT_TRUE(agent.deadlock_free);
    auto& seq = template_verdict(ActionTemplate{Layer::ActionF, Arrangement::Sequential, 3, {}});
    EXPECT_EQ(seq.conservativeness.cls, Conservativeness::Strict);
    EXPECT_EQ(seq.conservativeness.weighted_sum, 1);
    auto& par = template_verdict(ActionTemplate{Layer::ActionSnd, Arrangement::Parallel, 3, {}});
    EXPECT_EQ(par.conservativeness.cls, Conservativeness::Conservative);
    EXPECT_EQ(par.conservativeness.weighted_sum, 3);
    EXPECT_THROW(template_verdict(ActionTemplate{Layer::ActionF, Arrangement::Hybrid, 2, {}}), Error);
    EXPECT_EQ(&template_verdict(AgentTemplate{3}), &agent);
}

TEST(SubsystemRules, ExampleIsValid) {
    auto net = fixtures::net_from_rows(fixtures::subsystem_rows);
    EXPECT_TRUE(validate_subsystem_net(net).empty());
    EXPECT_TRUE(validate_subsystem_net(standalone_net(make_subsystem(3))).empty());
}

TEST(SubsystemRules, NamedViolations) {
    auto rows = fixtures::subsystem_rows;
    rows[2] = {0, -1, 1, 1, 0};
    auto v = validate_subsystem_net(fixtures::net_from_rows(rows));
    ASSERT_FALSE(v.empty());
    EXPECT_NE(std::find(v.begin(), v.end(), "row t3: token non-conservation"), v.end());

    auto b = fixtures::net_from_rows(fixtures::subsystem_rows).to_builder();
    b.add_arc(PlaceId{2}, TransitionId{4});
    b.add_arc(TransitionId{4}, PlaceId{2});
    auto loops = validate_subsystem_net(b.build());
    EXPECT_NE(std::find(loops.begin(), loops.end(), "self-loop t5<->p3"), loops.end());
}

TEST(GuardDeterminism, TautologyPair) {
    std::vector<Guard> g = {Guard::parse("A"), Guard::parse("!A")};
    auto d = check_guard_determinism(g);
    EXPECT_TRUE(d.complete);
    EXPECT_TRUE(d.exclusive);
    EXPECT_FALSE(d.incomplete_at.has_value());
}

TEST(GuardDeterminism, IndependentAtoms) {
    std::vector<Guard> g = {Guard::parse("A"), Guard::parse("B")};
    auto d = check_guard_determinism(g);
    EXPECT_FALSE(d.complete);
    EXPECT_FALSE(d.exclusive);
    EXPECT_EQ(d.incomplete_at, (Valuation{{"A", false}, {"B", false}}));
    ASSERT_TRUE(d.overlap_at.has_value());
    EXPECT_EQ(std::get<2>(*d.overlap_at), (Valuation{{"A", true}, {"B", true}}));
}

TEST(GuardDeterminism, AtomLimit) {
    std::vector<Guard> g = {Guard::parse("a || b || c"), Guard::parse("!a")};
    EXPECT_TRUE(check_guard_determinism(g, 2).aborted);
}

TEST(GuardDeterminism, SubsystemAgainstTruthTable) {
    // Switching guards on behaviour 1 of the example (t2 exit, t3 to B2, t5 to B3).
    std::vector<std::vector<std::string>> cases = {
        {"stop", "!stop && go2", "!stop && !go2"},
        {"stop", "go2", "!stop"},
        {"stop && go2", "!stop && go2", "!go2"},
        {"stop", "!stop && go2", "!stop && go2 && go3"},
    };
    for (const auto& texts : cases) {
        auto b = fixtures::net_from_rows(fixtures::subsystem_rows).to_builder();
        std::vector<Guard> guards;
        std::uint32_t idx[3] = {1, 2, 4};
        for (int i = 0; i < 3; ++i) {
            guards.push_back(Guard::parse(texts[i]));
            b.set_guard(TransitionId{idx[i]}, guards.back());
        }
        auto net = b.build();
        auto d = check_guard_determinism(net, PlaceId{1});
        std::set<std::string> atoms;
        for (const auto& g : guards)
            for (const auto& a : g.atoms())
                atoms.insert(a);
        std::vector<std::string> names(atoms.begin(), atoms.end());
        bool complete = true, exclusive = true;
        for (unsigned bits = 0; bits < (1u << names.size()); ++bits) {
            Valuation v;
            for (std::size_t k = 0; k < names.size(); ++k)
                v[names[k]] = (bits >> k) & 1;
            int truths = 0;
            for (const auto& g : guards)
                truths += g.evaluate(v);
            complete &= truths >= 1;
            exclusive &= truths <= 1;
        }
        EXPECT_EQ(d.complete, complete) << texts[0];
        EXPECT_EQ(d.exclusive, exclusive) << texts[0];
    }
}

TEST(Analysis, ToyModelRows) {
    ToyModelOptions o;
    o.subsystems = 1;
    o.behaviours = 1;
    auto report = analyze_hierarchy(make_toy_model(o));
    EXPECT_TRUE(report.overall);
    auto sys = report.find("system");
    ASSERT_NE(sys, nullptr);
    EXPECT_EQ(sys->method, AnalysisMethod::Inherited);
    auto beh = report.find("system/agent1/subsystem1/behaviour1");
    ASSERT_NE(beh, nullptr);
    EXPECT_EQ(beh->cls, Conservativeness::Strict);
    EXPECT_EQ(beh->weighted_sum, 1);
    auto comm = report.find("comm");
    ASSERT_NE(comm, nullptr);
    EXPECT_EQ(comm->cls, Conservativeness::Partial);
    EXPECT_EQ(comm->weighted_sum, 2);
    // Only the subsystem panels are analysed fresh.
    for (const auto& r : report.rows)
        EXPECT_EQ(r.method == AnalysisMethod::Fresh, r.layer == Layer::Subsystem) << r.panel;
}

TEST(Analysis, BBCommAnalysedFresh) {
    ToyModelOptions o;
    o.comm = {Timeout::Infinite, Timeout::Infinite};
    auto report = analyze_hierarchy(make_toy_model(o));
    auto comm = report.find("comm");
    ASSERT_NE(comm, nullptr);
    EXPECT_EQ(comm->method, AnalysisMethod::Fresh);
    EXPECT_TRUE(comm->safe);
    EXPECT_TRUE(comm->deadlock_free);
    EXPECT_NE(std::find(report.attention.begin(), report.attention.end(), "comm"), report.attention.end());
}

TEST(Analysis, InvalidSubsystemFlagged) {
    auto h = make_toy_model();
    HierarchicalNet broken;
    for (const auto& [id, panel] : h.panels()) {
        auto copy = panel;
        if (id == "system/agent1/subsystem1") {
            auto b = copy.net.to_builder();
            auto t = *b.find_transition("t2");
            auto extra = b.add_place("stray");
            b.add_arc(t, extra);
            auto drain = b.add_transition("drain");
            b.add_arc(extra, drain);
            b.add_arc(drain, *copy.output_place);
            copy.net = b.build();
        }
        broken.add_panel(std::move(copy));
    }
    for (const auto& f : h.fusion_sets())
        broken.add_fusion(f);
    broken.set_root(h.root());
    auto report = analyze_hierarchy(broken);
    EXPECT_FALSE(report.overall);
    auto row = report.find("system/agent1/subsystem1");
    ASSERT_NE(row, nullptr);
    ASSERT_FALSE(row->violations.empty());
    EXPECT_NE(row->violations.front().find("t2"), std::string::npos);
    EXPECT_NE(report.to_text().find("overall: violations found"), std::string::npos);
}

TEST(Analysis, HybridActionIsFresh) {
    auto h = make_toy_model();
    HierarchicalNet changed;
    for (const auto& [id, panel] : h.panels()) {
        auto copy = panel;
        if (id == "system/agent1/subsystem1/behaviour1/f") {
            copy = generate_template(ActionTemplate{Layer::ActionF, Arrangement::Parallel, 3, {}}, id);
            auto b = copy.net.to_builder();
            b.add_transition("skip");
            b.add_arc(*copy.input_place, *b.find_transition("skip"));
            b.add_arc(*b.find_transition("skip"), *copy.output_place);
            copy.net = b.build();
            copy.template_decl.reset();
            copy.page_bindings.clear();
        }
        changed.add_panel(std::move(copy));
    }
    for (const auto& f : h.fusion_sets())
        changed.add_fusion(f);
    changed.set_root(h.root());
    auto report = analyze_hierarchy(changed);
    auto row = report.find("system/agent1/subsystem1/behaviour1/f");
    ASSERT_NE(row, nullptr);
    EXPECT_TRUE(row->user_defined);
    EXPECT_EQ(row->kind, "hybrid");
    EXPECT_EQ(row->method, AnalysisMethod::Fresh);
}

TEST(Analysis, ReportDeterministic) {
    auto h = make_toy_model();
    auto a = analyze_hierarchy(h), b = analyze_hierarchy(h);
    EXPECT_EQ(a.to_text(), b.to_text());
    EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(AnalysisProperty, CompositionalMatchesFlatOnRandomHierarchies) {
    std::mt19937_64 rng(31);
    int faulty = 0;
    for (int run = 0; run < 80; ++run) {
        auto rh = oracle::random_hierarchy(rng, 3, 9, 0.5);
        auto report = analyze_hierarchy(rh.net);
        bool safe = true, live = true;
        for (const auto& r : report.rows) {
            safe &= r.safe;
            live &= r.deadlock_free;
        }
        auto v = check_properties(build_graph(standalone_net(rh.net)));
        ASSERT_TRUE(v.definitive);
        EXPECT_EQ(safe, v.safe) << serialize(rh.net);
        EXPECT_EQ(live, v.deadlock_free) << serialize(rh.net);
        faulty += rh.faults > 0;
    }
    EXPECT_GT(faulty, 10);
}
