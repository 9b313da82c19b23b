#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "hpn/metamodel.hpp"

namespace hpn {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string pname(std::size_t i) { return "p" + std::to_string(i); }
std::string tname(std::size_t i) { return "t" + std::to_string(i); }

Panel open_panel(std::string id, Layer layer, PetriNet net) {
    Panel p;
    p.id = std::move(id);
    p.layer = layer;
    auto [in, out] = detect_ports(net);
    p.net = std::move(net);
    p.input_place = in;
    p.output_place = out;
    return p;
}

/// in -> fork -> pages -> join -> out, or closed p1 -> pages -> p1.
PetriNet fork_join(std::size_t pages, bool closed, const std::string& page_op) {
    NetBuilder b;
    auto in = b.add_place(pname(1), closed ? 1 : 0);
    std::vector<PlaceId> ps;
    for (std::size_t i = 0; i < pages; ++i)
        ps.push_back(b.add_place(pname(i + 2), 0, page_op));
    auto out = closed ? in : b.add_place(pname(pages + 2));
    auto fork = b.add_transition(tname(1));
    auto join = b.add_transition(tname(2));
    b.add_arc(in, fork);
    for (auto p : ps) {
        b.add_arc(fork, p);
        b.add_arc(p, join);
    }
    b.add_arc(join, out);
    return b.build();
}

PetriNet chain(std::size_t pages, const std::string& page_op) {
    NetBuilder b;
    std::vector<PlaceId> ps;
    for (std::size_t i = 0; i < pages + 2; ++i)
        ps.push_back(b.add_place(pname(i + 1), 0, i == 0 || i == pages + 1 ? "" : page_op));
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        auto t = b.add_transition(tname(i + 1));
        b.add_arc(ps[i], t);
        b.add_arc(t, ps[i + 1]);
    }
    return b.build();
}

Guard mode_guard(Timeout t, const char* atom) {
    switch (t) {
    case Timeout::Zero:
        return Guard::constant(true);
    case Timeout::Infinite:
        return Guard::constant(false);
    case Timeout::Finite:
        return Guard::atom(atom);
    }
    return {};
}

struct CommRow {
    std::vector<int> in;
    std::vector<int> out;
};

// Arcs of the pure communication net, places and transitions 1-based.
const std::vector<CommRow>& comm_rows() {
    static const std::vector<CommRow> rows = {
        {{1}, {5}},          {{1}, {2}},        {{2, 6}, {12}}, {{2}, {3, 6}},  {{3, 6, 7}, {13}}, {{3}, {4}},
        {{3, 7}, {5}},       {{4}, {5}},        {{5}, {1}},     {{6, 8}, {9}},  {{8}, {10}},       {{6, 7, 8}, {9}},
        {{9}, {7, 11}},      {{10}, {11}},      {{11}, {8}},    {{12}, {3, 6}}, {{13}, {3, 6}},
    };
    return rows;
}

// Read self-loops of the drawn net: (transition, place).
const std::vector<std::pair<int, int>>& comm_loops() {
    static const std::vector<std::pair<int, int>> loops = {{3, 7}, {8, 3}, {8, 7}};
    return loops;
}

const char* comm_place_op(int p) {
    switch (p) {
    case 1:
        return "sender idle";
    case 6:
        return "buffer flag";
    case 7:
        return "buffer";
    case 8:
        return "receiver idle";
    default:
        return "";
    }
}

void comm_transition_attrs(int t, CommMode mode, Guard& guard, std::optional<int>& prio) {
    if (t == 6)
        guard = mode_guard(mode.send_timeout, "send_timeout");
    if (t == 11)
        guard = mode_guard(mode.recv_timeout, "recv_timeout");
    if (t == 3 || t == 5 || t == 12)
        prio = 1;
}

PetriNet comm_net(CommMode mode, bool pure) {
    NetBuilder b;
    for (int p = 1; p <= 13; ++p)
        b.add_place(pname(p), p == 1 || p == 8 ? 1 : 0, comm_place_op(p));
    const auto& rows = comm_rows();
    for (int t = 1; t <= static_cast<int>(rows.size()); ++t) {
        Guard g;
        std::optional<int> prio;
        comm_transition_attrs(t, mode, g, prio);
        auto id = b.add_transition(tname(t), g, prio);
        for (int p : rows[t - 1].in)
            b.add_arc(PlaceId{static_cast<std::uint32_t>(p - 1)}, id);
        for (int p : rows[t - 1].out)
            b.add_arc(id, PlaceId{static_cast<std::uint32_t>(p - 1)});
    }
    if (!pure) {
        for (auto [t, p] : comm_loops()) {
            TransitionId tid{static_cast<std::uint32_t>(t - 1)};
            PlaceId pid{static_cast<std::uint32_t>(p - 1)};
            b.add_arc(pid, tid);
            b.add_arc(tid, pid);
        }
    }
    return b.build();
}

} // namespace

std::string_view to_string(Timeout t) {
    switch (t) {
    case Timeout::Zero:
        return "NB";
    case Timeout::Infinite:
        return "B";
    case Timeout::Finite:
        return "BT";
    }
    return "?";
}

std::string to_string(CommMode mode) {
    return std::string(to_string(mode.send_timeout)) + "-" + std::string(to_string(mode.recv_timeout));
}

std::optional<CommMode> parse_comm_mode(std::string_view text) {
    auto dash = text.find('-');
    if (dash == std::string_view::npos)
        return std::nullopt;
    auto side = [](std::string_view s) -> std::optional<Timeout> {
        auto u = upper(s);
        if (u == "NB")
            return Timeout::Zero;
        if (u == "B")
            return Timeout::Infinite;
        if (u == "BT")
            return Timeout::Finite;
        return std::nullopt;
    };
    auto s = side(text.substr(0, dash));
    auto r = side(text.substr(dash + 1));
    if (!s || !r)
        return std::nullopt;
    return CommMode{*s, *r};
}

std::array<CommMode, 9> all_comm_modes() {
    std::array<CommMode, 9> out;
    const Timeout ts[] = {Timeout::Zero, Timeout::Infinite, Timeout::Finite};
    std::size_t k = 0;
    for (auto s : ts)
        for (auto r : ts)
            out[k++] = CommMode{s, r};
    return out;
}

std::string_view to_string(Arrangement a) {
    switch (a) {
    case Arrangement::Sequential:
        return "sequential";
    case Arrangement::Parallel:
        return "parallel";
    case Arrangement::Hybrid:
        return "hybrid";
    }
    return "?";
}

std::optional<Arrangement> parse_arrangement(std::string_view text) {
    auto l = lower(text);
    if (l == "sequential")
        return Arrangement::Sequential;
    if (l == "parallel")
        return Arrangement::Parallel;
    if (l == "hybrid")
        return Arrangement::Hybrid;
    return std::nullopt;
}

Layer layer_of(const LayerTemplate& t) {
    return std::visit(
        [](const auto& v) -> Layer {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SystemTemplate>)
                return Layer::System;
            else if constexpr (std::is_same_v<T, AgentTemplate>)
                return Layer::Agent;
            else if constexpr (std::is_same_v<T, BehaviourTemplate>)
                return Layer::Behaviour;
            else if constexpr (std::is_same_v<T, ActionTemplate>)
                return v.layer;
            else
                return Layer::CommModel;
        },
        t);
}

std::string to_decl(const LayerTemplate& t) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SystemTemplate>)
                return "system agents=" + std::to_string(v.agents);
            else if constexpr (std::is_same_v<T, AgentTemplate>)
                return "agent subsystems=" + std::to_string(v.subsystems);
            else if constexpr (std::is_same_v<T, BehaviourTemplate>)
                return "behaviour";
            else if constexpr (std::is_same_v<T, ActionTemplate>)
                return "action arrangement=" + std::string(to_string(v.arrangement)) +
                       " pages=" + std::to_string(v.pages);
            else
                return "comm mode=" + to_string(v.mode) + (v.pure ? " pure=true" : "");
        },
        t);
}

LayerTemplate parse_template_decl(std::string_view decl, Layer layer) {
    std::istringstream in{std::string(decl)};
    std::string kind;
    in >> kind;
    kind = lower(kind);
    std::map<std::string, std::string> params;
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error("template parameter '" + tok + "' is not of the form key=value");
        auto key = lower(tok.substr(0, eq));
        if (!params.emplace(key, tok.substr(eq + 1)).second)
            throw Error("template parameter '" + key + "' given twice");
    }
    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = params.find(key);
        if (it == params.end())
            return std::nullopt;
        auto v = it->second;
        params.erase(it);
        return v;
    };
    auto count = [&](const std::string& key) -> std::size_t {
        auto v = take(key);
        if (!v)
            throw Error("template '" + kind + "' needs " + key + "=<n>");
        std::size_t pos = 0;
        unsigned long n = 0;
        try {
            n = std::stoul(*v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v->size() || v->empty() || n < 1 || n > 4096)
            throw Error("template parameter " + key + "=" + *v + " must be an integer in 1..4096");
        return n;
    };
    auto finish = [&](LayerTemplate t) {
        if (!params.empty())
            throw Error("unknown template parameter '" + params.begin()->first + "' for '" + kind + "'");
        return t;
    };

    if (kind == "system")
        return finish(SystemTemplate{count("agents")});
    if (kind == "agent")
        return finish(AgentTemplate{count("subsystems")});
    if (kind == "behaviour" || kind == "behavior")
        return finish(BehaviourTemplate{});
    if (kind == "action") {
        ActionTemplate a;
        a.layer = layer == Layer::ActionSnd || layer == Layer::ActionRcv ? layer : Layer::ActionF;
        auto arr = take("arrangement");
        if (!arr)
            throw Error("template 'action' needs arrangement=sequential|parallel");
        auto parsed = parse_arrangement(*arr);
        if (!parsed || *parsed == Arrangement::Hybrid)
            throw Error("action arrangement '" + *arr + "' must be sequential or parallel");
        a.arrangement = *parsed;
        a.pages = count("pages");
        return finish(a);
    }
    if (kind == "comm") {
        CommTemplate c;
        auto m = take("mode");
        if (!m)
            throw Error("template 'comm' needs mode=<send>-<recv>");
        auto parsed = parse_comm_mode(*m);
        if (!parsed)
            throw Error("communication mode '" + *m + "' is not one of NB, B, BT pairs");
        c.mode = *parsed;
        if (auto p = take("pure")) {
            if (*p != "true" && *p != "false")
                throw Error("template parameter pure must be true or false");
            c.pure = *p == "true";
        }
        return finish(c);
    }
    throw Error("unknown template kind '" + kind + "'");
}

Panel generate_template(const LayerTemplate& t, std::string id) {
    Panel panel = std::visit(
        [&](const auto& v) -> Panel {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SystemTemplate>) {
                if (v.agents < 1)
                    throw Error("system template needs at least one agent");
                Panel p;
                p.id = id;
                p.layer = Layer::System;
                p.net = fork_join(v.agents, true, "agent");
                return p;
            } else if constexpr (std::is_same_v<T, AgentTemplate>) {
                if (v.subsystems < 1)
                    throw Error("agent template needs at least one subsystem");
                return open_panel(id, Layer::Agent, fork_join(v.subsystems, false, "subsystem"));
            } else if constexpr (std::is_same_v<T, BehaviourTemplate>) {
                NetBuilder b;
                auto p1 = b.add_place("p1");
                auto p2 = b.add_place("p2", 0, "f");
                auto p3 = b.add_place("p3", 0, "snd");
                auto p4 = b.add_place("p4", 0, "i++");
                auto p5 = b.add_place("p5", 0, "rcv");
                auto p6 = b.add_place("p6");
                auto stop = Guard::disjunction(Guard::atom("error"), Guard::atom("terminal"));
                std::pair<PlaceId, PlaceId> arcs[] = {{p1, p2}, {p2, p3}, {p3, p4}, {p4, p5}, {p5, p2}, {p5, p6}};
                for (std::size_t i = 0; i < 6; ++i) {
                    Guard g = i == 4 ? Guard::negate(stop) : i == 5 ? stop : Guard{};
                    auto tr = b.add_transition(tname(i + 1), g);
                    b.add_arc(arcs[i].first, tr);
                    b.add_arc(tr, arcs[i].second);
                }
                return open_panel(id, Layer::Behaviour, b.build());
            } else if constexpr (std::is_same_v<T, ActionTemplate>) {
                if (v.layer != Layer::ActionF && v.layer != Layer::ActionSnd && v.layer != Layer::ActionRcv)
                    throw Error("action template layer must be f, snd or rcv");
                const std::string op = v.layer == Layer::ActionF ? "f" : v.layer == Layer::ActionSnd ? "snd" : "rcv";
                switch (v.arrangement) {
                case Arrangement::Sequential:
                    if (v.pages < 1)
                        throw Error("action template needs at least one page");
                    return open_panel(id, v.layer, chain(v.pages, op));
                case Arrangement::Parallel:
                    if (v.pages < 1)
                        throw Error("action template needs at least one page");
                    return open_panel(id, v.layer, fork_join(v.pages, false, op));
                case Arrangement::Hybrid: {
                    if (!v.hybrid)
                        throw Error("hybrid action template needs a user net");
                    auto p = open_panel(id, v.layer, *v.hybrid);
                    validate_panel(p);
                    return p;
                }
                }
                throw Error("invalid arrangement");
            } else {
                Panel p;
                p.id = id;
                p.layer = Layer::CommModel;
                p.net = comm_net(v.mode, v.pure);
                return p;
            }
        },
        t);
    bool hybrid = std::holds_alternative<ActionTemplate>(t) &&
                  std::get<ActionTemplate>(t).arrangement == Arrangement::Hybrid;
    if (!hybrid)
        panel.template_decl = to_decl(t);
    return panel;
}

HierarchicalNet comm_pair(CommMode mode, bool pure, const std::string& prefix) {
    // Places 1-5, 12, 13 and transitions 1-9, 16, 17 belong to the sender.
    auto sender_place = [](int p) { return p <= 5 || p >= 12; };
    auto sender_transition = [](int t) { return t <= 9 || t >= 16; };
    HierarchicalNet h;
    std::map<int, PlaceId> ids[2];
    for (int side = 0; side < 2; ++side) {
        NetBuilder b;
        for (int p = 1; p <= 13; ++p) {
            bool shared = p == 6 || p == 7;
            if (shared || sender_place(p) == (side == 0))
                ids[side][p] = b.add_place(pname(p), p == 1 || p == 8 ? 1 : 0, comm_place_op(p));
        }
        std::set<std::pair<int, int>> loops;
        if (!pure)
            loops.insert(comm_loops().begin(), comm_loops().end());
        const auto& rows = comm_rows();
        for (int t = 1; t <= static_cast<int>(rows.size()); ++t) {
            if (sender_transition(t) != (side == 0))
                continue;
            Guard g;
            std::optional<int> prio;
            comm_transition_attrs(t, mode, g, prio);
            auto id = b.add_transition(tname(t), g, prio);
            for (int p : rows[t - 1].in)
                b.add_arc(ids[side].at(p), id);
            for (int p : rows[t - 1].out)
                b.add_arc(id, ids[side].at(p));
            for (auto [lt, lp] : loops) {
                if (lt == t) {
                    b.add_arc(ids[side].at(lp), id);
                    b.add_arc(id, ids[side].at(lp));
                }
            }
        }
        Panel panel;
        panel.id = prefix + (side == 0 ? "send" : "recv");
        panel.layer = Layer::CommModel;
        panel.net = b.build();
        h.add_panel(std::move(panel));
    }
    for (int p : {6, 7})
        h.add_fusion({prefix + pname(p), {{prefix + "send", ids[0].at(p)}, {prefix + "recv", ids[1].at(p)}}});
    h.set_root(prefix + "send");
    return h;
}

Panel make_subsystem(std::size_t behaviours, std::string id) {
    if (behaviours < 1)
        throw Error("subsystem needs at least one behaviour");
    NetBuilder b;
    auto in = b.add_place("p1");
    std::vector<PlaceId> bs;
    for (std::size_t i = 0; i < behaviours; ++i)
        bs.push_back(b.add_place(pname(i + 2), 0, "behaviour"));
    auto out = b.add_place(pname(behaviours + 2));
    std::size_t k = 0;
    auto link = [&](PlaceId from, PlaceId to) {
        auto t = b.add_transition(tname(++k));
        b.add_arc(from, t);
        b.add_arc(t, to);
    };
    link(in, bs.front());
    for (std::size_t i = 0; i + 1 < bs.size(); ++i) {
        link(bs[i], bs[i + 1]);
        link(bs[i + 1], bs[i]);
    }
    link(bs.back(), out);
    auto p = open_panel(std::move(id), Layer::Subsystem, b.build());
    return p;
}

HierarchicalNet make_toy_model(const ToyModelOptions& o) {
    HierarchicalNet h;
    auto bind = [](Panel& parent, std::size_t place_number, const std::string& child) {
        auto p = parent.net.find_place(pname(place_number));
        parent.page_bindings[*p] = child;
    };
    auto action = [&](const std::string& id, Layer layer, Arrangement arr) {
        ActionTemplate a;
        a.layer = layer;
        a.arrangement = arr;
        a.pages = o.action_pages;
        if (arr == Arrangement::Hybrid) {
            // Sequential prefix followed by a two-way fork.
            NetBuilder b;
            auto p1 = b.add_place("p1");
            auto p2 = b.add_place("p2");
            auto p3 = b.add_place("p3");
            auto p4 = b.add_place("p4");
            auto p5 = b.add_place("p5");
            auto t1 = b.add_transition("t1");
            auto t2 = b.add_transition("t2");
            auto t3 = b.add_transition("t3");
            b.add_arc(p1, t1);
            b.add_arc(t1, p2);
            b.add_arc(p2, t2);
            b.add_arc(t2, p3);
            b.add_arc(t2, p4);
            b.add_arc(p3, t3);
            b.add_arc(p4, t3);
            b.add_arc(t3, p5);
            a.hybrid = b.build();
        }
        h.add_panel(generate_template(a, id));
    };

    Panel system = generate_template(SystemTemplate{o.agents}, "system");
    std::vector<Panel> later;
    for (std::size_t j = 1; j <= o.agents; ++j) {
        std::string aid = "system/agent" + std::to_string(j);
        bind(system, j + 1, aid);
        Panel agent = generate_template(AgentTemplate{o.subsystems}, aid);
        for (std::size_t v = 1; v <= o.subsystems; ++v) {
            std::string sid = aid + "/subsystem" + std::to_string(v);
            bind(agent, v + 1, sid);
            Panel sub = make_subsystem(o.behaviours, sid);
            for (std::size_t w = 1; w <= o.behaviours; ++w) {
                std::string bid = sid + "/behaviour" + std::to_string(w);
                bind(sub, w + 1, bid);
                Panel beh = generate_template(BehaviourTemplate{}, bid);
                bind(beh, 2, bid + "/f");
                bind(beh, 3, bid + "/snd");
                bind(beh, 5, bid + "/rcv");
                action(bid + "/f", Layer::ActionF, o.f);
                action(bid + "/snd", Layer::ActionSnd, o.snd);
                action(bid + "/rcv", Layer::ActionRcv, o.rcv);
                later.push_back(std::move(beh));
            }
            later.push_back(std::move(sub));
        }
        later.push_back(std::move(agent));
    }
    h.add_panel(std::move(system));
    for (auto& p : later)
        h.add_panel(std::move(p));
    h.add_panel(generate_template(CommTemplate{o.comm, false}, "comm"));
    h.set_root("system");
    return h;
}

} // namespace hpn
