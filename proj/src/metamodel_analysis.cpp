#include <algorithm>
#include <map>
#include <mutex>

#include <json.hpp>

#include "hpn/isomorphism.hpp"
#include "hpn/metamodel.hpp"

namespace hpn {

std::vector<std::string> validate_subsystem_net(const PetriNet& net) {
    std::vector<std::string> out;
    const auto np = static_cast<std::uint32_t>(net.place_count());
    const auto nt = static_cast<std::uint32_t>(net.transition_count());
    for (std::uint32_t t = 0; t < nt; ++t) {
        const auto& tn = net.transition(TransitionId{t}).name;
        std::int64_t sum = 0;
        std::size_t minus = 0, plus = 0, other = 0;
        for (std::uint32_t p = 0; p < np; ++p) {
            auto pre = net.pre(TransitionId{t}, PlaceId{p});
            auto post = net.post(TransitionId{t}, PlaceId{p});
            if (pre && post)
                out.push_back("self-loop " + tn + "<->" + net.place(PlaceId{p}).name);
            auto n = static_cast<std::int64_t>(post) - static_cast<std::int64_t>(pre);
            sum += n;
            if (n == -1)
                ++minus;
            else if (n == 1)
                ++plus;
            else if (n != 0)
                ++other;
        }
        if (sum != 0)
            out.push_back("row " + tn + ": token non-conservation");
        else if (minus != 1 || plus != 1 || other != 0)
            out.push_back("row " + tn + ": expected exactly one -1 and one +1");
    }

    std::vector<std::string> sources, sinks;
    std::vector<char> has_in(np, 0), has_out(np, 0);
    for (const auto& a : net.arcs()) {
        if (a.source.kind == NodeKind::Place)
            has_out[a.source.index] = 1;
        else
            has_in[a.target.index] = 1;
    }
    for (std::uint32_t p = 0; p < np; ++p) {
        if (!has_in[p])
            sources.push_back(net.place(PlaceId{p}).name);
        if (!has_out[p])
            sinks.push_back(net.place(PlaceId{p}).name);
    }
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v)
            s += (s.empty() ? "" : ", ") + x;
        return s;
    };
    if (sources.size() > 1)
        out.push_back("more than one input place: " + join(sources));
    if (sinks.size() > 1)
        out.push_back("more than one output place: " + join(sinks));
    if (sources.size() != sinks.size() && sources.size() <= 1 && sinks.size() <= 1)
        out.push_back(sources.empty() ? "output place " + join(sinks) + " without an input place"
                                      : "input place " + join(sources) + " without an output place");
    return out;
}

GuardDeterminism check_guard_determinism(std::span<const Guard> guards, std::size_t atom_limit) {
    GuardDeterminism out;
    std::set<std::string> atoms;
    for (const auto& g : guards)
        for (const auto& a : g.atoms())
            atoms.insert(a);
    if (atoms.size() > atom_limit || atoms.size() >= 63) {
        out.aborted = true;
        return out;
    }
    std::vector<std::string> names(atoms.begin(), atoms.end());
    out.complete = true;
    out.exclusive = true;
    Valuation v;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << names.size()); ++mask) {
        for (std::size_t i = 0; i < names.size(); ++i)
            v[names[i]] = (mask >> i) & 1;
        std::vector<std::size_t> on;
        for (std::size_t i = 0; i < guards.size(); ++i)
            if (guards[i].evaluate(v))
                on.push_back(i);
        if (on.empty() && out.complete) {
            out.complete = false;
            out.incomplete_at = v;
        }
        if (on.size() >= 2 && out.exclusive) {
            out.exclusive = false;
            out.overlap_at = std::make_tuple(on[0], on[1], v);
        }
    }
    return out;
}

GuardDeterminism check_guard_determinism(const PetriNet& net, PlaceId place, std::size_t atom_limit) {
    std::vector<Guard> guards;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t)
        if (net.pre(TransitionId{t}, place))
            guards.push_back(net.transition(TransitionId{t}).guard);
    return check_guard_determinism(guards, atom_limit);
}

PetriNet standalone_net(const Panel& panel) {
    if (panel.closed())
        return panel.net;
    auto b = reduce_panel(panel).net.to_builder();
    Marking m(b.place_count());
    m[*panel.input_place] = 1;
    b.set_marking(m);
    return b.build();
}

PetriNet standalone_net(const HierarchicalNet& h) {
    const auto& root = h.panel(h.root());
    auto flat = flatten(h, h.root());
    if (root.closed())
        return flat;
    Panel whole;
    whole.id = root.id;
    whole.layer = root.layer;
    whole.input_place = flat.find_place(root.net.place(*root.input_place).name);
    whole.output_place = flat.find_place(root.net.place(*root.output_place).name);
    whole.net = std::move(flat);
    return standalone_net(whole);
}

PanelVerdict analyze_panel(const Panel& panel, const AnalysisConfig& config) {
    PanelVerdict out;
    auto net = standalone_net(panel);
    auto pure = purify(net);
    auto basis = minimal_place_invariants(incidence_matrix(pure.net), net.initial_marking());
    out.conservativeness = classify_conservativeness(basis, net.initial_marking());

    ReachOptions ro;
    ro.state_limit = config.state_limit;
    ro.mode = net.has_conditions() && !config.force_structural ? GuardMode::Valued : GuardMode::Structural;
    auto g = build_graph(pure.net, ro);
    auto v = check_properties(g);
    out.mode = ro.mode;
    out.states = g.node_count();
    out.truncated = !v.definitive;
    out.safe = v.safe && v.definitive;
    out.deadlock_free = v.deadlock_free && v.definitive;
    return out;
}

const PanelVerdict& template_verdict(const LayerTemplate& t) {
    static std::mutex mu;
    static std::map<std::string, PanelVerdict> cache;
    auto decl = to_decl(t);
    if (std::holds_alternative<ActionTemplate>(t) &&
        std::get<ActionTemplate>(t).arrangement == Arrangement::Hybrid)
        throw Error("hybrid arrangements have no template verdict");
    decl += " @" + std::string(to_string(layer_of(t)));
    std::lock_guard lock(mu);
    auto it = cache.find(decl);
    if (it == cache.end())
        it = cache.emplace(decl, analyze_panel(generate_template(t, "template"))).first;
    return it->second;
}

bool is_template_layer(Layer layer) {
    switch (layer) {
    case Layer::System:
    case Layer::Agent:
    case Layer::Behaviour:
    case Layer::ActionF:
    case Layer::ActionSnd:
    case Layer::ActionRcv:
    case Layer::CommModel:
        return true;
    default:
        return false;
    }
}

namespace {

bool matches(const Panel& panel, const LayerTemplate& t) {
    if (layer_of(t) != panel.layer)
        return false;
    auto generated = generate_template(t, panel.id);
    IsomorphismOptions o;
    o.compare_markings = panel.closed();
    return isomorphic(panel.net, generated.net, o);
}

} // namespace

std::optional<LayerTemplate> match_template(const Panel& panel, std::string* note) {
    auto set_note = [&](std::string s) {
        if (note)
            *note = std::move(s);
    };
    if (panel.template_decl) {
        LayerTemplate t;
        try {
            t = parse_template_decl(*panel.template_decl, panel.layer);
        } catch (const Error& e) {
            set_note(std::string("invalid template declaration: ") + e.what());
            return std::nullopt;
        }
        if (matches(panel, t))
            return t;
        set_note("net does not match its template declaration '" + *panel.template_decl + "'");
        return std::nullopt;
    }
    const std::size_t np = panel.net.place_count();
    std::vector<LayerTemplate> candidates;
    switch (panel.layer) {
    case Layer::System:
        if (np >= 2)
            candidates.push_back(SystemTemplate{np - 1});
        break;
    case Layer::Agent:
        if (np >= 3)
            candidates.push_back(AgentTemplate{np - 2});
        break;
    case Layer::Behaviour:
        candidates.push_back(BehaviourTemplate{});
        break;
    case Layer::ActionF:
    case Layer::ActionSnd:
    case Layer::ActionRcv:
        if (np >= 3) {
            candidates.push_back(ActionTemplate{panel.layer, Arrangement::Sequential, np - 2, {}});
            candidates.push_back(ActionTemplate{panel.layer, Arrangement::Parallel, np - 2, {}});
        }
        break;
    case Layer::CommModel:
        for (auto m : all_comm_modes()) {
            candidates.push_back(CommTemplate{m, false});
            candidates.push_back(CommTemplate{m, true});
        }
        break;
    default:
        break;
    }
    for (const auto& t : candidates)
        if (matches(panel, t))
            return t;
    set_note("net matches no template of its layer");
    return std::nullopt;
}

std::string_view to_string(AnalysisMethod m) { return m == AnalysisMethod::Inherited ? "inherited" : "fresh"; }

const ReportRow* InheritanceReport::find(std::string_view panel) const {
    for (const auto& r : rows)
        if (r.panel == panel)
            return &r;
    return nullptr;
}

namespace {

std::string vector_text(const std::vector<std::int64_t>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

void fill_verdict(ReportRow& row, const PanelVerdict& v) {
    row.cls = v.conservativeness.cls;
    row.witness = v.conservativeness.witness.value_or(std::vector<std::int64_t>{});
    row.weighted_sum = v.conservativeness.weighted_sum;
    row.safe = v.safe;
    row.deadlock_free = v.deadlock_free;
    if (v.truncated)
        row.notes.push_back("state space truncated at " + std::to_string(v.states) + " markings");
    if (v.conservativeness.aborted)
        row.notes.push_back("invariant enumeration aborted");
}

} // namespace

InheritanceReport analyze_hierarchy(const HierarchicalNet& h, const AnalysisConfig& config) {
    h.validate();
    InheritanceReport report;
    bool parallel_seen = false;
    for (const auto& [id, panel] : h.panels()) {
        ReportRow row;
        row.panel = id;
        row.layer = panel.layer;
        std::optional<LayerTemplate> t;
        std::string note;
        if (is_template_layer(panel.layer))
            t = match_template(panel, &note);
        if (t) {
            row.kind = to_decl(*t);
            bool bb = false;
            if (auto* c = std::get_if<CommTemplate>(&*t))
                bb = c->mode.send_timeout == Timeout::Infinite && c->mode.recv_timeout == Timeout::Infinite;
            if (auto* a = std::get_if<ActionTemplate>(&*t); a && a->arrangement == Arrangement::Parallel)
                parallel_seen = true;
            if (bb) {
                row.method = AnalysisMethod::Fresh;
                row.notes.push_back("B-B communication is analysed pairwise");
                fill_verdict(row, analyze_panel(panel, config));
            } else {
                row.method = AnalysisMethod::Inherited;
                fill_verdict(row, template_verdict(*t));
            }
        } else {
            const bool action = panel.layer == Layer::ActionF || panel.layer == Layer::ActionSnd ||
                                panel.layer == Layer::ActionRcv;
            row.user_defined = !is_template_layer(panel.layer) || action;
            row.kind = action ? "hybrid" : "user-defined";
            row.method = AnalysisMethod::Fresh;
            if (!note.empty() && !action)
                row.notes.push_back(note + "; analysed fresh");
            try {
                fill_verdict(row, analyze_panel(panel, config));
            } catch (const Error& e) {
                row.violations.push_back(e.what());
            }
            if (panel.layer == Layer::Subsystem) {
                for (auto& v : validate_subsystem_net(standalone_net(panel)))
                    row.violations.push_back(std::move(v));
                const auto& net = panel.net;
                for (std::uint32_t p = 0; p < net.place_count(); ++p) {
                    std::vector<Guard> guards;
                    bool conditioned = false;
                    for (std::uint32_t k = 0; k < net.transition_count(); ++k) {
                        if (net.pre(TransitionId{k}, PlaceId{p})) {
                            guards.push_back(net.transition(TransitionId{k}).guard);
                            conditioned |= !guards.back().is_constant_true();
                        }
                    }
                    if (!conditioned || guards.size() < 2)
                        continue;
                    auto d = check_guard_determinism(guards);
                    const auto& pn = net.place(PlaceId{p}).name;
                    if (d.aborted)
                        row.notes.push_back("place " + pn + ": too many condition atoms to check");
                    if (!d.aborted && !d.complete)
                        row.violations.push_back("place " + pn + ": conditions are not complete");
                    if (!d.aborted && !d.exclusive)
                        row.violations.push_back("place " + pn + ": conditions are not mutually exclusive");
                }
            }
        }
        report.rows.push_back(std::move(row));
    }
    report.overall = std::all_of(report.rows.begin(), report.rows.end(), [](const auto& r) { return r.ok(); });
    for (const auto& r : report.rows)
        if (!r.ok() || (!r.notes.empty() && r.method == AnalysisMethod::Fresh && !r.user_defined))
            report.attention.push_back(r.panel);
    if (parallel_seen)
        report.footnotes.push_back(
            "parallel arrangement: the weighted sum equals the page count mu");
    return report;
}

std::string InheritanceReport::to_text() const {
    std::vector<std::array<std::string, 9>> table;
    table.push_back({"panel", "layer", "user-defined", "method", "conservative", "vector y", "weighted sum", "safe",
                     "deadlock-free"});
    for (const auto& r : rows) {
        table.push_back({r.panel, std::string(hpn::to_string(r.layer)), r.user_defined ? "yes" : "no",
                         std::string(hpn::to_string(r.method)), std::string(hpn::to_string(r.cls)),
                         r.witness.empty() ? "-" : vector_text(r.witness),
                         r.weighted_sum ? std::to_string(*r.weighted_sum) : "-", r.safe ? "yes" : "no",
                         r.deadlock_free ? "yes" : "no"});
    }
    std::array<std::size_t, 9> width{};
    for (const auto& line : table)
        for (std::size_t c = 0; c < 9; ++c)
            width[c] = std::max(width[c], line[c].size());
    std::string out;
    for (const auto& line : table) {
        std::string s;
        for (std::size_t c = 0; c < 9; ++c) {
            s += line[c];
            if (c + 1 < 9)
                s += std::string(width[c] - line[c].size() + 2, ' ');
        }
        out += s + "\n";
    }
    for (const auto& r : rows) {
        for (const auto& v : r.violations)
            out += "violation " + r.panel + ": " + v + "\n";
        for (const auto& n : r.notes)
            out += "note " + r.panel + ": " + n + "\n";
    }
    for (std::size_t i = 0; i < footnotes.size(); ++i)
        out += "[" + std::to_string(i + 1) + "] " + footnotes[i] + "\n";
    out += std::string("overall: ") + (overall ? "ok" : "violations found") + "\n";
    if (!attention.empty()) {
        out += "attention:";
        for (const auto& a : attention)
            out += " " + a;
        out += "\n";
    }
    return out;
}

std::string InheritanceReport::to_json() const {
    using nlohmann::ordered_json;
    ordered_json j;
    ordered_json rs = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json o;
        o["panel"] = r.panel;
        o["layer"] = std::string(hpn::to_string(r.layer));
        o["kind"] = r.kind;
        o["user_defined"] = r.user_defined;
        o["method"] = std::string(hpn::to_string(r.method));
        o["conservativeness"] = std::string(hpn::to_string(r.cls));
        o["witness"] = r.witness;
        if (r.weighted_sum)
            o["weighted_sum"] = *r.weighted_sum;
        else
            o["weighted_sum"] = nullptr;
        o["safe"] = r.safe;
        o["deadlock_free"] = r.deadlock_free;
        o["violations"] = r.violations;
        o["notes"] = r.notes;
        rs.push_back(o);
    }
    j["rows"] = rs;
    j["overall"] = overall;
    j["attention"] = attention;
    j["footnotes"] = footnotes;
    return j.dump(2) + "\n";
}

} // namespace hpn
