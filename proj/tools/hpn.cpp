// hpn: command-line front end for the hierarchical Petri net toolkit.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpn/invariants.hpp"
#include "hpn/metamodel.hpp"
#include "hpn/model_io.hpp"
#include "hpn/reachability.hpp"

namespace {

constexpr int kClean = 0;
constexpr int kViolations = 1;
constexpr int kInputError = 2;

struct Config {
    std::string input;
    std::string output;
    std::string panel;
    std::size_t limit = 1'000'000;
    std::string mode = "structural";
    std::string format = "text";
    bool lenient = false;
    bool purify = false;
    std::vector<std::string> template_args;
    std::string layer;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
    std::ostringstream ss;
    if (path == "-") {
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read '" + path + "'");
    ss << in.rdbuf();
    return ss.str();
}

void emit(const Config& cfg, const std::string& text) {
    if (cfg.output.empty() || cfg.output == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(cfg.output, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + cfg.output + "'");
    out << text;
}

hpn::HierarchicalNet load(const Config& cfg) {
    hpn::ParseOptions po;
    po.strict = !cfg.lenient;
    auto text = read_input(cfg.input);
    auto r = hpn::load_model(text, po);
    for (const auto& d : r.diagnostics)
        std::cerr << cfg.input << ":" << d.to_string() << "\n";
    if (!r.ok())
        throw InputError("'" + cfg.input + "' could not be loaded");
    return std::move(*r.net);
}

const hpn::Panel& target_panel(const hpn::HierarchicalNet& h, const Config& cfg) {
    const auto& id = cfg.panel.empty() ? h.root() : cfg.panel;
    if (!h.contains(id))
        throw InputError("no panel '" + id + "'");
    return h.panel(id);
}

/// --panel: that panel standalone; otherwise the flattened root.
hpn::PetriNet target_net(const hpn::HierarchicalNet& h, const Config& cfg) {
    if (!cfg.panel.empty())
        return hpn::standalone_net(target_panel(h, cfg));
    return hpn::standalone_net(h);
}

hpn::GuardMode parse_mode(const std::string& m) {
    return m == "valued" ? hpn::GuardMode::Valued : hpn::GuardMode::Structural;
}

std::string vec(const std::vector<std::int64_t>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

int cmd_validate(const Config& cfg) {
    auto h = load(cfg);
    std::vector<std::string> lines;
    for (const auto& [id, panel] : h.panels()) {
        if (panel.layer == hpn::Layer::Subsystem) {
            for (const auto& v : hpn::validate_subsystem_net(hpn::standalone_net(panel)))
                lines.push_back("violation " + id + ": " + v);
        } else if (hpn::is_template_layer(panel.layer)) {
            std::string note;
            bool action = panel.layer == hpn::Layer::ActionF || panel.layer == hpn::Layer::ActionSnd ||
                          panel.layer == hpn::Layer::ActionRcv;
            if (!hpn::match_template(panel, &note) && (panel.template_decl || !action))
                lines.push_back("violation " + id + ": " + note);
        }
    }
    std::string out;
    for (const auto& l : lines)
        out += l + "\n";
    if (lines.empty())
        out = "ok: " + std::to_string(h.panels().size()) + " panels\n";
    emit(cfg, out);
    return lines.empty() ? kClean : kViolations;
}

int cmd_analyze(const Config& cfg) {
    auto h = load(cfg);
    hpn::AnalysisConfig ac;
    ac.state_limit = cfg.limit;
    auto report = hpn::analyze_hierarchy(h, ac);
    emit(cfg, cfg.format == "json" ? report.to_json() : report.to_text());
    return report.overall ? kClean : kViolations;
}

int cmd_reach(const Config& cfg) {
    auto h = load(cfg);
    auto net = target_net(h, cfg);
    if (cfg.purify) {
        auto pure = hpn::purify(net);
        for (const auto& l : pure.removed)
            std::cerr << "removed self-loop " << net.transition(l.transition).name << "<->"
                      << net.place(l.place).name << "\n";
        net = std::move(pure.net);
    }
    hpn::ReachOptions ro;
    ro.state_limit = cfg.limit;
    ro.mode = parse_mode(cfg.mode);
    auto g = hpn::build_graph(net, ro);
    auto v = hpn::check_properties(g);
    if (g.truncated())
        std::cerr << "warning: state limit " << cfg.limit << " reached; verdicts hold only up to the limit\n";
    if (g.branch_cap_exceeded())
        std::cerr << "warning: valuation branch cap exceeded; exploration stopped\n";
    if (cfg.format == "dot") {
        emit(cfg, hpn::export_dot(g));
    } else if (cfg.format == "json") {
        emit(cfg, hpn::export_json(g, &v));
    } else {
        std::ostringstream o;
        o << "mode: " << hpn::to_string(g.mode()) << "\n";
        o << "markings: " << g.node_count() << "\n";
        o << "edges: " << g.edges().size() << "\n";
        o << "truncated: " << (g.truncated() ? "yes" : "no") << "\n";
        auto yes = [&](bool b) { return b ? (v.definitive ? "yes" : "yes up to the limit") : "no"; };
        o << "deadlock-free: " << yes(v.deadlock_free);
        if (v.deadlock_node)
            o << " (M" << *v.deadlock_node << " " << g.node(*v.deadlock_node).to_string() << ")";
        o << "\n";
        o << "safe: " << yes(v.safe);
        if (v.unsafe_at)
            o << " (M" << v.unsafe_at->first << ", " << net.place(v.unsafe_at->second).name << ")";
        o << "\n";
        o << "live: " << yes(v.live);
        if (v.not_live)
            o << " (" << net.transition(v.not_live->second).name << " dead from M" << v.not_live->first << ")";
        o << "\n";
        std::uint32_t max_bound = 0;
        std::string over;
        for (std::size_t p = 0; p < v.bound.size(); ++p) {
            max_bound = std::max(max_bound, v.bound[p]);
            if (v.bound[p] > 1)
                over += " " + net.place(hpn::PlaceId{static_cast<std::uint32_t>(p)}).name + "=" +
                        std::to_string(v.bound[p]);
        }
        o << "max tokens per place: " << max_bound << "\n";
        if (!over.empty())
            o << "places above one token:" << over << "\n";
        if (!v.definitive)
            o << "note: verdicts hold up to the state limit\n";
        emit(cfg, o.str());
    }
    if (!v.definitive)
        return kClean;
    return v.deadlock_free && v.safe ? kClean : kViolations;
}

int cmd_invariants(const Config& cfg) {
    auto h = load(cfg);
    auto net = target_net(h, cfg);
    auto pure = hpn::purify(net);
    auto n = hpn::incidence_matrix(pure.net);
    auto pb = hpn::minimal_place_invariants(n, net.initial_marking());
    auto tb = hpn::minimal_transition_invariants(n);
    auto cls = hpn::classify_conservativeness(pb, net.initial_marking());
    auto safety = hpn::safety_from_invariants(pb, net.initial_marking());
    if (pb.stats.aborted)
        std::cerr << "warning: place invariant enumeration aborted: " << pb.stats.abort_reason << "\n";
    if (tb.stats.aborted)
        std::cerr << "warning: transition invariant enumeration aborted: " << tb.stats.abort_reason << "\n";

    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        std::vector<std::string> places, transitions;
        for (const auto& p : net.places())
            places.push_back(p.name);
        for (const auto& t : net.transitions())
            transitions.push_back(t.name);
        j["places"] = places;
        j["transitions"] = transitions;
        nlohmann::ordered_json removed = nlohmann::ordered_json::array();
        for (const auto& l : pure.removed)
            removed.push_back({{"transition", net.transition(l.transition).name}, {"place", net.place(l.place).name}});
        j["removed_self_loops"] = removed;
        nlohmann::ordered_json ps = nlohmann::ordered_json::array();
        for (const auto& y : pb.invariants)
            ps.push_back({{"weights", y.weights}, {"weighted_sum", y.weighted_sum_at_m0}});
        j["place_invariants"] = ps;
        nlohmann::ordered_json ts = nlohmann::ordered_json::array();
        for (const auto& x : tb.invariants)
            ts.push_back(x.counts);
        j["transition_invariants"] = ts;
        j["aborted"] = pb.stats.aborted || tb.stats.aborted;
        j["conservativeness"] = std::string(hpn::to_string(cls.cls));
        j["witness"] = cls.witness ? nlohmann::ordered_json(*cls.witness) : nlohmann::ordered_json(nullptr);
        j["weighted_sum"] = cls.weighted_sum ? nlohmann::ordered_json(*cls.weighted_sum) : nlohmann::ordered_json(nullptr);
        j["safety"] = std::string(hpn::to_string(safety.cls));
        j["bound"] = safety.bound ? nlohmann::ordered_json(*safety.bound) : nlohmann::ordered_json(nullptr);
        emit(cfg, j.dump(2) + "\n");
    } else {
        std::ostringstream o;
        for (const auto& l : pure.removed)
            o << "removed self-loop " << net.transition(l.transition).name << "<->" << net.place(l.place).name << "\n";
        o << "place invariants: " << pb.invariants.size() << "\n";
        for (const auto& y : pb.invariants)
            o << "  y = " << vec(y.weights) << "  y.M0 = " << y.weighted_sum_at_m0 << "\n";
        o << "transition invariants: " << tb.invariants.size() << "\n";
        for (const auto& x : tb.invariants)
            o << "  x = " << vec(x.counts) << "\n";
        o << "conservativeness: " << hpn::to_string(cls.cls);
        if (cls.witness)
            o << " " << vec(*cls.witness) << " weighted sum " << *cls.weighted_sum;
        o << "\n";
        o << "safety from invariants: " << hpn::to_string(safety.cls);
        if (safety.bound)
            o << " (bound " << *safety.bound << ")";
        o << "\n";
        emit(cfg, o.str());
    }
    return pb.stats.aborted || tb.stats.aborted ? kViolations : kClean;
}

int cmd_template(const Config& cfg) {
    if (cfg.template_args.empty())
        throw InputError("template kind missing");
    if (cfg.template_args[0] == "toy") {
        if (cfg.template_args.size() > 1)
            throw InputError("template 'toy' takes no parameters");
        emit(cfg, hpn::serialize(hpn::make_toy_model()));
        return kClean;
    }
    std::string decl;
    for (const auto& a : cfg.template_args)
        decl += (decl.empty() ? "" : " ") + a;
    hpn::Layer layer = hpn::Layer::Other;
    if (!cfg.layer.empty()) {
        auto l = hpn::parse_layer(cfg.layer);
        if (!l)
            throw InputError("unknown layer '" + cfg.layer + "'");
        layer = *l;
    }
    hpn::Panel panel;
    try {
        auto t = hpn::parse_template_decl(decl, layer);
        panel = hpn::generate_template(t, cfg.panel.empty() ? "panel" : cfg.panel);
    } catch (const hpn::Error& e) {
        throw InputError(e.what());
    }
    panel.template_decl.reset();
    hpn::HierarchicalNet h;
    h.add_panel(std::move(panel));
    emit(cfg, hpn::serialize(h));
    return kClean;
}

int cmd_reduce(const Config& cfg) {
    auto h = load(cfg);
    const auto& panel = target_panel(h, cfg);
    auto reduced = hpn::reduce_panel(panel);
    auto pure = hpn::purify(reduced.net);
    std::string out;
    for (const auto& l : pure.removed)
        out += "# removed self-loop " + reduced.net.transition(l.transition).name + "<->" +
               reduced.net.place(l.place).name + "\n";
    for (const auto& [page, child] : reduced.page_to_panel)
        out += "# page " + page + " stands for panel " + child + "\n";
    auto text = hpn::serialize(pure.net, panel.id + "/reduced", hpn::Layer::Other);
    emit(cfg, text.substr(0, text.find('\n') + 1) + out + text.substr(text.find('\n') + 1));
    return kClean;
}

std::string net_dot(const hpn::PetriNet& net) {
    std::string out = "digraph net {\n";
    for (const auto& p : net.places())
        out += "  \"" + p.name + "\" [shape=circle];\n";
    for (const auto& t : net.transitions())
        out += "  \"" + t.name + "\" [shape=box];\n";
    for (const auto& a : net.arcs()) {
        auto name = [&](hpn::NodeRef r) {
            return r.kind == hpn::NodeKind::Place ? net.place(hpn::PlaceId{r.index}).name
                                                  : net.transition(hpn::TransitionId{r.index}).name;
        };
        out += "  \"" + name(a.source) + "\" -> \"" + name(a.target) + "\"";
        if (a.weight != 1)
            out += " [label=\"" + std::to_string(a.weight) + "\"]";
        out += ";\n";
    }
    return out + "}\n";
}

int cmd_export(const Config& cfg) {
    auto h = load(cfg);
    if (cfg.format == "json")
        emit(cfg, hpn::to_json(hpn::to_document(h)));
    else if (cfg.format == "dot")
        emit(cfg, net_dot(cfg.panel.empty() ? hpn::flatten(h, h.root()) : target_panel(h, cfg).net));
    else
        emit(cfg, hpn::serialize(h));
    return kClean;
}

} // namespace

int main(int argc, char** argv) {
    Config cfg;
    if (const char* env = std::getenv("HPN_STATE_LIMIT")) {
        try {
            std::size_t pos = 0;
            auto v = std::stoull(env, &pos);
            if (pos != std::string(env).size() || v == 0)
                throw std::invalid_argument("bad");
            cfg.limit = v;
        } catch (const std::exception&) {
            std::cerr << "error: HPN_STATE_LIMIT must be a positive integer\n";
            return kInputError;
        }
    }

    CLI::App app{"Hierarchical Petri net analysis"};
    app.require_subcommand(1);
    std::vector<std::pair<CLI::App*, int (*)(const Config&)>> commands;

    auto common = [&](CLI::App* sub, bool needs_input) {
        if (needs_input)
            sub->add_option("input", cfg.input, "model file (.hpn), '-' for stdin")->required();
        sub->add_option("--out,-o", cfg.output, "write the result to a file");
        sub->add_option("--limit", cfg.limit, "state limit")->check(CLI::PositiveNumber);
        sub->add_option("--mode", cfg.mode, "guard mode")->check(CLI::IsMember({"structural", "valued"}));
        sub->add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"text", "json", "dot"}));
        sub->add_flag("--strict", [&](std::int64_t) { cfg.lenient = false; }, "reject unknown keys (default)");
        sub->add_flag("--lenient", cfg.lenient, "warn about unknown keys instead of failing");
        sub->add_option("--panel", cfg.panel, "panel to operate on");
    };

    auto add = [&](const char* name, const char* help, int (*fn)(const Config&), bool needs_input = true) {
        auto* sub = app.add_subcommand(name, help);
        common(sub, needs_input);
        commands.emplace_back(sub, fn);
        return sub;
    };
    add("validate", "check syntax and structural rules", cmd_validate);
    add("analyze", "layer-by-layer inheritance report", cmd_analyze);
    add("reduce", "close_loop, collapse pages and purify a panel", cmd_reduce);
    add("reach", "reachability graph and exact verdicts", cmd_reach)
        ->add_flag("--purify", cfg.purify, "remove self-loops before exploring");
    add("invariants", "place/transition invariant bases", cmd_invariants);
    add("export", "canonical text, JSON or DOT export", cmd_export);
    auto* tmpl = add("template", "emit a generated layer template", cmd_template, false);
    tmpl->add_option("kind", cfg.template_args, "template kind and key=value parameters")->required();
    tmpl->add_option("--layer", cfg.layer, "layer for action templates (ActionF, ActionSnd, ActionRcv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kClean : kInputError;
    }
    try {
        for (auto& [sub, fn] : commands)
            if (sub->parsed())
                return fn(cfg);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const hpn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}
