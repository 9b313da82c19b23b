#include <json.hpp>

#include "hpn/reachability.hpp"

namespace hpn {

namespace {

std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}

nlohmann::ordered_json valuation_json(const Valuation& v) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [k, b] : v)
        out[k] = b;
    return out;
}

} // namespace

std::string export_dot(const ReachabilityGraph& g) {
    std::string out = "digraph reachability {\n";
    for (std::uint32_t i = 0; i < g.node_count(); ++i)
        out += "  n" + std::to_string(i) + " [label=\"M" + std::to_string(i) + " " + g.node(i).to_string() + "\"];\n";
    for (const auto& e : g.edges())
        out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" +
               dot_escape(g.net().transition(e.transition).name) + "\"];\n";
    out += "}\n";
    return out;
}

std::string export_json(const ReachabilityGraph& g, const PropertyVerdict* verdict) {
    using nlohmann::ordered_json;
    const auto& net = g.net();
    ordered_json j;
    j["mode"] = std::string(to_string(g.mode()));
    ordered_json places = ordered_json::array();
    for (const auto& p : net.places())
        places.push_back(p.name);
    j["places"] = places;
    j["node_count"] = g.node_count();
    j["edge_count"] = g.edges().size();
    j["expanded_count"] = g.expanded_count();
    j["truncated"] = g.truncated();
    j["branch_cap_exceeded"] = g.branch_cap_exceeded();
    j["state_limit"] = g.state_limit();
    ordered_json nodes = ordered_json::array();
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
        auto m = g.node(i);
        nodes.push_back({{"id", i}, {"marking", std::vector<std::uint32_t>(m.counts().begin(), m.counts().end())}});
    }
    j["nodes"] = nodes;
    ordered_json edges = ordered_json::array();
    for (const auto& e : g.edges())
        edges.push_back({{"from", e.from}, {"transition", net.transition(e.transition).name}, {"to", e.to}});
    j["edges"] = edges;
    ordered_json blocked = ordered_json::array();
    for (const auto& b : g.blocked())
        blocked.push_back({{"node", b.node}, {"valuation", valuation_json(b.valuation)}});
    j["blocked"] = blocked;

    if (verdict) {
        ordered_json v;
        v["mode"] = std::string(to_string(verdict->mode));
        v["definitive"] = verdict->definitive;
        v["deadlock_free"] = verdict->deadlock_free;
        if (verdict->deadlock_node) {
            v["deadlock_node"] = *verdict->deadlock_node;
            if (verdict->deadlock_valuation)
                v["deadlock_valuation"] = valuation_json(*verdict->deadlock_valuation);
        }
        v["safe"] = verdict->safe;
        if (verdict->unsafe_at)
            v["unsafe_at"] = {{"node", verdict->unsafe_at->first},
                              {"place", net.place(verdict->unsafe_at->second).name}};
        v["bound"] = verdict->bound;
        if (verdict->conservative_confirmed)
            v["conservative_confirmed"] = *verdict->conservative_confirmed;
        v["live"] = verdict->live;
        if (verdict->not_live)
            v["not_live"] = {{"node", verdict->not_live->first},
                             {"transition", net.transition(verdict->not_live->second).name}};
        j["verdict"] = v;
    }
    return j.dump(2) + "\n";
}

} // namespace hpn
