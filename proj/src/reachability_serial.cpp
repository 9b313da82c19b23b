#include <set>
#include <unordered_map>

#include "graph_assembler.hpp"

namespace hpn {

namespace {

struct Expansion {
    std::vector<TransitionId> fired;
    std::optional<Valuation> blocked;
    bool cap_exceeded = false;
};

Expansion expand_valued(const PetriNet& net, const Marking& m, const ReachOptions& options) {
    Expansion out;
    auto token_enabled = enabled(net, m);
    std::set<std::string> relevant;
    for (auto t : token_enabled)
        for (auto& a : net.transition(t).guard.atoms())
            relevant.insert(a);

    std::set<std::uint32_t> union_set;
    auto visit = [&](const Valuation& v) {
        auto f = fireable(net, m, v);
        if (f.empty() && !out.blocked) {
            Valuation shown;
            for (auto& a : relevant)
                shown[a] = v.at(a);
            out.blocked = shown;
        }
        for (auto t : f)
            union_set.insert(t.index);
    };

    if (options.valuations) {
        for (const auto& v : *options.valuations)
            visit(v);
    } else {
        std::vector<std::string> atoms(relevant.begin(), relevant.end());
        if (atoms.size() >= 63 || (std::uint64_t{1} << atoms.size()) > options.max_branches) {
            out.cap_exceeded = true;
            return out;
        }
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << atoms.size()); ++mask) {
            Valuation v;
            for (std::size_t i = 0; i < atoms.size(); ++i)
                v[atoms[i]] = (mask >> i) & 1;
            visit(v);
        }
    }
    for (auto t : union_set)
        out.fired.push_back(TransitionId{t});
    return out;
}

} // namespace

ReachabilityGraph build_graph_serial(const PetriNet& net, const ReachOptions& options) {
    if (options.state_limit < 1)
        throw Error("state limit must be at least 1");
    GraphAssembler out(net, options);

    std::vector<Marking> nodes{net.initial_marking()};
    std::unordered_map<Marking, std::uint32_t, MarkingHash> index{{net.initial_marking(), 0}};
    std::vector<Edge> edges;
    std::vector<BlockedNode> blocked;
    std::size_t expanded = 0;
    bool stop = false;

    for (std::size_t i = 0; i < nodes.size() && !stop; ++i) {
        const Marking m = nodes[i];
        Expansion ex;
        if (options.mode == GuardMode::Structural) {
            ex.fired = enabled(net, m);
        } else {
            ex = expand_valued(net, m, options);
            if (ex.cap_exceeded) {
                out.set_branch_cap_exceeded();
                break;
            }
        }
        if (options.mode == GuardMode::Valued && ex.blocked)
            blocked.push_back({static_cast<std::uint32_t>(i), *ex.blocked});
        for (auto t : ex.fired) {
            auto next = fire(net, m, t);
            auto it = index.find(next);
            std::uint32_t to;
            if (it != index.end()) {
                to = it->second;
            } else {
                if (nodes.size() >= options.state_limit) {
                    out.set_truncated();
                    stop = true;
                    break;
                }
                to = static_cast<std::uint32_t>(nodes.size());
                index.emplace(next, to);
                nodes.push_back(std::move(next));
            }
            edges.push_back({static_cast<std::uint32_t>(i), t, to});
        }
        if (!stop)
            expanded = i + 1;
    }

    std::vector<std::uint8_t> buf;
    for (const auto& m : nodes) {
        MarkingStore::encode(m.counts(), buf);
        out.store().insert(buf, MarkingStore::hash_bytes(buf));
    }
    out.edges() = std::move(edges);
    out.blocked() = std::move(blocked);
    out.set_expanded(expanded);
    return out.finish();
}

} // namespace hpn
