#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "hpn/invariants.hpp"
#include "hpn/reachability.hpp"

namespace hpn {

std::vector<std::uint32_t> strongly_connected_components(const ReachabilityGraph& g, std::size_t& count) {
    // Iterative Tarjan.
    const auto n = static_cast<std::uint32_t>(g.node_count());
    constexpr std::uint32_t unvisited = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    struct Frame {
        std::uint32_t node;
        std::size_t next_edge;
    };
    std::vector<Frame> call;
    std::uint32_t counter = 0;
    count = 0;

    for (std::uint32_t root = 0; root < n; ++root) {
        if (index[root] != unvisited)
            continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& f = call.back();
            auto out = g.out_edges(f.node);
            if (f.next_edge < out.size()) {
                auto w = out[f.next_edge++].to;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            auto v = f.node;
            call.pop_back();
            if (!call.empty())
                low[call.back().node] = std::min(low[call.back().node], low[v]);
            if (low[v] == index[v]) {
                std::uint32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = static_cast<std::uint32_t>(count);
                } while (w != v);
                ++count;
            }
        }
    }
    return comp;
}

PropertyVerdict check_properties(const ReachabilityGraph& g, const PlaceBasis* invariants) {
    PropertyVerdict v;
    v.mode = g.mode();
    v.definitive = !g.truncated() && !g.branch_cap_exceeded();
    const auto& net = g.net();
    const std::size_t np = net.place_count();
    const std::size_t nt = net.transition_count();
    const auto n = static_cast<std::uint32_t>(g.node_count());
    const auto expanded = static_cast<std::uint32_t>(g.expanded_count());

    // Deadlocks: a fully expanded node without successors, or (valued mode) a
    // node where some valuation leaves nothing fireable.
    std::optional<std::uint32_t> dead;
    for (std::uint32_t i = 0; i < expanded; ++i) {
        if (g.out_edges(i).empty()) {
            dead = i;
            break;
        }
    }
    if (!g.blocked().empty() && (!dead || g.blocked().front().node < *dead)) {
        dead = g.blocked().front().node;
        v.deadlock_valuation = g.blocked().front().valuation;
    }
    if (dead) {
        v.deadlock_free = false;
        v.deadlock_node = dead;
    }

    v.bound.assign(np, 0);
    std::vector<std::int64_t> sums;
    if (invariants && !invariants->stats.aborted) {
        v.conservative_confirmed = true;
        for (const auto& y : invariants->invariants)
            sums.push_back(y.weighted_sum(net.initial_marking()));
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        auto m = g.node(i);
        for (std::size_t p = 0; p < np; ++p) {
            v.bound[p] = std::max(v.bound[p], m[p]);
            if (m[p] > 1 && v.safe) {
                v.safe = false;
                v.unsafe_at = std::make_pair(i, PlaceId{static_cast<std::uint32_t>(p)});
            }
        }
        if (v.conservative_confirmed && *v.conservative_confirmed) {
            for (std::size_t k = 0; k < sums.size(); ++k) {
                if (invariants->invariants[k].weighted_sum(m) != sums[k]) {
                    v.conservative_confirmed = false;
                    break;
                }
            }
        }
    }

    // Liveness: every bottom component must carry an edge of every transition.
    // Components that hold unexpanded nodes are not known to be bottom.
    std::size_t count = 0;
    auto comp = strongly_connected_components(g, count);
    std::vector<char> bottom(count, 1);
    std::vector<std::vector<char>> has(count);
    std::vector<std::uint32_t> representative(count, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto c = comp[i];
        representative[c] = std::min(representative[c], i);
        if (i >= expanded)
            bottom[c] = 0;
        for (const auto& e : g.out_edges(i)) {
            if (comp[e.to] != c) {
                bottom[c] = 0;
            } else {
                if (has[c].empty())
                    has[c].assign(nt, 0);
                has[c][e.transition.index] = 1;
            }
        }
    }
    std::optional<std::pair<std::uint32_t, TransitionId>> worst;
    for (std::size_t c = 0; c < count; ++c) {
        if (!bottom[c])
            continue;
        for (std::uint32_t t = 0; t < nt; ++t) {
            if (has[c].empty() || !has[c][t]) {
                std::pair<std::uint32_t, TransitionId> cand{representative[c], TransitionId{t}};
                if (!worst || cand.first < worst->first)
                    worst = cand;
                break;
            }
        }
    }
    if (worst) {
        v.live = false;
        v.not_live = worst;
    }
    return v;
}

bool invariant_holds_everywhere(const ReachabilityGraph& g, std::span<const std::int64_t> weights) {
    if (weights.size() != g.net().place_count())
        throw StructuralError("weight vector length does not match place count");
    auto sum = [&](const Marking& m) {
        std::int64_t s = 0;
        for (std::size_t p = 0; p < weights.size(); ++p)
            s += weights[p] * static_cast<std::int64_t>(m[p]);
        return s;
    };
    const auto target = sum(g.net().initial_marking());
    for (std::uint32_t i = 0; i < g.node_count(); ++i)
        if (sum(g.node(i)) != target)
            return false;
    return true;
}

std::optional<std::vector<TransitionId>> find_cycle_realizing(const ReachabilityGraph& g,
                                                              const FiringCountVector& x,
                                                              std::size_t search_limit) {
    const auto& net = g.net();
    if (x.size() != net.transition_count())
        throw StructuralError("firing count vector length does not match transition count");
    if (x.is_zero())
        return std::vector<TransitionId>{};
    // Cheap necessary condition: the marking equation must return to M0.
    try {
        if (!(apply_firing_count(net, net.initial_marking(), x) == net.initial_marking()))
            return std::nullopt;
    } catch (const MarkingEquationError&) {
        return std::nullopt;
    }

    std::vector<std::uint32_t> remaining(x.counts().begin(), x.counts().end());
    std::size_t left = std::accumulate(remaining.begin(), remaining.end(), std::size_t{0});

    auto key = [&](std::uint32_t node) {
        std::string k(reinterpret_cast<const char*>(&node), sizeof node);
        k.append(reinterpret_cast<const char*>(remaining.data()), remaining.size() * sizeof(std::uint32_t));
        return k;
    };
    std::unordered_set<std::string> failed;

    struct Frame {
        std::uint32_t node;
        std::size_t next_edge;
    };
    std::vector<Frame> stack{{0, 0}};
    std::vector<TransitionId> path;
    std::size_t visited = 0;
    while (!stack.empty()) {
        auto& f = stack.back();
        if (left == 0) {
            if (f.node == 0)
                return path;
        }
        auto out = g.out_edges(f.node);
        bool descended = false;
        while (f.next_edge < out.size()) {
            const auto& e = out[f.next_edge++];
            if (remaining[e.transition.index] == 0)
                continue;
            --remaining[e.transition.index];
            --left;
            if (e.to >= g.expanded_count() && left != 0) {
                ++remaining[e.transition.index];
                ++left;
                continue;
            }
            if (failed.count(key(e.to))) {
                ++remaining[e.transition.index];
                ++left;
                continue;
            }
            if (++visited > search_limit)
                return std::nullopt;
            path.push_back(e.transition);
            stack.push_back({e.to, 0});
            descended = true;
            break;
        }
        if (descended)
            continue;
        auto node = stack.back().node;
        failed.insert(key(node));
        stack.pop_back();
        if (!path.empty()) {
            ++remaining[path.back().index];
            ++left;
            path.pop_back();
        }
    }
    return std::nullopt;
}

} // namespace hpn
