#include "hpn/isomorphism.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <tuple>

namespace hpn {

namespace {

struct TransitionKey {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pre;  // (mapped place, weight), sorted
    std::vector<std::pair<std::uint32_t, std::uint32_t>> post;
    std::string guard;
    int priority = 0;
    bool has_priority = false;
    friend auto operator<=>(const TransitionKey&, const TransitionKey&) = default;
};

/// Invariant of a place under relabelling.
using PlaceSignature = std::tuple<std::uint32_t, std::vector<std::uint32_t>, std::vector<std::uint32_t>>;

PlaceSignature signature(const PetriNet& net, PlaceId p, bool markings) {
    std::vector<std::uint32_t> in, out;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t) {
        if (auto w = net.post(TransitionId{t}, p))
            in.push_back(w);
        if (auto w = net.pre(TransitionId{t}, p))
            out.push_back(w);
    }
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    return {markings ? net.initial_marking()[p] : 0, in, out};
}

TransitionKey key(const PetriNet& net, TransitionId t, const std::vector<std::uint32_t>& map,
                  const IsomorphismOptions& o) {
    TransitionKey k;
    for (const auto& in : net.inputs(t))
        k.pre.emplace_back(map[in.place.index], in.weight);
    for (const auto& out : net.outputs(t))
        k.post.emplace_back(map[out.place.index], out.weight);
    std::sort(k.pre.begin(), k.pre.end());
    std::sort(k.post.begin(), k.post.end());
    const auto& tr = net.transition(t);
    if (o.compare_guards)
        k.guard = tr.guard.to_string();
    if (o.compare_priorities && tr.priority) {
        k.has_priority = true;
        k.priority = *tr.priority;
    }
    return k;
}

} // namespace

std::optional<NetMapping> find_isomorphism(const PetriNet& a, const PetriNet& b, const IsomorphismOptions& o) {
    const std::size_t np = a.place_count();
    const std::size_t nt = a.transition_count();
    if (np != b.place_count() || nt != b.transition_count() || a.arcs().size() != b.arcs().size())
        return std::nullopt;

    std::vector<PlaceSignature> sa(np), sb(np);
    for (std::uint32_t p = 0; p < np; ++p) {
        sa[p] = signature(a, PlaceId{p}, o.compare_markings);
        sb[p] = signature(b, PlaceId{p}, o.compare_markings);
    }
    {
        auto x = sa, y = sb;
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        if (x != y)
            return std::nullopt;
    }

    // Transitions of b keyed in b's own place numbering, for the final check.
    std::vector<std::uint32_t> identity(np);
    for (std::uint32_t p = 0; p < np; ++p)
        identity[p] = p;
    std::multimap<TransitionKey, std::uint32_t> b_keys;
    for (std::uint32_t t = 0; t < nt; ++t)
        b_keys.emplace(key(b, TransitionId{t}, identity, o), t);

    // Assign places of a in order of fewest candidates.
    std::vector<std::uint32_t> order(np);
    for (std::uint32_t p = 0; p < np; ++p)
        order[p] = p;
    std::vector<std::size_t> ncand(np, 0);
    for (std::uint32_t p = 0; p < np; ++p)
        for (std::uint32_t q = 0; q < np; ++q)
            ncand[p] += sa[p] == sb[q];
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return ncand[x] < ncand[y]; });

    constexpr std::uint32_t unset = ~std::uint32_t{0};
    std::vector<std::uint32_t> map(np, unset);
    std::vector<char> used(np, 0);

    // Partial check: a transition whose places are all mapped must have a
    // counterpart in b with the same mapped key.
    auto consistent = [&]() {
        std::multimap<TransitionKey, std::uint32_t> pending;
        std::map<TransitionKey, std::size_t> need;
        for (std::uint32_t t = 0; t < nt; ++t) {
            bool complete = true;
            for (const auto& in : a.inputs(TransitionId{t}))
                complete &= map[in.place.index] != unset;
            for (const auto& out : a.outputs(TransitionId{t}))
                complete &= map[out.place.index] != unset;
            if (complete)
                ++need[key(a, TransitionId{t}, map, o)];
        }
        for (const auto& [k, n] : need)
            if (b_keys.count(k) < n)
                return false;
        return true;
    };

    std::size_t budget = 2'000'000;
    std::function<bool(std::size_t)> assign = [&](std::size_t depth) -> bool {
        if (depth == np)
            return true;
        if (budget-- == 0)
            return false;
        auto p = order[depth];
        for (std::uint32_t q = 0; q < np; ++q) {
            if (used[q] || !(sa[p] == sb[q]))
                continue;
            map[p] = q;
            used[q] = 1;
            if (consistent() && assign(depth + 1))
                return true;
            used[q] = 0;
            map[p] = unset;
        }
        return false;
    };
    if (!assign(0))
        return std::nullopt;

    NetMapping out;
    for (auto q : map)
        out.places.push_back(PlaceId{q});
    std::vector<char> t_used(nt, 0);
    for (std::uint32_t t = 0; t < nt; ++t) {
        auto k = key(a, TransitionId{t}, map, o);
        auto [lo, hi] = b_keys.equal_range(k);
        bool found = false;
        for (auto it = lo; it != hi; ++it) {
            if (!t_used[it->second]) {
                t_used[it->second] = 1;
                out.transitions.push_back(TransitionId{it->second});
                found = true;
                break;
            }
        }
        if (!found)
            return std::nullopt;
    }
    return out;
}

} // namespace hpn
