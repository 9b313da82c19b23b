#include "hpn/hierarchy.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace hpn {

namespace {

constexpr std::pair<Layer, std::string_view> kLayerNames[] = {
    {Layer::System, "System"},       {Layer::Agent, "Agent"},         {Layer::Subsystem, "Subsystem"},
    {Layer::Behaviour, "Behaviour"}, {Layer::ActionF, "ActionF"},     {Layer::ActionSnd, "ActionSnd"},
    {Layer::ActionRcv, "ActionRcv"}, {Layer::CommModel, "CommModel"}, {Layer::Other, "Other"},
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string fresh_transition_name(const PetriNet& net) {
    // Follow the t<k> numbering when the net already uses it.
    std::string candidate = "t" + std::to_string(net.transition_count() + 1);
    if (!net.find_transition(candidate))
        return candidate;
    for (std::size_t k = 0;; ++k) {
        candidate = "t_close" + (k ? std::to_string(k) : std::string());
        if (!net.find_transition(candidate))
            return candidate;
    }
}

} // namespace

std::string_view to_string(Layer layer) {
    for (auto& [l, name] : kLayerNames)
        if (l == layer)
            return name;
    return "Other";
}

std::optional<Layer> parse_layer(std::string_view text) {
    for (auto& [l, name] : kLayerNames)
        if (iequals(name, text))
            return l;
    return std::nullopt;
}

bool is_closed_layer(Layer layer) { return layer == Layer::System || layer == Layer::CommModel; }

std::pair<std::optional<PlaceId>, std::optional<PlaceId>> detect_ports(const PetriNet& net) {
    std::vector<bool> has_in(net.place_count()), has_out(net.place_count());
    for (const auto& a : net.arcs()) {
        if (a.source.kind == NodeKind::Place)
            has_out[a.source.index] = true;
        else
            has_in[a.target.index] = true;
    }
    std::optional<PlaceId> in, out;
    int n_in = 0, n_out = 0;
    for (std::uint32_t p = 0; p < net.place_count(); ++p) {
        if (!has_in[p]) {
            ++n_in;
            in = PlaceId{p};
        }
        if (!has_out[p]) {
            ++n_out;
            out = PlaceId{p};
        }
    }
    return {n_in == 1 ? in : std::nullopt, n_out == 1 ? out : std::nullopt};
}

void validate_panel(const Panel& panel) {
    const auto& net = panel.net;
    auto where = "panel '" + panel.id + "': ";
    for (const auto& [place, child] : panel.page_bindings) {
        if (place.index >= net.place_count())
            throw StructuralError(where + "page binding refers to a missing place");
        if (child.empty())
            throw StructuralError(where + "page binding without a child panel");
    }
    if (panel.closed())
        return;
    if (!panel.input_place || !panel.output_place)
        throw StructuralError(where + "open panel needs an input and an output place");
    if (panel.input_place->index >= net.place_count() || panel.output_place->index >= net.place_count())
        throw StructuralError(where + "input/output place does not exist");
    if (panel.input_place == panel.output_place)
        return; // degenerate single-place panel
    for (const auto& a : net.arcs()) {
        if (a.target.kind == NodeKind::Place && a.target.index == panel.input_place->index)
            throw StructuralError(where + "input place '" + net.place(*panel.input_place).name + "' has an incoming arc");
        if (a.source.kind == NodeKind::Place && a.source.index == panel.output_place->index)
            throw StructuralError(where + "output place '" + net.place(*panel.output_place).name +
                                  "' has an outgoing arc");
    }
}

// ---------------------------------------------------------------------------

void HierarchicalNet::add_panel(Panel panel) {
    if (panel.id.empty())
        throw StructuralError("panel without an id");
    auto id = panel.id;
    if (!panels_.emplace(id, std::move(panel)).second)
        throw StructuralError("duplicate panel id '" + id + "'");
    if (root_.empty())
        root_ = id;
}

const Panel& HierarchicalNet::panel(std::string_view id) const {
    auto it = panels_.find(id);
    if (it == panels_.end())
        throw StructuralError("no panel '" + std::string(id) + "'");
    return it->second;
}

std::map<std::string, std::string> HierarchicalNet::parents() const {
    std::map<std::string, std::string> out;
    for (const auto& [id, p] : panels_)
        for (const auto& [place, child] : p.page_bindings)
            out.emplace(child, id);
    return out;
}

void HierarchicalNet::validate() const {
    if (panels_.empty())
        throw StructuralError("hierarchy has no panels");
    if (!contains(root_))
        throw StructuralError("root panel '" + root_ + "' does not exist");
    std::map<std::string, std::string> parent;
    for (const auto& [id, p] : panels_) {
        validate_panel(p);
        for (const auto& [place, child] : p.page_bindings) {
            if (!contains(child))
                throw StructuralError("panel '" + id + "': page bound to unknown panel '" + child + "'");
            if (child == root_)
                throw StructuralError("panel '" + id + "': page bound to the root panel");
            auto [it, fresh] = parent.emplace(child, id);
            if (!fresh)
                throw StructuralError("panel '" + child + "' is bound by more than one page");
        }
    }
    for (const auto& [id, p] : panels_) {
        std::set<std::string> seen{id};
        std::string cur = id;
        while (true) {
            auto it = parent.find(cur);
            if (it == parent.end())
                break;
            cur = it->second;
            if (!seen.insert(cur).second)
                throw StructuralError("cyclic panel references through '" + cur + "'");
        }
        if (cur != root_ && !p.closed() && id != root_)
            throw StructuralError("panel '" + id + "' is not reachable from the root");
    }
    for (const auto& f : fusion_sets_) {
        if (f.members.size() < 2)
            throw StructuralError("fusion set '" + f.name + "' needs at least two members");
        std::set<FusionMember> distinct(f.members.begin(), f.members.end());
        if (distinct.size() != f.members.size())
            throw StructuralError("fusion set '" + f.name + "' lists a member twice");
        for (const auto& m : f.members) {
            if (!contains(m.panel))
                throw StructuralError("fusion set '" + f.name + "' refers to unknown panel '" + m.panel + "'");
            if (m.place.index >= panel(m.panel).net.place_count())
                throw StructuralError("fusion set '" + f.name + "' refers to a missing place");
        }
    }
}

// ---------------------------------------------------------------------------

PetriNet close_loop(const Panel& panel) {
    if (!panel.input_place || !panel.output_place)
        throw StructuralError("panel '" + panel.id + "' lacks an input or output place");
    auto b = panel.net.to_builder();
    auto t = b.add_transition(fresh_transition_name(panel.net));
    b.add_arc(*panel.output_place, t);
    b.add_arc(t, *panel.input_place);
    return b.build();
}

CollapsedNet collapse_pages(const Panel& panel) {
    CollapsedNet out{panel.net, {}};
    for (const auto& [place, child] : panel.page_bindings)
        out.page_to_panel.emplace(panel.net.place(place).name, child);
    return out;
}

CollapsedNet reduce_panel(const Panel& panel) {
    auto collapsed = collapse_pages(panel);
    if (!panel.closed()) {
        Panel tmp = panel;
        tmp.net = collapsed.net;
        collapsed.net = close_loop(tmp);
    }
    return collapsed;
}

PurifiedNet purify(const PetriNet& net) {
    PurifiedNet out;
    std::set<std::pair<std::uint32_t, std::uint32_t>> loops;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t) {
        for (std::uint32_t p = 0; p < net.place_count(); ++p) {
            auto in = net.pre(TransitionId{t}, PlaceId{p});
            auto o = net.post(TransitionId{t}, PlaceId{p});
            if (in && o) {
                if (in != o)
                    throw StructuralError("self-loop " + net.transition(TransitionId{t}).name + "<->" +
                                          net.place(PlaceId{p}).name + " has unequal weights");
                loops.emplace(t, p);
                out.removed.push_back({TransitionId{t}, PlaceId{p}, in});
            }
        }
    }
    auto b = net.to_builder();
    auto& arcs = b.arcs();
    arcs.erase(std::remove_if(arcs.begin(), arcs.end(),
                              [&](const Arc& a) {
                                  auto t = a.source.kind == NodeKind::Transition ? a.source.index : a.target.index;
                                  auto p = a.source.kind == NodeKind::Place ? a.source.index : a.target.index;
                                  return loops.count({t, p}) != 0;
                              }),
               arcs.end());
    out.net = b.build();
    return out;
}

PetriNet reinsert_self_loops(const PurifiedNet& purified) {
    auto b = purified.net.to_builder();
    for (const auto& loop : purified.removed) {
        b.add_arc(loop.place, loop.transition, loop.weight);
        b.add_arc(loop.transition, loop.place, loop.weight);
    }
    return b.build();
}

// ---------------------------------------------------------------------------

namespace {

class Flattener {
public:
    explicit Flattener(const HierarchicalNet& h) : h_(h) {}

    PetriNet run(std::string_view root) {
        h_.validate();
        const auto& root_panel = h_.panel(root);
        expand(root_panel, "", true);
        // Closed panels sharing a fusion place with anything already expanded.
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& f : h_.fusion_sets()) {
                bool touches = std::any_of(f.members.begin(), f.members.end(),
                                           [&](const FusionMember& m) { return expanded_.count(m.panel); });
                if (!touches)
                    continue;
                for (const auto& m : f.members) {
                    if (expanded_.count(m.panel))
                        continue;
                    const auto& p = h_.panel(m.panel);
                    if (!p.closed())
                        continue;
                    expand(p, p.id + "/", true);
                    grew = true;
                }
            }
        }
        return fuse();
    }

private:
    using Ports = std::pair<PlaceId, PlaceId>;

    const HierarchicalNet& h_;
    NetBuilder b_;
    std::map<std::string, std::map<std::uint32_t, PlaceId>> place_map_; // panel -> local place -> flat
    std::set<std::string> expanded_;
    std::set<std::string> active_;

    // Returns the flat ids of the panel's input and output places.
    std::optional<Ports> expand(const Panel& panel, const std::string& prefix, bool keep_marking) {
        if (!active_.insert(panel.id).second)
            throw StructuralError("cyclic panel references through '" + panel.id + "'");
        expanded_.insert(panel.id);
        const auto& net = panel.net;
        auto& local = place_map_[panel.id];
        std::map<std::uint32_t, Ports> page_ports;

        for (std::uint32_t p = 0; p < net.place_count(); ++p) {
            PlaceId pid{p};
            auto binding = panel.page_bindings.find(pid);
            std::uint32_t tokens = keep_marking ? net.initial_marking()[pid] : 0;
            if (binding != panel.page_bindings.end()) {
                const auto& child = h_.panel(binding->second);
                if (child.closed())
                    throw StructuralError("page '" + net.place(pid).name + "' of panel '" + panel.id +
                                          "' is bound to closed panel '" + child.id + "'");
                auto ports = expand(child, child.id + "/", false);
                page_ports.emplace(p, *ports);
                if (tokens)
                    b_.tokens()[ports->first.index] += tokens;
                continue;
            }
            local[p] = b_.add_place(prefix + net.place(pid).name, tokens, net.place(pid).operation);
        }
        for (std::uint32_t t = 0; t < net.transition_count(); ++t) {
            const auto& tr = net.transition(TransitionId{t});
            auto nt = b_.add_transition(prefix + tr.name, tr.guard, tr.priority);
            for (const auto& in : net.inputs(TransitionId{t})) {
                auto it = page_ports.find(in.place.index);
                b_.add_arc(it != page_ports.end() ? it->second.second : local.at(in.place.index), nt, in.weight);
            }
            for (const auto& o : net.outputs(TransitionId{t})) {
                auto it = page_ports.find(o.place.index);
                b_.add_arc(nt, it != page_ports.end() ? it->second.first : local.at(o.place.index), o.weight);
            }
        }
        active_.erase(panel.id);
        if (panel.closed() || !panel.input_place || !panel.output_place)
            return std::nullopt;
        auto port = [&](PlaceId p) {
            auto it = page_ports.find(p.index);
            return it != page_ports.end() ? it->second.first : local.at(p.index);
        };
        auto out_port = [&](PlaceId p) {
            auto it = page_ports.find(p.index);
            return it != page_ports.end() ? it->second.second : local.at(p.index);
        };
        return Ports{port(*panel.input_place), out_port(*panel.output_place)};
    }

    PetriNet fuse() {
        std::vector<std::uint32_t> rep(b_.place_count());
        std::iota(rep.begin(), rep.end(), 0u);
        std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
            while (rep[x] != x)
                x = rep[x] = rep[rep[x]];
            return x;
        };
        for (const auto& f : h_.fusion_sets()) {
            std::optional<std::uint32_t> first;
            for (const auto& m : f.members) {
                auto pm = place_map_.find(m.panel);
                if (pm == place_map_.end())
                    continue;
                auto it = pm->second.find(m.place.index);
                if (it == pm->second.end())
                    throw StructuralError("fusion set '" + f.name + "' names a page, not a place");
                auto x = find(it->second.index);
                if (!first) {
                    first = x;
                    continue;
                }
                if (x == *first)
                    continue;
                auto lo = std::min(*first, x), hi = std::max(*first, x);
                if (b_.tokens()[lo] != b_.tokens()[hi])
                    throw StructuralError("fusion set '" + f.name + "' has members with different initial markings");
                rep[hi] = lo;
                first = lo;
            }
        }
        std::vector<std::int64_t> new_index(b_.place_count(), -1);
        NetBuilder out;
        for (std::uint32_t p = 0; p < b_.place_count(); ++p) {
            if (find(p) != p)
                continue;
            new_index[p] = out.add_place(b_.places()[p].name, b_.tokens()[p], b_.places()[p].operation).index;
        }
        for (const auto& t : b_.transitions())
            out.add_transition(t.name, t.guard, t.priority);
        for (auto a : b_.arcs()) {
            auto& pr = a.source.kind == NodeKind::Place ? a.source : a.target;
            pr.index = static_cast<std::uint32_t>(new_index[find(pr.index)]);
            out.add_arc(a);
        }
        return out.build();
    }
};

} // namespace

PetriNet flatten(const HierarchicalNet& h, std::string_view root) { return Flattener(h).run(root); }

} // namespace hpn
