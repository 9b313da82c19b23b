#include "hpn/net.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_set>

namespace hpn {

std::uint64_t Marking::total() const {
    std::uint64_t sum = 0;
    for (auto c : counts_)
        sum += c;
    return sum;
}

bool Marking::is_zero() const {
    return std::all_of(counts_.begin(), counts_.end(), [](auto c) { return c == 0; });
}

bool Marking::covered_by(const Marking& other) const {
    if (other.size() != size())
        return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (counts_[i] > other.counts_[i])
            return false;
    return true;
}

std::string Marking::to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(counts_[i]);
    }
    out += ')';
    return out;
}

std::size_t MarkingHash::operator()(const Marking& m) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto c : m.counts()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
}

bool FiringCountVector::is_zero() const {
    return std::all_of(counts_.begin(), counts_.end(), [](auto c) { return c == 0; });
}

// ---------------------------------------------------------------------------

std::optional<PlaceId> PetriNet::find_place(std::string_view name) const {
    auto it = place_index_.find(std::string(name));
    if (it == place_index_.end())
        return std::nullopt;
    return PlaceId{it->second};
}

std::optional<TransitionId> PetriNet::find_transition(std::string_view name) const {
    auto it = transition_index_.find(std::string(name));
    if (it == transition_index_.end())
        return std::nullopt;
    return TransitionId{it->second};
}

std::span<const WeightedPlace> PetriNet::inputs(TransitionId t) const { return inputs_.at(t.index); }

std::span<const WeightedPlace> PetriNet::outputs(TransitionId t) const { return outputs_.at(t.index); }

bool PetriNet::has_conditions() const {
    return std::any_of(transitions_.begin(), transitions_.end(),
                       [](const Transition& t) { return !t.guard.is_constant_true() || t.priority; });
}

std::vector<std::string> PetriNet::atoms() const {
    std::set<std::string> all;
    for (const auto& t : transitions_)
        for (auto& a : t.guard.atoms())
            all.insert(a);
    return {all.begin(), all.end()};
}

NetBuilder PetriNet::to_builder() const {
    NetBuilder b;
    for (std::size_t i = 0; i < places_.size(); ++i)
        b.add_place(places_[i].name, initial_[i], places_[i].operation);
    for (const auto& t : transitions_)
        b.add_transition(t.name, t.guard, t.priority);
    for (const auto& a : arcs_)
        b.add_arc(a);
    return b;
}

// ---------------------------------------------------------------------------

PlaceId NetBuilder::add_place(std::string name, std::uint32_t tokens, std::string operation) {
    places_.push_back({std::move(name), std::move(operation)});
    tokens_.push_back(tokens);
    return PlaceId{static_cast<std::uint32_t>(places_.size() - 1)};
}

TransitionId NetBuilder::add_transition(std::string name, Guard guard, std::optional<int> priority) {
    transitions_.push_back({std::move(name), std::move(guard), priority});
    return TransitionId{static_cast<std::uint32_t>(transitions_.size() - 1)};
}

void NetBuilder::add_arc(PlaceId from, TransitionId to, std::uint32_t weight) {
    add_arc(Arc{{NodeKind::Place, from.index}, {NodeKind::Transition, to.index}, weight});
}

void NetBuilder::add_arc(TransitionId from, PlaceId to, std::uint32_t weight) {
    add_arc(Arc{{NodeKind::Transition, from.index}, {NodeKind::Place, to.index}, weight});
}

void NetBuilder::add_arc(const Arc& arc) {
    if (arc.source.kind == arc.target.kind)
        throw StructuralError("arc must connect a place and a transition");
    arcs_.push_back(arc);
}

void NetBuilder::set_tokens(PlaceId p, std::uint32_t tokens) { tokens_.at(p.index) = tokens; }

void NetBuilder::set_marking(const Marking& m) {
    if (m.size() != places_.size())
        throw StructuralError("marking length does not match place count");
    for (std::size_t i = 0; i < m.size(); ++i)
        tokens_[i] = m[i];
}

void NetBuilder::set_guard(TransitionId t, Guard guard) { transitions_.at(t.index).guard = std::move(guard); }

void NetBuilder::set_priority(TransitionId t, std::optional<int> priority) {
    transitions_.at(t.index).priority = priority;
}

std::optional<PlaceId> NetBuilder::find_place(std::string_view name) const {
    for (std::size_t i = 0; i < places_.size(); ++i)
        if (places_[i].name == name)
            return PlaceId{static_cast<std::uint32_t>(i)};
    return std::nullopt;
}

std::optional<TransitionId> NetBuilder::find_transition(std::string_view name) const {
    for (std::size_t i = 0; i < transitions_.size(); ++i)
        if (transitions_[i].name == name)
            return TransitionId{static_cast<std::uint32_t>(i)};
    return std::nullopt;
}

PetriNet NetBuilder::build() const {
    PetriNet net;
    net.places_ = places_;
    net.transitions_ = transitions_;
    net.arcs_ = arcs_;
    net.initial_ = Marking(std::vector<std::uint32_t>(tokens_));

    for (std::size_t i = 0; i < places_.size(); ++i) {
        if (places_[i].name.empty())
            throw StructuralError("place without a name");
        if (!net.place_index_.emplace(places_[i].name, static_cast<std::uint32_t>(i)).second)
            throw StructuralError("duplicate place name '" + places_[i].name + "'");
    }
    for (std::size_t i = 0; i < transitions_.size(); ++i) {
        if (transitions_[i].name.empty())
            throw StructuralError("transition without a name");
        if (!net.transition_index_.emplace(transitions_[i].name, static_cast<std::uint32_t>(i)).second)
            throw StructuralError("duplicate transition name '" + transitions_[i].name + "'");
    }

    const std::size_t np = places_.size();
    const std::size_t nt = transitions_.size();
    net.pre_.assign(np * nt, 0);
    net.post_.assign(np * nt, 0);
    auto bump = [](std::uint32_t& slot, std::uint32_t w) {
        if (slot > std::numeric_limits<std::uint32_t>::max() - w)
            throw StructuralError("arc weight overflow");
        slot += w;
    };
    for (const auto& a : arcs_) {
        if (a.weight == 0)
            throw StructuralError("arc weight must be positive");
        if (a.source.kind == a.target.kind)
            throw StructuralError("arc must connect a place and a transition");
        if (a.source.kind == NodeKind::Place) {
            if (a.source.index >= np || a.target.index >= nt)
                throw StructuralError("arc endpoint does not exist");
            bump(net.pre_[a.target.index * np + a.source.index], a.weight);
        } else {
            if (a.source.index >= nt || a.target.index >= np)
                throw StructuralError("arc endpoint does not exist");
            bump(net.post_[a.source.index * np + a.target.index], a.weight);
        }
    }
    net.inputs_.resize(nt);
    net.outputs_.resize(nt);
    for (std::uint32_t t = 0; t < nt; ++t) {
        for (std::uint32_t p = 0; p < np; ++p) {
            if (auto w = net.pre_[t * np + p])
                net.inputs_[t].push_back({PlaceId{p}, w});
            if (auto w = net.post_[t * np + p])
                net.outputs_[t].push_back({PlaceId{p}, w});
        }
    }
    return net;
}

// ---------------------------------------------------------------------------

IncidenceMatrix::IncidenceMatrix(std::size_t transitions, std::size_t places)
    : rows_(transitions), cols_(places), data_(transitions * places, 0) {}

IncidenceMatrix IncidenceMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
    IncidenceMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != m.cols_)
            throw Error("incidence matrix rows have different lengths");
        for (std::size_t p = 0; p < m.cols_; ++p)
            m.at(t, p) = rows[t][p];
    }
    return m;
}

std::vector<std::vector<std::int64_t>> IncidenceMatrix::to_rows() const {
    std::vector<std::vector<std::int64_t>> out(rows_);
    for (std::size_t t = 0; t < rows_; ++t)
        out[t].assign(row(t).begin(), row(t).end());
    return out;
}

IncidenceMatrix incidence_matrix(const PetriNet& net) {
    IncidenceMatrix n(net.transition_count(), net.place_count());
    bool pure = true;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t) {
        for (std::uint32_t p = 0; p < net.place_count(); ++p) {
            auto in = net.pre(TransitionId{t}, PlaceId{p});
            auto out = net.post(TransitionId{t}, PlaceId{p});
            if (in && out)
                pure = false;
            n.at(t, p) = static_cast<std::int64_t>(out) - static_cast<std::int64_t>(in);
        }
    }
    n.set_pure(pure);
    return n;
}

bool is_enabled(const PetriNet& net, const Marking& m, TransitionId t) {
    for (const auto& in : net.inputs(t))
        if (m[in.place] < in.weight)
            return false;
    return true;
}

std::vector<TransitionId> enabled(const PetriNet& net, const Marking& m) {
    std::vector<TransitionId> out;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t)
        if (is_enabled(net, m, TransitionId{t}))
            out.push_back(TransitionId{t});
    return out;
}

std::vector<TransitionId> enabled(const PetriNet& net, const Marking& m, const Valuation& valuation) {
    std::vector<TransitionId> out;
    for (std::uint32_t t = 0; t < net.transition_count(); ++t) {
        TransitionId id{t};
        if (is_enabled(net, m, id) && net.transition(id).guard.evaluate(valuation))
            out.push_back(id);
    }
    return out;
}

std::vector<TransitionId> resolve_priorities(const PetriNet& net, std::span<const TransitionId> enabled_set) {
    std::vector<TransitionId> out;
    for (auto t : enabled_set) {
        int pt = net.transition(t).priority.value_or(0);
        bool blocked = false;
        for (auto u : enabled_set) {
            if (u == t || net.transition(u).priority.value_or(0) <= pt)
                continue;
            for (const auto& in : net.inputs(t)) {
                if (net.pre(u, in.place)) {
                    blocked = true;
                    break;
                }
            }
            if (blocked)
                break;
        }
        if (!blocked)
            out.push_back(t);
    }
    return out;
}

std::vector<TransitionId> fireable(const PetriNet& net, const Marking& m, const Valuation& valuation) {
    auto en = enabled(net, m, valuation);
    return resolve_priorities(net, en);
}

Marking fire(const PetriNet& net, const Marking& m, TransitionId t) {
    if (m.size() != net.place_count())
        throw StructuralError("marking length does not match place count");
    if (t.index >= net.transition_count())
        throw StructuralError("no such transition");
    Marking next = m;
    for (const auto& in : net.inputs(t)) {
        if (next[in.place] < in.weight)
            throw DisabledTransitionError("transition '" + net.transition(t).name + "' is not enabled at " +
                                          m.to_string());
        next[in.place] -= in.weight;
    }
    for (const auto& out : net.outputs(t)) {
        if (next[out.place] > std::numeric_limits<std::uint32_t>::max() - out.weight)
            throw Error("token count overflow in place '" + net.place(out.place).name + "'");
        next[out.place] += out.weight;
    }
    return next;
}

Marking apply_firing_count(const PetriNet& net, const Marking& m0, const FiringCountVector& x) {
    if (x.size() != net.transition_count())
        throw StructuralError("firing count vector length does not match transition count");
    if (m0.size() != net.place_count())
        throw StructuralError("marking length does not match place count");
    std::vector<std::int64_t> acc(m0.counts().begin(), m0.counts().end());
    for (std::uint32_t t = 0; t < net.transition_count(); ++t) {
        if (!x[t])
            continue;
        for (const auto& in : net.inputs(TransitionId{t}))
            acc[in.place.index] -= static_cast<std::int64_t>(in.weight) * x[t];
        for (const auto& out : net.outputs(TransitionId{t}))
            acc[out.place.index] += static_cast<std::int64_t>(out.weight) * x[t];
    }
    std::vector<std::uint32_t> result(acc.size());
    for (std::size_t p = 0; p < acc.size(); ++p) {
        if (acc[p] < 0)
            throw MarkingEquationError("marking equation violated at place '" + net.place(PlaceId{static_cast<std::uint32_t>(p)}).name + "'");
        if (acc[p] > std::numeric_limits<std::uint32_t>::max())
            throw Error("token count overflow");
        result[p] = static_cast<std::uint32_t>(acc[p]);
    }
    return Marking(std::move(result));
}

FiringCountVector count_firings(const PetriNet& net, std::span<const TransitionId> sequence) {
    FiringCountVector x(net.transition_count());
    for (auto t : sequence)
        ++x[t.index];
    return x;
}

} // namespace hpn
