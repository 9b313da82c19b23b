#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hpn/guard.hpp"

namespace hpn {

struct PlaceId {
    std::uint32_t index = 0;
    friend auto operator<=>(PlaceId, PlaceId) = default;
};

struct TransitionId {
    std::uint32_t index = 0;
    friend auto operator<=>(TransitionId, TransitionId) = default;
};

enum class NodeKind : std::uint8_t { Place, Transition };

struct NodeRef {
    NodeKind kind = NodeKind::Place;
    std::uint32_t index = 0;
    friend auto operator<=>(NodeRef, NodeRef) = default;
};

struct Arc {
    NodeRef source;
    NodeRef target;
    std::uint32_t weight = 1;
    friend auto operator<=>(const Arc&, const Arc&) = default;
};

struct Place {
    std::string name;
    /// Opaque operation label; never interpreted by analyses.
    std::string operation;
};

struct Transition {
    std::string name;
    Guard guard;
    /// Stored as given. Only valued-mode conflict resolution reads it.
    std::optional<int> priority;
};

/// Token count per place.
class Marking {
public:
    Marking() = default;
    explicit Marking(std::size_t places) : counts_(places, 0) {}
    explicit Marking(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {}
    Marking(std::initializer_list<std::uint32_t> counts) : counts_(counts) {}

    std::size_t size() const noexcept { return counts_.size(); }
    std::uint32_t operator[](PlaceId p) const { return counts_[p.index]; }
    std::uint32_t& operator[](PlaceId p) { return counts_[p.index]; }
    std::uint32_t operator[](std::size_t i) const { return counts_[i]; }
    std::uint32_t& operator[](std::size_t i) { return counts_[i]; }
    std::span<const std::uint32_t> counts() const noexcept { return counts_; }
    std::uint64_t total() const;
    bool is_zero() const;

    /// Pointwise m <= other.
    bool covered_by(const Marking& other) const;

    /// "(1,0,0)"
    std::string to_string() const;

    friend bool operator==(const Marking&, const Marking&) = default;
    friend auto operator<=>(const Marking&, const Marking&) = default;

private:
    std::vector<std::uint32_t> counts_;
};

struct MarkingHash {
    std::size_t operator()(const Marking& m) const noexcept;
};

/// Number of firings per transition.
class FiringCountVector {
public:
    FiringCountVector() = default;
    explicit FiringCountVector(std::size_t transitions) : counts_(transitions, 0) {}
    explicit FiringCountVector(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {}
    FiringCountVector(std::initializer_list<std::uint32_t> counts) : counts_(counts) {}

    std::size_t size() const noexcept { return counts_.size(); }
    std::uint32_t operator[](std::size_t i) const { return counts_[i]; }
    std::uint32_t& operator[](std::size_t i) { return counts_[i]; }
    std::span<const std::uint32_t> counts() const noexcept { return counts_; }
    bool is_zero() const;

    friend bool operator==(const FiringCountVector&, const FiringCountVector&) = default;

private:
    std::vector<std::uint32_t> counts_;
};

struct WeightedPlace {
    PlaceId place;
    std::uint32_t weight;
};

class NetBuilder;

/// Ordinary weighted Petri net. Immutable once built; build with NetBuilder.
class PetriNet {
public:
    PetriNet() = default;

    std::size_t place_count() const noexcept { return places_.size(); }
    std::size_t transition_count() const noexcept { return transitions_.size(); }

    const Place& place(PlaceId p) const { return places_.at(p.index); }
    const Transition& transition(TransitionId t) const { return transitions_.at(t.index); }
    const std::vector<Place>& places() const noexcept { return places_; }
    const std::vector<Transition>& transitions() const noexcept { return transitions_; }
    const std::vector<Arc>& arcs() const noexcept { return arcs_; }
    const Marking& initial_marking() const noexcept { return initial_; }

    std::optional<PlaceId> find_place(std::string_view name) const;
    std::optional<TransitionId> find_transition(std::string_view name) const;

    /// Aggregated input weight p -> t (0 when absent).
    std::uint32_t pre(TransitionId t, PlaceId p) const { return pre_[t.index * places_.size() + p.index]; }
    /// Aggregated output weight t -> p (0 when absent).
    std::uint32_t post(TransitionId t, PlaceId p) const { return post_[t.index * places_.size() + p.index]; }

    std::span<const WeightedPlace> inputs(TransitionId t) const;
    std::span<const WeightedPlace> outputs(TransitionId t) const;

    /// True when some transition carries a non-trivial guard or a priority.
    bool has_conditions() const;
    /// Sorted set of atoms used by any guard.
    std::vector<std::string> atoms() const;

    NetBuilder to_builder() const;

private:
    friend class NetBuilder;

    std::vector<Place> places_;
    std::vector<Transition> transitions_;
    std::vector<Arc> arcs_;
    Marking initial_;
    std::vector<std::uint32_t> pre_;
    std::vector<std::uint32_t> post_;
    std::vector<std::vector<WeightedPlace>> inputs_;
    std::vector<std::vector<WeightedPlace>> outputs_;
    std::unordered_map<std::string, std::uint32_t> place_index_;
    std::unordered_map<std::string, std::uint32_t> transition_index_;
};

/// Mutable staging area for a PetriNet.
class NetBuilder {
public:
    PlaceId add_place(std::string name, std::uint32_t tokens = 0, std::string operation = {});
    TransitionId add_transition(std::string name, Guard guard = {}, std::optional<int> priority = {});

    void add_arc(PlaceId from, TransitionId to, std::uint32_t weight = 1);
    void add_arc(TransitionId from, PlaceId to, std::uint32_t weight = 1);
    /// Generic form; throws StructuralError unless the endpoints are of opposite kinds.
    void add_arc(const Arc& arc);

    void set_tokens(PlaceId p, std::uint32_t tokens);
    void set_marking(const Marking& m);
    void set_guard(TransitionId t, Guard guard);
    void set_priority(TransitionId t, std::optional<int> priority);

    std::size_t place_count() const noexcept { return places_.size(); }
    std::size_t transition_count() const noexcept { return transitions_.size(); }
    std::vector<Place>& places() noexcept { return places_; }
    std::vector<Transition>& transitions() noexcept { return transitions_; }
    std::vector<Arc>& arcs() noexcept { return arcs_; }
    const std::vector<Arc>& arcs() const noexcept { return arcs_; }
    std::vector<std::uint32_t>& tokens() noexcept { return tokens_; }

    std::optional<PlaceId> find_place(std::string_view name) const;
    std::optional<TransitionId> find_transition(std::string_view name) const;

    /// Validates names, endpoints and weights.
    PetriNet build() const;

private:
    std::vector<Place> places_;
    std::vector<Transition> transitions_;
    std::vector<Arc> arcs_;
    std::vector<std::uint32_t> tokens_;
};

/// |T| x |P| matrix, row t = change of marking caused by firing t.
class IncidenceMatrix {
public:
    IncidenceMatrix() = default;
    IncidenceMatrix(std::size_t transitions, std::size_t places);
    /// Row-major literal rows; every row must have the same length.
    static IncidenceMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::int64_t at(std::size_t t, std::size_t p) const { return data_[t * cols_ + p]; }
    std::int64_t& at(std::size_t t, std::size_t p) { return data_[t * cols_ + p]; }
    std::span<const std::int64_t> row(std::size_t t) const { return {data_.data() + t * cols_, cols_}; }

    /// False when the source net had a self-loop (information lost).
    bool is_pure() const noexcept { return pure_; }
    void set_pure(bool pure) noexcept { pure_ = pure; }

    std::vector<std::vector<std::int64_t>> to_rows() const;

    friend bool operator==(const IncidenceMatrix& a, const IncidenceMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::int64_t> data_;
    bool pure_ = true;
};

IncidenceMatrix incidence_matrix(const PetriNet& net);

/// Token enabling only; guards are treated as True.
bool is_enabled(const PetriNet& net, const Marking& m, TransitionId t);

/// Structural mode: every guard is True.
std::vector<TransitionId> enabled(const PetriNet& net, const Marking& m);

/// Valued mode: token enabling and guard truth under `valuation`.
/// Throws MissingAtomError for an unassigned atom of a token-enabled transition.
std::vector<TransitionId> enabled(const PetriNet& net, const Marking& m, const Valuation& valuation);

/// Valued mode with priority conflict resolution: a transition is dropped when
/// another enabled transition sharing one of its input places has strictly
/// higher priority (absent priority counts as 0).
std::vector<TransitionId> fireable(const PetriNet& net, const Marking& m, const Valuation& valuation);

/// Applies the priority rule to an already enabled set.
std::vector<TransitionId> resolve_priorities(const PetriNet& net, std::span<const TransitionId> enabled_set);

/// Subtracts inputs then adds outputs. Throws DisabledTransitionError.
Marking fire(const PetriNet& net, const Marking& m, TransitionId t);

/// m0 + Nᵀ·x. Purely algebraic: does not imply that x is realisable as a
/// firing sequence. Throws MarkingEquationError when an entry goes negative.
Marking apply_firing_count(const PetriNet& net, const Marking& m0, const FiringCountVector& x);

FiringCountVector count_firings(const PetriNet& net, std::span<const TransitionId> sequence);

} // namespace hpn
