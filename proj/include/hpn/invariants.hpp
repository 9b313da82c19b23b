#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpn/net.hpp"

namespace hpn {

class ReachabilityGraph;

/// Semi-positive y with N·y = 0.
struct PlaceInvariant {
    std::vector<std::int64_t> weights;
    /// y·M0 for the marking the basis was computed with (0 when none was given).
    std::int64_t weighted_sum_at_m0 = 0;

    std::vector<PlaceId> support() const;
    std::int64_t weighted_sum(const Marking& m) const;
    friend bool operator==(const PlaceInvariant&, const PlaceInvariant&) = default;
};

/// Semi-positive x with Nᵀ·x = 0.
struct TransitionInvariant {
    std::vector<std::int64_t> counts;

    std::vector<TransitionId> support() const;
    friend bool operator==(const TransitionInvariant&, const TransitionInvariant&) = default;
};

struct FarkasOptions {
    /// Intermediate row cap; exceeding it aborts the enumeration.
    std::size_t max_rows = 10'000;
};

/// Outcome of the elimination shared by both invariant kinds.
struct FarkasStats {
    /// True when the row cap was hit or an entry overflowed; the list is then empty.
    bool aborted = false;
    std::string abort_reason;
    std::size_t peak_rows = 0;
    /// Rank of the result equals its size.
    bool linearly_independent = true;
};

struct PlaceBasis {
    std::vector<PlaceInvariant> invariants;
    FarkasStats stats;
};

struct TransitionBasis {
    std::vector<TransitionInvariant> invariants;
    FarkasStats stats;
};

/// All minimal-support semi-positive place invariants, gcd-normalised and
/// sorted in descending lexicographic order of their weights.
PlaceBasis minimal_place_invariants(const IncidenceMatrix& n, const FarkasOptions& options = {});
/// Same, with weighted_sum_at_m0 filled from m0.
PlaceBasis minimal_place_invariants(const IncidenceMatrix& n, const Marking& m0,
                                    const FarkasOptions& options = {});

PlaceBasis minimal_place_invariants(const PetriNet& net, const FarkasOptions& options = {});

TransitionBasis minimal_transition_invariants(const IncidenceMatrix& n, const FarkasOptions& options = {});

/// Minimal-support semi-positive solutions of A·v = 0 for a rows x cols
/// matrix `a`; each solution has `a.cols()` entries.
std::vector<std::vector<std::int64_t>> farkas(const IncidenceMatrix& a, const FarkasOptions& options,
                                              FarkasStats& stats);

enum class InvariantKind { Place, Transition };

struct InvariantCheck {
    bool holds = false;
    /// The vector was all zeros.
    bool trivial = false;
    explicit operator bool() const noexcept { return holds; }
};

/// N·y = 0 (place) or Nᵀ·x = 0 (transition). Throws StructuralError on a
/// length mismatch.
InvariantCheck verify_invariant(const IncidenceMatrix& n, std::span<const std::int64_t> v, InvariantKind kind);

/// Rank over the rationals.
std::size_t rank(const std::vector<std::vector<std::int64_t>>& rows);

enum class Conservativeness { Strict, Conservative, Partial, NotConservative };

std::string_view to_string(Conservativeness c);

struct ConservativenessVerdict {
    Conservativeness cls = Conservativeness::NotConservative;
    std::optional<std::vector<std::int64_t>> witness;
    std::optional<std::int64_t> weighted_sum;
    /// Invariant enumeration aborted; the class is then not meaningful.
    bool aborted = false;
};

/// Sums the minimal basis, divides by the gcd and classifies the result.
ConservativenessVerdict classify_conservativeness(const PlaceBasis& basis, const Marking& m0);
ConservativenessVerdict classify_conservativeness(const IncidenceMatrix& n, const Marking& m0,
                                                  const FarkasOptions& options = {});

enum class SafetyClass { Safe, Bounded, Unknown };

std::string_view to_string(SafetyClass s);

struct SafetyEstimate {
    SafetyClass cls = SafetyClass::Unknown;
    /// Largest per-place bound; set for Safe and Bounded.
    std::optional<std::uint64_t> bound;
    /// Places outside every support.
    std::vector<PlaceId> uncovered;
};

/// Per place p: min over covering invariants y of floor(y·M0 / y_p).
SafetyEstimate safety_from_invariants(const PlaceBasis& basis, const Marking& m0);

struct LivenessEvidence {
    bool found = false;
    std::optional<FiringCountVector> witness;
    /// A firing sequence M0 -> M0 realising the witness.
    std::vector<TransitionId> sequence;
};

/// Looks for a semi-positive combination of `basis` covering every
/// transition that the graph realises as a cycle through M0. Not finding one
/// is not a proof of non-liveness.
LivenessEvidence liveness_evidence(const TransitionBasis& basis, const ReachabilityGraph& g,
                                   std::size_t candidate_limit = 512);

} // namespace hpn
