#pragma once

#include <optional>
#include <vector>

#include "hpn/net.hpp"

namespace hpn {

struct IsomorphismOptions {
    bool compare_markings = true;
    bool compare_guards = true;
    bool compare_priorities = true;
};

/// Place and transition bijection with b's indices for every index of a.
struct NetMapping {
    std::vector<PlaceId> places;
    std::vector<TransitionId> transitions;
};

/// Structure-preserving bijection ignoring names: same arc multiset up to
/// relabelling, plus markings, guards and priorities when requested.
std::optional<NetMapping> find_isomorphism(const PetriNet& a, const PetriNet& b,
                                           const IsomorphismOptions& options = {});

inline bool isomorphic(const PetriNet& a, const PetriNet& b, const IsomorphismOptions& options = {}) {
    return find_isomorphism(a, b, options).has_value();
}

} // namespace hpn
