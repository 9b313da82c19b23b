#pragma once

#include <cstdint>
#include <vector>

#include "hpn/hierarchy.hpp"
#include "hpn/metamodel.hpp"
#include "hpn/net.hpp"

namespace fixtures {

using Rows = std::vector<std::vector<std::int64_t>>;

/// Subsystem example: three behaviours, transition 8 closes the loop.
inline const Rows subsystem_rows = {
    {-1, 1, 0, 0, 0}, {0, -1, 0, 0, 1}, {0, -1, 1, 0, 0}, {0, 1, -1, 0, 0},
    {0, -1, 0, 1, 0}, {0, 1, 0, -1, 0}, {0, 0, -1, 1, 0}, {1, 0, 0, 0, -1},
};

/// Purified communication model.
inline const Rows comm_rows = {
    {-1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0},  {-1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, -1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 1, 0}, {0, -1, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, -1, 0, 0, -1, -1, 0, 0, 0, 0, 0, 1}, {0, 0, -1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, -1, 0, 1, 0, -1, 0, 0, 0, 0, 0, 0}, {0, 0, 0, -1, 1, 0, 0, 0, 0, 0, 0, 0, 0},
    {1, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0},  {0, 0, 0, 0, 0, -1, 0, -1, 1, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, -1, 0, 1, 0, 0, 0},  {0, 0, 0, 0, 0, -1, -1, -1, 1, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 1, 0, -1, 0, 1, 0, 0},  {0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 1, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 1, 0, 0, -1, 0, 0},  {0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, -1, 0},
    {0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1},
};

inline const std::vector<std::int64_t> y1_model = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1};
inline const std::vector<std::int64_t> y2_model = {0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0};
inline const std::vector<std::int64_t> x_model = {1, 4, 1, 3, 1, 3, 1, 3, 5, 2, 1, 1, 3, 1, 4, 1, 1};
inline const hpn::Marking comm_m0 = {1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0};

/// Net with the given incidence rows: each -k becomes an input arc of
/// weight k and each +k an output arc.
inline hpn::PetriNet net_from_rows(const Rows& rows, const hpn::Marking& m0 = {}) {
    hpn::NetBuilder b;
    for (std::size_t p = 0; p < rows.front().size(); ++p)
        b.add_place("p" + std::to_string(p + 1), m0.size() ? m0[p] : 0);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        auto id = b.add_transition("t" + std::to_string(t + 1));
        for (std::uint32_t p = 0; p < rows[t].size(); ++p) {
            auto v = rows[t][p];
            if (v < 0)
                b.add_arc(hpn::PlaceId{p}, id, static_cast<std::uint32_t>(-v));
            else if (v > 0)
                b.add_arc(id, hpn::PlaceId{p}, static_cast<std::uint32_t>(v));
        }
    }
    return b.build();
}

/// Extended behaviour pattern (close_loop + collapse of the template).
inline hpn::PetriNet behaviour_extended() {
    auto panel = hpn::generate_template(hpn::BehaviourTemplate{}, "behaviour");
    return hpn::standalone_net(panel);
}

inline hpn::PetriNet pure_comm(hpn::CommMode mode) {
    auto panel = hpn::generate_template(hpn::CommTemplate{mode, false}, "comm");
    return hpn::purify(panel.net).net;
}

} // namespace fixtures
