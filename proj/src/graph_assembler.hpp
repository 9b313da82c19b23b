#pragma once

#include "hpn/reachability.hpp"

namespace hpn {

/// Write access to a ReachabilityGraph for the builders.
class GraphAssembler {
public:
    GraphAssembler(const PetriNet& net, const ReachOptions& options) {
        g_.net_ = net;
        g_.store_ = MarkingStore(net.place_count());
        g_.state_limit_ = options.state_limit;
        g_.mode_ = options.mode;
    }

    MarkingStore& store() noexcept { return g_.store_; }
    std::vector<Edge>& edges() noexcept { return g_.edges_; }
    std::vector<BlockedNode>& blocked() noexcept { return g_.blocked_; }
    void set_expanded(std::size_t n) noexcept { g_.expanded_ = n; }
    void set_truncated() noexcept { g_.truncated_ = true; }
    void set_branch_cap_exceeded() noexcept { g_.branch_cap_exceeded_ = true; }

    ReachabilityGraph finish();

private:
    ReachabilityGraph g_;
};

} // namespace hpn
