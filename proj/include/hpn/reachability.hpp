#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpn/net.hpp"

namespace hpn {

struct PlaceBasis;

enum class GuardMode { Structural, Valued };

std::string_view to_string(GuardMode mode);

struct ReachOptions {
    GuardMode mode = GuardMode::Structural;
    std::size_t state_limit = 1'000'000;
    /// Valued mode only: explicit valuations to branch on instead of all
    /// assignments over the atoms relevant at each node.
    std::optional<std::vector<Valuation>> valuations;
    /// Valued mode only: per-node cap on enumerated valuations.
    std::size_t max_branches = std::size_t{1} << 20;
    /// 0 = library default (OpenMP runtime decides).
    int threads = 0;
};

struct Edge {
    std::uint32_t from = 0;
    TransitionId transition;
    std::uint32_t to = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// A node where some valuation leaves no transition fireable.
struct BlockedNode {
    std::uint32_t node = 0;
    Valuation valuation;
    friend bool operator==(const BlockedNode&, const BlockedNode&) = default;
};

/// Compact, deduplicated marking storage (LEB128 bytes in one arena).
class MarkingStore {
public:
    explicit MarkingStore(std::size_t places = 0);

    std::size_t size() const noexcept { return hashes_.size(); }
    std::size_t places() const noexcept { return places_; }

    /// Inserts the encoding if absent; returns (id, inserted).
    std::pair<std::uint32_t, bool> insert(std::span<const std::uint8_t> encoded, std::uint64_t hash);
    std::optional<std::uint32_t> find(std::span<const std::uint8_t> encoded, std::uint64_t hash) const;
    std::optional<std::uint32_t> find(const Marking& m) const;

    Marking at(std::uint32_t id) const;
    void decode_into(std::uint32_t id, std::vector<std::uint32_t>& out) const;

    static void encode(std::span<const std::uint32_t> counts, std::vector<std::uint8_t>& out);
    static std::uint64_t hash_bytes(std::span<const std::uint8_t> bytes);

    std::size_t memory_bytes() const;

private:
    std::span<const std::uint8_t> bytes_of(std::uint32_t id) const;
    void grow();

    std::size_t places_;
    std::vector<std::uint8_t> arena_;
    std::vector<std::uint64_t> offsets_{0};
    std::vector<std::uint64_t> hashes_;
    std::vector<std::uint32_t> slots_; // id + 1, 0 = empty
};

/// Markings reachable from m0; node 0 is m0 and ids follow BFS discovery order.
class ReachabilityGraph {
public:
    ReachabilityGraph() = default;

    const PetriNet& net() const noexcept { return net_; }
    std::size_t node_count() const noexcept { return store_.size(); }
    Marking node(std::uint32_t id) const { return store_.at(id); }
    std::optional<std::uint32_t> find(const Marking& m) const { return store_.find(m); }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::span<const Edge> out_edges(std::uint32_t id) const;

    /// Nodes whose successors were all generated (ids below this value).
    std::size_t expanded_count() const noexcept { return expanded_; }
    bool truncated() const noexcept { return truncated_; }
    /// Valued mode: a node needed more than max_branches valuations.
    bool branch_cap_exceeded() const noexcept { return branch_cap_exceeded_; }
    std::size_t state_limit() const noexcept { return state_limit_; }
    GuardMode mode() const noexcept { return mode_; }
    const std::vector<BlockedNode>& blocked() const noexcept { return blocked_; }

    std::size_t memory_bytes() const;

private:
    friend class GraphAssembler;

    PetriNet net_;
    MarkingStore store_;
    std::vector<Edge> edges_;
    std::vector<std::uint64_t> edge_offsets_; // size node_count + 1 once finalised
    std::vector<BlockedNode> blocked_;
    std::size_t expanded_ = 0;
    bool truncated_ = false;
    bool branch_cap_exceeded_ = false;
    std::size_t state_limit_ = 0;
    GuardMode mode_ = GuardMode::Structural;
};

/// Breadth-first closure of m0, successor generation parallelised per BFS
/// level with OpenMP. Node numbering and edge order equal the sequential
/// reference regardless of thread count.
ReachabilityGraph build_graph(const PetriNet& net, const ReachOptions& options = {});

/// Straightforward sequential BFS kept as the reference for build_graph.
ReachabilityGraph build_graph_serial(const PetriNet& net, const ReachOptions& options = {});

struct PropertyVerdict {
    GuardMode mode = GuardMode::Structural;
    /// False when the graph was truncated: negative findings remain valid,
    /// positive ones only hold up to the limit.
    bool definitive = true;

    bool deadlock_free = true;
    std::optional<std::uint32_t> deadlock_node;
    std::optional<Valuation> deadlock_valuation;

    bool safe = true;
    std::optional<std::pair<std::uint32_t, PlaceId>> unsafe_at;
    std::vector<std::uint32_t> bound;

    /// Set when an invariant basis was supplied: every place invariant has the
    /// same weighted sum at every node.
    std::optional<bool> conservative_confirmed;

    bool live = true;
    std::optional<std::pair<std::uint32_t, TransitionId>> not_live;
};

PropertyVerdict check_properties(const ReachabilityGraph& g, const PlaceBasis* invariants = nullptr);

/// y·M for every node equals y·M0.
bool invariant_holds_everywhere(const ReachabilityGraph& g, std::span<const std::int64_t> weights);

/// A firing sequence m0 -> m0 whose per-transition counts equal x, or nullopt.
/// `search_limit` bounds the number of distinct (node, remaining-counts)
/// states visited.
std::optional<std::vector<TransitionId>> find_cycle_realizing(const ReachabilityGraph& g,
                                                              const FiringCountVector& x,
                                                              std::size_t search_limit = 2'000'000);

/// Strongly connected components; component id per node, components in
/// reverse topological order (bottom components first is not guaranteed).
std::vector<std::uint32_t> strongly_connected_components(const ReachabilityGraph& g, std::size_t& count);

std::string export_dot(const ReachabilityGraph& g);
/// Stable key order; verdict included when given.
std::string export_json(const ReachabilityGraph& g, const PropertyVerdict* verdict = nullptr);

} // namespace hpn
