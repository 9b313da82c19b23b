#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpn/net.hpp"

namespace hpn {

enum class Layer { System, Agent, Subsystem, Behaviour, ActionF, ActionSnd, ActionRcv, CommModel, Other };

std::string_view to_string(Layer layer);
std::optional<Layer> parse_layer(std::string_view text);

/// Layers whose nets have no input/output place (they are never nested under a page).
bool is_closed_layer(Layer layer);

/// One net of the hierarchy together with its page bindings.
///
/// Pages are ordinary places; `page_bindings` says which child panel a page
/// stands for. Open panels have exactly one input place (no incoming arcs) and
/// one output place (no outgoing arcs); closed panels have neither.
struct Panel {
    std::string id;
    Layer layer = Layer::Other;
    PetriNet net;
    std::map<PlaceId, std::string> page_bindings;
    std::optional<PlaceId> input_place;
    std::optional<PlaceId> output_place;
    /// Raw template declaration ("behaviour", "agent subsystems=3", ...) when
    /// the panel was instantiated from one.
    std::optional<std::string> template_decl;

    bool closed() const noexcept { return is_closed_layer(layer); }
    bool is_page(PlaceId p) const { return page_bindings.count(p) != 0; }
};

/// Ports from structure: the unique place with no incoming arc and the unique
/// place with no outgoing arc (nullopt when not unique).
std::pair<std::optional<PlaceId>, std::optional<PlaceId>> detect_ports(const PetriNet& net);

/// Throws StructuralError on a malformed panel.
void validate_panel(const Panel& panel);

struct FusionMember {
    std::string panel;
    PlaceId place;
    friend auto operator<=>(const FusionMember&, const FusionMember&) = default;
};

/// Places of different panels identified as one shared place.
struct FusionSet {
    std::string name;
    std::vector<FusionMember> members;
};

class HierarchicalNet {
public:
    void add_panel(Panel panel);
    void set_root(std::string id) { root_ = std::move(id); }
    void add_fusion(FusionSet set) { fusion_sets_.push_back(std::move(set)); }

    const Panel& panel(std::string_view id) const;
    bool contains(std::string_view id) const { return panels_.find(id) != panels_.end(); }
    const std::map<std::string, Panel, std::less<>>& panels() const noexcept { return panels_; }
    const std::string& root() const noexcept { return root_; }
    const std::vector<FusionSet>& fusion_sets() const noexcept { return fusion_sets_; }

    /// Parent panel id per panel (absent for the root and detached closed panels).
    std::map<std::string, std::string> parents() const;

    /// Tree shape, bindings, fusion sets and every panel. Throws StructuralError.
    void validate() const;

private:
    std::map<std::string, Panel, std::less<>> panels_;
    std::string root_;
    std::vector<FusionSet> fusion_sets_;
};

/// Panel net plus one transition from the output place back to the input place.
PetriNet close_loop(const Panel& panel);

struct CollapsedNet {
    PetriNet net;
    /// Page place name -> bound child panel id.
    std::map<std::string, std::string> page_to_panel;
};

/// Pages become ordinary places. Since pages already are places this is a
/// relabelling that keeps the traceability map.
CollapsedNet collapse_pages(const Panel& panel);

/// close_loop + collapse_pages, with the page map carried over.
CollapsedNet reduce_panel(const Panel& panel);

struct SelfLoop {
    TransitionId transition;
    PlaceId place;
    std::uint32_t weight = 1;
    friend auto operator<=>(const SelfLoop&, const SelfLoop&) = default;
};

struct PurifiedNet {
    PetriNet net;
    /// Removed pairs, read-arc side notes, ordered by (transition, place).
    std::vector<SelfLoop> removed;
};

/// Removes every self-loop pair t<->p with equal weights both ways.
/// Throws StructuralError for a self-loop with unequal weights.
PurifiedNet purify(const PetriNet& net);

/// Puts the removed self-loop arcs back (inverse of purify).
PetriNet reinsert_self_loops(const PurifiedNet& purified);

/// Substitutes every page by its child's net: arcs into the page go to the
/// child's input place, arcs out of it leave from the child's output place.
/// Fused places are merged; closed panels linked by fusion to the flattened
/// tree are pulled in. Child places are named "<panel id>/<place>".
PetriNet flatten(const HierarchicalNet& h, std::string_view root);

} // namespace hpn
