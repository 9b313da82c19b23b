#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hpn/hierarchy.hpp"
#include "hpn/invariants.hpp"
#include "hpn/reachability.hpp"

namespace hpn {

/// Timeout of one communication side: Zero = non-blocking (NB),
/// Infinite = blocking (B), Finite = blocking with timeout (BT).
enum class Timeout { Zero, Infinite, Finite };

struct CommMode {
    Timeout send_timeout = Timeout::Zero;
    Timeout recv_timeout = Timeout::Zero;
    friend auto operator<=>(const CommMode&, const CommMode&) = default;
};

/// "NB", "B", "BT".
std::string_view to_string(Timeout t);
/// "NB-BT" (sender first).
std::string to_string(CommMode mode);
std::optional<CommMode> parse_comm_mode(std::string_view text);
std::array<CommMode, 9> all_comm_modes();

enum class Arrangement { Sequential, Parallel, Hybrid };

std::string_view to_string(Arrangement a);
std::optional<Arrangement> parse_arrangement(std::string_view text);

struct SystemTemplate {
    std::size_t agents = 1;
};
struct AgentTemplate {
    std::size_t subsystems = 1;
};
struct BehaviourTemplate {};
struct ActionTemplate {
    /// ActionF, ActionSnd or ActionRcv.
    Layer layer = Layer::ActionF;
    Arrangement arrangement = Arrangement::Sequential;
    std::size_t pages = 1;
    /// Hybrid only: the user-supplied arrangement.
    std::optional<PetriNet> hybrid;
};
struct CommTemplate {
    CommMode mode;
    /// Without the three read self-loops (the analysed form).
    bool pure = false;
};

using LayerTemplate = std::variant<SystemTemplate, AgentTemplate, BehaviourTemplate, ActionTemplate, CommTemplate>;

Layer layer_of(const LayerTemplate& t);

/// Canonical declaration text, e.g. "agent subsystems=2" or "comm mode=NB-BT".
std::string to_decl(const LayerTemplate& t);
/// Inverse of to_decl. Hybrid actions cannot be declared. Throws Error.
LayerTemplate parse_template_decl(std::string_view decl, Layer layer = Layer::Other);

/// Instantiates a template as a panel with the given id. Throws Error on
/// invalid parameters.
Panel generate_template(const LayerTemplate& t, std::string id = "panel");

/// Sender and receiver halves of the communication net as two closed panels
/// "<prefix>send" and "<prefix>recv" joined by fusion on the buffer places.
HierarchicalNet comm_pair(CommMode mode, bool pure = false, const std::string& prefix = "");

/// Subsystem-layer structural rule violations (empty = valid). Checks
/// purity, one -1 and one +1 per incidence row, and at most one matching
/// input / output place.
std::vector<std::string> validate_subsystem_net(const PetriNet& net);

struct GuardDeterminism {
    /// More atoms than the enumeration bound.
    bool aborted = false;
    bool complete = false;
    bool exclusive = false;
    /// A valuation under which no guard holds.
    std::optional<Valuation> incomplete_at;
    /// Two guard indices and a valuation making both true.
    std::optional<std::tuple<std::size_t, std::size_t, Valuation>> overlap_at;
};

/// Exhaustive truth-table check of a set of alternative guards.
GuardDeterminism check_guard_determinism(std::span<const Guard> guards, std::size_t atom_limit = 20);
/// Guards of the transitions consuming from `place`.
GuardDeterminism check_guard_determinism(const PetriNet& net, PlaceId place, std::size_t atom_limit = 20);

/// Properties of one panel analysed standalone.
struct PanelVerdict {
    ConservativenessVerdict conservativeness;
    bool safe = false;
    bool deadlock_free = false;
    bool truncated = false;
    std::size_t states = 0;
    GuardMode mode = GuardMode::Structural;
};

struct AnalysisConfig {
    std::size_t state_limit = 1'000'000;
    /// Nets with guards or priorities are explored in valued mode unless
    /// this forces structural mode.
    bool force_structural = false;
};

/// close_loop (open panels) -> collapse_pages -> purify, then invariants and
/// reachability on the purified net. Open panels start with one token in the
/// input place.
PanelVerdict analyze_panel(const Panel& panel, const AnalysisConfig& config = {});

/// Net analysed for a panel: closed panels as they are, open panels closed
/// with one token on the input place.
PetriNet standalone_net(const Panel& panel);
/// The flattened root treated the same way.
PetriNet standalone_net(const HierarchicalNet& h);

/// Verdict of a fixed template, computed once per parameter set and cached.
const PanelVerdict& template_verdict(const LayerTemplate& t);

/// Whether a layer's panels are fixed meta-model templates at all.
bool is_template_layer(Layer layer);

/// Template the panel instantiates: its declaration when present, otherwise
/// inferred from layer and shape. nullopt when it matches no template.
std::optional<LayerTemplate> match_template(const Panel& panel, std::string* note = nullptr);

enum class AnalysisMethod { Inherited, Fresh };

std::string_view to_string(AnalysisMethod m);

struct ReportRow {
    std::string panel;
    Layer layer = Layer::Other;
    /// Template declaration or "user-defined".
    std::string kind;
    bool user_defined = false;
    AnalysisMethod method = AnalysisMethod::Fresh;
    Conservativeness cls = Conservativeness::NotConservative;
    std::vector<std::int64_t> witness;
    std::optional<std::int64_t> weighted_sum;
    bool safe = false;
    bool deadlock_free = false;
    std::vector<std::string> violations;
    std::vector<std::string> notes;

    bool ok() const { return safe && deadlock_free && violations.empty(); }
};

struct InheritanceReport {
    std::vector<ReportRow> rows; // ordered by panel id
    bool overall = false;
    std::vector<std::string> attention;
    std::vector<std::string> footnotes;

    const ReportRow* find(std::string_view panel) const;
    std::string to_text() const;
    std::string to_json() const;
};

/// Top-down pass over every panel: template instances inherit the template
/// verdict, everything else (and B-B communication) is analysed fresh.
InheritanceReport analyze_hierarchy(const HierarchicalNet& h, const AnalysisConfig& config = {});

struct ToyModelOptions {
    std::size_t agents = 1;
    std::size_t subsystems = 2;
    std::size_t behaviours = 2;
    Arrangement f = Arrangement::Sequential;
    Arrangement snd = Arrangement::Parallel;
    Arrangement rcv = Arrangement::Parallel;
    std::size_t action_pages = 2;
    CommMode comm{Timeout::Zero, Timeout::Zero};
};

/// Complete layered model built from templates plus generated subsystem
/// nets: system, agents, subsystems, behaviours, their f/snd/rcv panels and
/// one communication model.
HierarchicalNet make_toy_model(const ToyModelOptions& options = {});

/// Subsystem net over k behaviour pages: in -> B1, cyclic switching
/// between consecutive behaviours, B_k -> out.
Panel make_subsystem(std::size_t behaviours, std::string id = "subsystem");

} // namespace hpn
