#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpn/hierarchy.hpp"

namespace hpn {

struct Diagnostic {
    enum class Severity { Error, Warning };

    std::size_t line = 0;   // 1-based, 0 = whole document
    std::size_t column = 0; // 1-based
    Severity severity = Severity::Error;
    std::string message;

    /// "3:7: error: unknown node 'p9'"
    std::string to_string() const;
};

struct PlaceDecl {
    std::string name;
    bool input = false;
    bool output = false;
    std::uint32_t tokens = 0;
    std::string operation;
    std::size_t line = 0;
};

struct TransitionDecl {
    std::string name;
    std::optional<std::string> guard;
    std::optional<int> priority;
    std::size_t line = 0;
    std::size_t guard_column = 0;
};

struct ArcDecl {
    std::string from;
    std::string to;
    std::uint32_t weight = 1;
    std::size_t line = 0;
    std::size_t column = 0;
    std::size_t to_column = 0;
};

struct PageDecl {
    std::string place;
    std::string panel;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct PanelDecl {
    std::string id;
    Layer layer = Layer::Other;
    /// "behaviour", "agent subsystems=3", ...; the net then comes from the template.
    std::optional<std::string> template_decl;
    std::vector<PlaceDecl> places;
    std::vector<TransitionDecl> transitions;
    std::vector<ArcDecl> arcs;
    std::vector<PageDecl> pages;
    std::size_t line = 0;
    std::size_t template_line = 0;
};

struct FusionMemberDecl {
    std::string panel;
    std::string place;
};

struct FusionDecl {
    std::string name;
    std::vector<FusionMemberDecl> members;
    std::size_t line = 0;
};

/// Syntax tree of one .hpn document.
struct ModelDocument {
    int format_version = 1;
    std::optional<std::string> root;
    std::vector<PanelDecl> panels;
    std::vector<FusionDecl> fusions;
};

struct ParseOptions {
    /// Unknown keys are errors; lenient mode downgrades them to warnings.
    bool strict = true;
    std::size_t max_diagnostics = 20;
};

struct ParseResult {
    ModelDocument document;
    std::vector<Diagnostic> diagnostics;

    bool ok() const;
};

/// Line-oriented parser; never throws on malformed input.
ParseResult parse_model(std::string_view text, const ParseOptions& options = {});

struct LoadResult {
    std::optional<HierarchicalNet> net;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return net.has_value(); }
};

/// Resolves names, expands templates and validates the hierarchy.
LoadResult build_hierarchy(const ModelDocument& doc, const ParseOptions& options = {});

/// parse_model + build_hierarchy.
LoadResult load_model(std::string_view text, const ParseOptions& options = {});

/// Document view of a hierarchy. Panels that still equal their template are
/// kept as template declarations.
ModelDocument to_document(const HierarchicalNet& h);

/// Canonical text: panels by id, declarations sorted by name within each
/// kind, weight 1 omitted. Byte-stable.
std::string serialize(const ModelDocument& doc);
std::string serialize(const HierarchicalNet& h);

/// A flat net as a one-panel document.
std::string serialize(const PetriNet& net, std::string_view panel_id = "net", Layer layer = Layer::Other);

/// JSON mirror of the document, stable key order.
std::string to_json(const ModelDocument& doc);

/// Numeric-aware ordering: "p2" < "p10".
bool natural_less(std::string_view a, std::string_view b);

} // namespace hpn
