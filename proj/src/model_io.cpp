#include "hpn/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include <json.hpp>

#include "hpn/metamodel.hpp"

namespace hpn {

std::string Diagnostic::to_string() const {
    std::string s;
    if (line)
        s += std::to_string(line) + ":" + std::to_string(column) + ": ";
    s += severity == Severity::Error ? "error: " : "warning: ";
    return s + message;
}

bool ParseResult::ok() const {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

bool natural_less(std::string_view a, std::string_view b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie])))
                ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je])))
                ++je;
            auto na = a.substr(i, ie - i), nb = b.substr(j, je - j);
            // Compare by magnitude ignoring leading zeros, then by length.
            auto strip = [](std::string_view s) {
                std::size_t k = 0;
                while (k + 1 < s.size() && s[k] == '0')
                    ++k;
                return s.substr(k);
            };
            auto sa = strip(na), sb = strip(nb);
            if (sa.size() != sb.size())
                return sa.size() < sb.size();
            if (sa != sb)
                return sa < sb;
            if (na.size() != nb.size())
                return na.size() < nb.size();
            i = ie;
            j = je;
            continue;
        }
        if (a[i] != b[j])
            return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]);
        ++i;
        ++j;
    }
    return a.size() - i < b.size() - j;
}

namespace {

struct Token {
    std::string text; // unquoted
    std::size_t column = 0;
    bool quoted = false;
};

class Collector {
public:
    Collector(std::vector<Diagnostic>& out, std::size_t limit) : out_(out), limit_(limit) {}

    void error(std::size_t line, std::size_t col, std::string msg) {
        add(line, col, Diagnostic::Severity::Error, std::move(msg));
    }
    void warning(std::size_t line, std::size_t col, std::string msg) {
        add(line, col, Diagnostic::Severity::Warning, std::move(msg));
    }
    bool full() const { return out_.size() >= limit_; }

private:
    void add(std::size_t line, std::size_t col, Diagnostic::Severity s, std::string msg) {
        if (out_.size() < limit_)
            out_.push_back({line, col, s, std::move(msg)});
    }
    std::vector<Diagnostic>& out_;
    std::size_t limit_;
};

bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '/' || c == ':' || c == '\'' ||
           c == '-' || c == '.';
}

bool valid_node_name(std::string_view s) {
    if (s.empty() || s == "->")
        return false;
    if (!(std::isalnum(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return name_char(c) && c != '.'; });
}

bool valid_panel_id(std::string_view s) {
    if (s.empty() || !(std::isalnum(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    return std::all_of(s.begin(), s.end(), name_char);
}

/// Splits a line into tokens; quotes may start inside a token (key="a b").
bool tokenize(std::string_view line, std::size_t lineno, std::vector<Token>& out, Collector& diag) {
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        if (line[i] == '#')
            break;
        Token t;
        t.column = i + 1;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            if (line[i] == '"') {
                t.quoted = true;
                std::size_t start = i;
                ++i;
                bool closed = false;
                while (i < line.size()) {
                    if (line[i] == '\\' && i + 1 < line.size()) {
                        t.text += line[i + 1];
                        i += 2;
                        continue;
                    }
                    if (line[i] == '"') {
                        closed = true;
                        ++i;
                        break;
                    }
                    t.text += line[i++];
                }
                if (!closed) {
                    diag.error(lineno, start + 1, "unterminated string");
                    return false;
                }
                continue;
            }
            if (line[i] == '#' && !t.quoted && t.text.empty())
                break;
            t.text += line[i++];
        }
        out.push_back(std::move(t));
    }
    return true;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + "\"";
}

/// Splits "key=value"; value keeps quoted content.
std::pair<std::string, std::string> split_kv(const Token& t) {
    auto eq = t.text.find('=');
    if (eq == std::string::npos)
        return {t.text, {}};
    return {t.text.substr(0, eq), t.text.substr(eq + 1)};
}

class Parser {
public:
    Parser(const ParseOptions& o, ParseResult& r) : opt_(o), res_(r), diag_(r.diagnostics, o.max_diagnostics) {}

    void run(std::string_view text) {
        std::size_t lineno = 0;
        std::size_t pos = 0;
        bool header = false;
        while (pos <= text.size() && !diag_.full()) {
            auto nl = text.find('\n', pos);
            auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            ++lineno;
            std::vector<Token> toks;
            bool ok = tokenize(line, lineno, toks, diag_);
            if (lineno == 1) {
                header = check_header(toks);
            } else if (ok && !toks.empty() && header) {
                statement(toks, lineno, line);
            }
            if (nl == std::string_view::npos)
                break;
            pos = nl + 1;
        }
    }

private:
    bool check_header(const std::vector<Token>& toks) {
        if (toks.size() != 2 || toks[0].text != "hpn") {
            diag_.error(1, 1, "line 1 must be the format pragma 'hpn 1'");
            return false;
        }
        auto v = parse_int<int>(toks[1].text);
        if (!v) {
            diag_.error(1, toks[1].column, "format version must be an integer");
            return false;
        }
        if (*v != 1) {
            diag_.error(1, toks[1].column, "unsupported format version " + toks[1].text);
            return false;
        }
        res_.document.format_version = *v;
        return true;
    }

    void unknown_key(std::size_t line, const Token& t, std::string_view what) {
        std::string msg = "unknown " + std::string(what) + " '" + split_kv(t).first + "'";
        if (opt_.strict)
            diag_.error(line, t.column, msg);
        else
            diag_.warning(line, t.column, msg + " ignored");
    }

    PanelDecl* current(std::size_t line, const Token& t) {
        if (res_.document.panels.empty()) {
            diag_.error(line, t.column, "'" + t.text + "' outside of a panel");
            return nullptr;
        }
        return &res_.document.panels.back();
    }

    void statement(const std::vector<Token>& toks, std::size_t line, std::string_view raw) {
        const auto& kw = toks[0].text;
        if (kw == "panel")
            panel(toks, line);
        else if (kw == "place")
            place(toks, line);
        else if (kw == "trans")
            trans(toks, line);
        else if (kw == "arc")
            arc(toks, line);
        else if (kw == "page")
            page(toks, line);
        else if (kw == "fusion")
            fusion(toks, line, raw);
        else if (kw == "template")
            templ(toks, line, raw);
        else if (kw == "root")
            root(toks, line);
        else if (kw == "hpn")
            diag_.error(line, toks[0].column, "format pragma repeated");
        else
            diag_.error(line, toks[0].column, "unknown statement '" + kw + "'");
    }

    void panel(const std::vector<Token>& toks, std::size_t line) {
        if (toks.size() < 2) {
            diag_.error(line, toks[0].column, "expected a panel id");
            return;
        }
        PanelDecl p;
        p.id = toks[1].text;
        p.line = line;
        if (!valid_panel_id(p.id)) {
            diag_.error(line, toks[1].column, "invalid panel id '" + p.id + "'");
            return;
        }
        for (std::size_t i = 2; i < toks.size(); ++i) {
            auto [k, v] = split_kv(toks[i]);
            if (k == "layer") {
                auto l = parse_layer(v);
                if (!l) {
                    diag_.error(line, toks[i].column, "unknown layer '" + v + "'");
                    continue;
                }
                p.layer = *l;
            } else {
                unknown_key(line, toks[i], "panel attribute");
            }
        }
        res_.document.panels.push_back(std::move(p));
    }

    void place(const std::vector<Token>& toks, std::size_t line) {
        auto* p = current(line, toks[0]);
        if (!p)
            return;
        if (toks.size() < 2 || !valid_node_name(toks[1].text)) {
            diag_.error(line, toks.size() < 2 ? toks[0].column : toks[1].column, "expected a place name");
            return;
        }
        PlaceDecl d;
        d.name = toks[1].text;
        d.line = line;
        for (std::size_t i = 2; i < toks.size(); ++i) {
            auto [k, v] = split_kv(toks[i]);
            if (toks[i].text == "in") {
                d.input = true;
            } else if (toks[i].text == "out") {
                d.output = true;
            } else if (k == "tokens") {
                auto n = parse_int<std::uint32_t>(v);
                if (!n)
                    diag_.error(line, toks[i].column, "tokens must be a non-negative integer");
                else
                    d.tokens = *n;
            } else if (k == "op") {
                d.operation = v;
            } else {
                unknown_key(line, toks[i], "place attribute");
            }
        }
        p->places.push_back(std::move(d));
    }

    void trans(const std::vector<Token>& toks, std::size_t line) {
        auto* p = current(line, toks[0]);
        if (!p)
            return;
        if (toks.size() < 2 || !valid_node_name(toks[1].text)) {
            diag_.error(line, toks.size() < 2 ? toks[0].column : toks[1].column, "expected a transition name");
            return;
        }
        TransitionDecl d;
        d.name = toks[1].text;
        d.line = line;
        for (std::size_t i = 2; i < toks.size(); ++i) {
            auto [k, v] = split_kv(toks[i]);
            if (k == "guard" && toks[i].text.find('=') != std::string::npos) {
                d.guard = v;
                d.guard_column = toks[i].column + 6 + (toks[i].quoted ? 1 : 0);
            } else if (k == "prio") {
                auto n = parse_int<int>(v);
                if (!n)
                    diag_.error(line, toks[i].column, "prio must be an integer");
                else
                    d.priority = *n;
            } else {
                unknown_key(line, toks[i], "transition attribute");
            }
        }
        p->transitions.push_back(std::move(d));
    }

    void arc(const std::vector<Token>& toks, std::size_t line) {
        auto* p = current(line, toks[0]);
        if (!p)
            return;
        if (toks.size() < 4 || toks[2].text != "->") {
            diag_.error(line, toks[0].column, "expected 'arc <from> -> <to> [w=n]'");
            return;
        }
        ArcDecl a;
        a.from = toks[1].text;
        a.to = toks[3].text;
        a.line = line;
        a.column = toks[1].column;
        a.to_column = toks[3].column;
        for (std::size_t i = 4; i < toks.size(); ++i) {
            auto [k, v] = split_kv(toks[i]);
            if (k == "w") {
                auto n = parse_int<std::uint32_t>(v);
                if (!n || *n == 0)
                    diag_.error(line, toks[i].column, "arc weight must be a positive integer");
                else
                    a.weight = *n;
            } else {
                unknown_key(line, toks[i], "arc attribute");
            }
        }
        p->arcs.push_back(std::move(a));
    }

    void page(const std::vector<Token>& toks, std::size_t line) {
        auto* p = current(line, toks[0]);
        if (!p)
            return;
        if (toks.size() != 4 || toks[2].text != "->") {
            diag_.error(line, toks[0].column, "expected 'page <place> -> <panel-id>'");
            return;
        }
        p->pages.push_back({toks[1].text, toks[3].text, line, toks[1].column});
    }

    void templ(const std::vector<Token>& toks, std::size_t line, std::string_view raw) {
        auto* p = current(line, toks[0]);
        if (!p)
            return;
        if (toks.size() < 2) {
            diag_.error(line, toks[0].column, "expected a template kind");
            return;
        }
        if (p->template_decl) {
            diag_.error(line, toks[0].column, "panel already has a template");
            return;
        }
        (void)raw;
        std::string decl;
        for (std::size_t i = 1; i < toks.size(); ++i)
            decl += (i > 1 ? " " : "") + toks[i].text;
        p->template_decl = decl;
        p->template_line = line;
    }

    void root(const std::vector<Token>& toks, std::size_t line) {
        if (toks.size() != 2) {
            diag_.error(line, toks[0].column, "expected 'root <panel-id>'");
            return;
        }
        if (res_.document.root)
            diag_.error(line, toks[0].column, "root declared twice");
        res_.document.root = toks[1].text;
    }

    void fusion(const std::vector<Token>& toks, std::size_t line, std::string_view raw) {
        auto start = raw.find("fusion") + 6;
        auto colon = raw.find(':', start);
        auto hash = raw.find('#', start);
        if (colon == std::string_view::npos || (hash != std::string_view::npos && hash < colon)) {
            diag_.error(line, toks[0].column, "expected 'fusion <name>: <panel.place>, <panel.place>'");
            return;
        }
        auto trim = [](std::string_view s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.remove_prefix(1);
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                s.remove_suffix(1);
            return s;
        };
        FusionDecl f;
        f.line = line;
        f.name = std::string(trim(raw.substr(start, colon - start)));
        if (!valid_node_name(f.name)) {
            diag_.error(line, start + 1, "invalid fusion name '" + f.name + "'");
            return;
        }
        auto rest = raw.substr(colon + 1);
        if (auto h = rest.find('#'); h != std::string_view::npos)
            rest = rest.substr(0, h);
        std::size_t offset = colon + 1;
        while (true) {
            auto comma = rest.find(',');
            auto item = trim(rest.substr(0, comma));
            auto col = offset + 1;
            auto dot = item.rfind('.');
            if (item.empty() || dot == std::string_view::npos || dot == 0 || dot + 1 == item.size()) {
                diag_.error(line, col, "fusion member '" + std::string(item) + "' must be <panel>.<place>");
                return;
            }
            f.members.push_back({std::string(item.substr(0, dot)), std::string(item.substr(dot + 1))});
            if (comma == std::string_view::npos)
                break;
            rest = rest.substr(comma + 1);
            offset += comma + 1;
        }
        if (f.members.size() < 2) {
            diag_.error(line, toks[0].column, "fusion set '" + f.name + "' needs at least two members");
            return;
        }
        res_.document.fusions.push_back(std::move(f));
    }

    const ParseOptions& opt_;
    ParseResult& res_;
    Collector diag_;
};

bool same_net(const PetriNet& a, const PetriNet& b) {
    if (a.place_count() != b.place_count() || a.transition_count() != b.transition_count())
        return false;
    for (std::uint32_t i = 0; i < a.place_count(); ++i) {
        const auto &x = a.place(PlaceId{i}), &y = b.place(PlaceId{i});
        if (x.name != y.name || x.operation != y.operation ||
            a.initial_marking()[i] != b.initial_marking()[i])
            return false;
    }
    for (std::uint32_t i = 0; i < a.transition_count(); ++i) {
        const auto &x = a.transition(TransitionId{i}), &y = b.transition(TransitionId{i});
        if (x.name != y.name || !(x.guard == y.guard) || x.priority != y.priority)
            return false;
    }
    auto ax = a.arcs(), bx = b.arcs();
    std::sort(ax.begin(), ax.end());
    std::sort(bx.begin(), bx.end());
    return ax == bx;
}

} // namespace

ParseResult parse_model(std::string_view text, const ParseOptions& options) {
    ParseResult r;
    Parser p(options, r);
    p.run(text);
    return r;
}

LoadResult build_hierarchy(const ModelDocument& doc, const ParseOptions& options) {
    LoadResult out;
    Collector diag(out.diagnostics, options.max_diagnostics);
    HierarchicalNet h;
    std::set<std::string> ids;
    for (const auto& pd : doc.panels)
        if (!ids.insert(pd.id).second)
            diag.error(pd.line, 1, "duplicate panel id '" + pd.id + "'");

    std::vector<std::pair<std::string, const PageDecl*>> pending_pages;
    std::size_t panels_before = out.diagnostics.size();
    for (const auto& pd : doc.panels) {
        if (diag.full())
            break;
        Panel panel;
        panel.id = pd.id;
        panel.layer = pd.layer;
        const std::size_t errors_before = out.diagnostics.size();
        if (pd.template_decl) {
            if (!pd.places.empty() || !pd.transitions.empty() || !pd.arcs.empty()) {
                diag.error(pd.template_line, 1, "a template panel cannot declare places, transitions or arcs");
                continue;
            }
            try {
                auto t = parse_template_decl(*pd.template_decl, pd.layer);
                if (pd.layer != Layer::Other && layer_of(t) != pd.layer)
                    throw Error("template '" + *pd.template_decl + "' does not belong to layer " +
                                std::string(to_string(pd.layer)));
                auto generated = generate_template(t, pd.id);
                panel.net = generated.net;
                panel.layer = generated.layer;
                panel.input_place = generated.input_place;
                panel.output_place = generated.output_place;
                panel.template_decl = generated.template_decl;
            } catch (const Error& e) {
                diag.error(pd.template_line, 1, e.what());
                continue;
            }
        } else {
            NetBuilder b;
            std::map<std::string, NodeRef> names;
            std::optional<PlaceId> in, out_place;
            for (const auto& p : pd.places) {
                if (names.count(p.name)) {
                    diag.error(p.line, 1, "duplicate node name '" + p.name + "'");
                    continue;
                }
                auto id = b.add_place(p.name, p.tokens, p.operation);
                names[p.name] = {NodeKind::Place, id.index};
                if (p.input) {
                    if (in)
                        diag.error(p.line, 1, "panel '" + pd.id + "' has more than one input place");
                    in = id;
                }
                if (p.output) {
                    if (out_place)
                        diag.error(p.line, 1, "panel '" + pd.id + "' has more than one output place");
                    out_place = id;
                }
            }
            for (const auto& t : pd.transitions) {
                if (names.count(t.name)) {
                    diag.error(t.line, 1, "duplicate node name '" + t.name + "'");
                    continue;
                }
                Guard g;
                if (t.guard) {
                    try {
                        g = Guard::parse(*t.guard);
                    } catch (const GuardSyntaxError& e) {
                        diag.error(t.line, t.guard_column + e.column(), e.what());
                    }
                }
                auto id = b.add_transition(t.name, g, t.priority);
                names[t.name] = {NodeKind::Transition, id.index};
            }
            for (const auto& a : pd.arcs) {
                auto f = names.find(a.from);
                auto t = names.find(a.to);
                if (f == names.end()) {
                    diag.error(a.line, a.column, "unknown node '" + a.from + "'");
                    continue;
                }
                if (t == names.end()) {
                    diag.error(a.line, a.to_column, "unknown node '" + a.to + "'");
                    continue;
                }
                if (f->second.kind == t->second.kind) {
                    diag.error(a.line, a.column, "arc must connect a place and a transition");
                    continue;
                }
                b.add_arc(Arc{f->second, t->second, a.weight});
            }
            if (out.diagnostics.size() != errors_before)
                continue;
            try {
                panel.net = b.build();
            } catch (const Error& e) {
                diag.error(pd.line, 1, e.what());
                continue;
            }
            if (!is_closed_layer(pd.layer)) {
                auto [din, dout] = detect_ports(panel.net);
                panel.input_place = in ? in : din;
                panel.output_place = out_place ? out_place : dout;
            } else if (in || out_place) {
                diag.error(pd.line, 1, "closed panel '" + pd.id + "' cannot have input or output places");
                continue;
            }
        }
        for (const auto& pg : pd.pages) {
            auto p = panel.net.find_place(pg.place);
            if (!p) {
                diag.error(pg.line, pg.column, "unknown place '" + pg.place + "'");
                continue;
            }
            if (!panel.page_bindings.emplace(*p, pg.panel).second)
                diag.error(pg.line, pg.column, "place '" + pg.place + "' is already a page");
            pending_pages.emplace_back(pd.id, &pg);
        }
        try {
            validate_panel(panel);
        } catch (const Error& e) {
            diag.error(pd.line, 1, e.what());
            continue;
        }
        if (out.diagnostics.size() == errors_before && !h.contains(panel.id))
            h.add_panel(std::move(panel));
    }
    if (doc.panels.empty())
        diag.error(0, 0, "document declares no panels");
    for (const auto& [owner, pg] : pending_pages)
        if (!ids.count(pg->panel))
            diag.error(pg->line, pg->column, "page bound to unknown panel '" + pg->panel + "'");
    for (const auto& f : doc.fusions) {
        FusionSet set{f.name, {}};
        bool ok = true;
        for (const auto& m : f.members) {
            if (!h.contains(m.panel)) {
                if (!ids.count(m.panel))
                    diag.error(f.line, 1, "fusion member refers to unknown panel '" + m.panel + "'");
                ok = false;
                continue;
            }
            auto p = h.panel(m.panel).net.find_place(m.place);
            if (!p) {
                diag.error(f.line, 1, "fusion member refers to unknown place '" + m.panel + "." + m.place + "'");
                ok = false;
                continue;
            }
            set.members.push_back({m.panel, *p});
        }
        if (ok)
            h.add_fusion(std::move(set));
    }
    if (doc.root) {
        if (!ids.count(*doc.root))
            diag.error(0, 0, "root panel '" + *doc.root + "' is not declared");
        h.set_root(*doc.root);
    }
    (void)panels_before;
    if (std::any_of(out.diagnostics.begin(), out.diagnostics.end(),
                    [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; }))
        return out;
    try {
        h.validate();
    } catch (const Error& e) {
        diag.error(0, 0, e.what());
        return out;
    }
    out.net = std::move(h);
    return out;
}

LoadResult load_model(std::string_view text, const ParseOptions& options) {
    auto parsed = parse_model(text, options);
    if (!parsed.ok()) {
        LoadResult out;
        out.diagnostics = std::move(parsed.diagnostics);
        return out;
    }
    auto built = build_hierarchy(parsed.document, options);
    parsed.diagnostics.insert(parsed.diagnostics.end(), built.diagnostics.begin(), built.diagnostics.end());
    if (parsed.diagnostics.size() > options.max_diagnostics)
        parsed.diagnostics.resize(options.max_diagnostics);
    built.diagnostics = std::move(parsed.diagnostics);
    return built;
}

ModelDocument to_document(const HierarchicalNet& h) {
    ModelDocument doc;
    doc.root = h.root();
    for (const auto& [id, panel] : h.panels()) {
        PanelDecl pd;
        pd.id = id;
        pd.layer = panel.layer;
        bool templated = false;
        if (panel.template_decl) {
            try {
                auto g = generate_template(parse_template_decl(*panel.template_decl, panel.layer), id);
                templated = same_net(g.net, panel.net) && g.input_place == panel.input_place &&
                            g.output_place == panel.output_place;
            } catch (const Error&) {
                templated = false;
            }
        }
        const auto& net = panel.net;
        if (templated) {
            pd.template_decl = panel.template_decl;
        } else {
            for (std::uint32_t p = 0; p < net.place_count(); ++p) {
                PlaceDecl d;
                d.name = net.place(PlaceId{p}).name;
                d.operation = net.place(PlaceId{p}).operation;
                d.tokens = net.initial_marking()[p];
                d.input = panel.input_place && panel.input_place->index == p;
                d.output = panel.output_place && panel.output_place->index == p;
                pd.places.push_back(std::move(d));
            }
            for (const auto& t : net.transitions()) {
                TransitionDecl d;
                d.name = t.name;
                if (!t.guard.is_constant_true())
                    d.guard = t.guard.to_string();
                d.priority = t.priority;
                pd.transitions.push_back(std::move(d));
            }
            std::map<std::pair<std::string, std::string>, std::uint32_t> arcs;
            for (const auto& a : net.arcs()) {
                auto name = [&](NodeRef r) {
                    return r.kind == NodeKind::Place ? net.place(PlaceId{r.index}).name
                                                     : net.transition(TransitionId{r.index}).name;
                };
                arcs[{name(a.source), name(a.target)}] += a.weight;
            }
            for (const auto& [k, w] : arcs)
                pd.arcs.push_back({k.first, k.second, w, 0, 0});
        }
        for (const auto& [place, child] : panel.page_bindings)
            pd.pages.push_back({net.place(place).name, child, 0, 0});
        doc.panels.push_back(std::move(pd));
    }
    for (const auto& f : h.fusion_sets()) {
        FusionDecl d;
        d.name = f.name;
        for (const auto& m : f.members)
            d.members.push_back({m.panel, h.panel(m.panel).net.place(m.place).name});
        doc.fusions.push_back(std::move(d));
    }
    return doc;
}

std::string serialize(const ModelDocument& input) {
    ModelDocument doc = input;
    auto by_name = [](const auto& a, const auto& b) { return natural_less(a.name, b.name); };
    std::sort(doc.panels.begin(), doc.panels.end(),
              [](const PanelDecl& a, const PanelDecl& b) { return natural_less(a.id, b.id); });
    std::string out = "hpn " + std::to_string(doc.format_version) + "\n";
    if (doc.root)
        out += "root " + *doc.root + "\n";
    for (auto& pd : doc.panels) {
        std::sort(pd.places.begin(), pd.places.end(), by_name);
        std::sort(pd.transitions.begin(), pd.transitions.end(), by_name);
        std::sort(pd.arcs.begin(), pd.arcs.end(), [](const ArcDecl& a, const ArcDecl& b) {
            if (a.from != b.from)
                return natural_less(a.from, b.from);
            return natural_less(a.to, b.to);
        });
        std::sort(pd.pages.begin(), pd.pages.end(),
                  [](const PageDecl& a, const PageDecl& b) { return natural_less(a.place, b.place); });
        out += "\npanel " + pd.id + " layer=" + std::string(to_string(pd.layer)) + "\n";
        if (pd.template_decl)
            out += "  template " + *pd.template_decl + "\n";
        for (const auto& p : pd.places) {
            out += "  place " + p.name;
            if (p.input)
                out += " in";
            if (p.output)
                out += " out";
            if (p.tokens)
                out += " tokens=" + std::to_string(p.tokens);
            if (!p.operation.empty())
                out += " op=" + quote(p.operation);
            out += "\n";
        }
        for (const auto& t : pd.transitions) {
            out += "  trans " + t.name;
            if (t.guard)
                out += " guard=" + quote(*t.guard);
            if (t.priority)
                out += " prio=" + std::to_string(*t.priority);
            out += "\n";
        }
        for (const auto& a : pd.arcs) {
            out += "  arc " + a.from + " -> " + a.to;
            if (a.weight != 1)
                out += " w=" + std::to_string(a.weight);
            out += "\n";
        }
        for (const auto& pg : pd.pages)
            out += "  page " + pg.place + " -> " + pg.panel + "\n";
    }
    auto fusions = doc.fusions;
    for (auto& f : fusions)
        std::sort(f.members.begin(), f.members.end(), [](const auto& a, const auto& b) {
            if (a.panel != b.panel)
                return natural_less(a.panel, b.panel);
            return natural_less(a.place, b.place);
        });
    std::sort(fusions.begin(), fusions.end(), by_name);
    if (!fusions.empty())
        out += "\n";
    for (const auto& f : fusions) {
        out += "fusion " + f.name + ":";
        for (std::size_t i = 0; i < f.members.size(); ++i)
            out += std::string(i ? ", " : " ") + f.members[i].panel + "." + f.members[i].place;
        out += "\n";
    }
    return out;
}

std::string serialize(const HierarchicalNet& h) { return serialize(to_document(h)); }

std::string serialize(const PetriNet& net, std::string_view panel_id, Layer layer) {
    HierarchicalNet h;
    Panel p;
    p.id = std::string(panel_id);
    p.layer = layer;
    p.net = net;
    if (!is_closed_layer(layer)) {
        auto [in, out] = detect_ports(net);
        p.input_place = in;
        p.output_place = out;
    }
    h.add_panel(std::move(p));
    return serialize(to_document(h));
}

std::string to_json(const ModelDocument& doc) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["format_version"] = doc.format_version;
    j["root"] = doc.root ? ordered_json(*doc.root) : ordered_json(nullptr);
    ordered_json panels = ordered_json::array();
    for (const auto& pd : doc.panels) {
        ordered_json p;
        p["id"] = pd.id;
        p["layer"] = std::string(to_string(pd.layer));
        p["template"] = pd.template_decl ? ordered_json(*pd.template_decl) : ordered_json(nullptr);
        ordered_json places = ordered_json::array();
        for (const auto& x : pd.places)
            places.push_back({{"name", x.name},
                              {"input", x.input},
                              {"output", x.output},
                              {"tokens", x.tokens},
                              {"operation", x.operation}});
        p["places"] = places;
        ordered_json ts = ordered_json::array();
        for (const auto& t : pd.transitions)
            ts.push_back({{"name", t.name},
                          {"guard", t.guard ? ordered_json(*t.guard) : ordered_json(nullptr)},
                          {"priority", t.priority ? ordered_json(*t.priority) : ordered_json(nullptr)}});
        p["transitions"] = ts;
        ordered_json arcs = ordered_json::array();
        for (const auto& a : pd.arcs)
            arcs.push_back({{"from", a.from}, {"to", a.to}, {"weight", a.weight}});
        p["arcs"] = arcs;
        ordered_json pages = ordered_json::array();
        for (const auto& pg : pd.pages)
            pages.push_back({{"place", pg.place}, {"panel", pg.panel}});
        p["pages"] = pages;
        panels.push_back(p);
    }
    j["panels"] = panels;
    ordered_json fusions = ordered_json::array();
    for (const auto& f : doc.fusions) {
        ordered_json members = ordered_json::array();
        for (const auto& m : f.members)
            members.push_back({{"panel", m.panel}, {"place", m.place}});
        fusions.push_back({{"name", f.name}, {"members", members}});
    }
    j["fusions"] = fusions;
    return j.dump(2) + "\n";
}

} // namespace hpn
