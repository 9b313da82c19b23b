#include "hpn/guard.hpp"

#include <cctype>

namespace hpn {

struct Guard::Node {
    Op op = Op::Const;
    bool value = true;
    std::string name;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Guard::Node>;

int precedence(Guard::Op op) {
    switch (op) {
    case Guard::Op::Or:
        return 1;
    case Guard::Op::And:
        return 2;
    default:
        return 3;
    }
}

bool is_atom_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_atom_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace

class GuardParser {
public:
    explicit GuardParser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        auto node = parse_or();
        skip_space();
        if (pos_ != text_.size())
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return node;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    [[noreturn]] void fail(const std::string& message) const {
        throw GuardSyntaxError("guard: " + message, pos_);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(std::string_view token) {
        skip_space();
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    static NodePtr binary(Guard::Op op, NodePtr lhs, NodePtr rhs) {
        auto node = std::make_shared<Guard::Node>();
        node->op = op;
        node->lhs = std::move(lhs);
        node->rhs = std::move(rhs);
        return node;
    }

    NodePtr parse_or() {
        auto lhs = parse_and();
        while (accept("||"))
            lhs = binary(Guard::Op::Or, lhs, parse_and());
        return lhs;
    }

    NodePtr parse_and() {
        auto lhs = parse_unary();
        while (accept("&&"))
            lhs = binary(Guard::Op::And, lhs, parse_unary());
        return lhs;
    }

    NodePtr parse_unary() {
        struct DepthGuard {
            int& d;
            explicit DepthGuard(int& depth) : d(depth) { ++d; }
            ~DepthGuard() { --d; }
        } depth_guard(depth_);
        if (depth_ > 200)
            fail("expression nested too deeply");
        skip_space();
        if (pos_ >= text_.size())
            fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '!') {
            ++pos_;
            auto node = std::make_shared<Guard::Node>();
            node->op = Guard::Op::Not;
            node->lhs = parse_unary();
            return node;
        }
        if (c == '(') {
            ++pos_;
            auto inner = parse_or();
            if (!accept(")"))
                fail("expected ')'");
            return inner;
        }
        if (is_atom_start(c)) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && is_atom_char(text_[pos_]))
                ++pos_;
            std::string word(text_.substr(start, pos_ - start));
            auto node = std::make_shared<Guard::Node>();
            if (word == "True" || word == "true") {
                node->op = Guard::Op::Const;
                node->value = true;
            } else if (word == "False" || word == "false") {
                node->op = Guard::Op::Const;
                node->value = false;
            } else {
                node->op = Guard::Op::Atom;
                node->name = std::move(word);
            }
            return node;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

Guard::Guard() : Guard(constant(true)) {}

Guard Guard::constant(bool value) {
    auto node = std::make_shared<Node>();
    node->op = Op::Const;
    node->value = value;
    return Guard(std::move(node));
}

Guard Guard::atom(std::string name) {
    if (name.empty() || !is_atom_start(name[0]))
        throw GuardSyntaxError("guard: invalid atom name '" + name + "'", 0);
    for (char c : name)
        if (!is_atom_char(c))
            throw GuardSyntaxError("guard: invalid atom name '" + name + "'", 0);
    auto node = std::make_shared<Node>();
    node->op = Op::Atom;
    node->name = std::move(name);
    return Guard(std::move(node));
}

Guard Guard::negate(Guard operand) {
    auto node = std::make_shared<Node>();
    node->op = Op::Not;
    node->lhs = std::move(operand.node_);
    return Guard(std::move(node));
}

Guard Guard::conjunction(Guard lhs, Guard rhs) {
    auto node = std::make_shared<Node>();
    node->op = Op::And;
    node->lhs = std::move(lhs.node_);
    node->rhs = std::move(rhs.node_);
    return Guard(std::move(node));
}

Guard Guard::disjunction(Guard lhs, Guard rhs) {
    auto node = std::make_shared<Node>();
    node->op = Op::Or;
    node->lhs = std::move(lhs.node_);
    node->rhs = std::move(rhs.node_);
    return Guard(std::move(node));
}

Guard Guard::parse(std::string_view text) {
    return Guard(GuardParser(text).parse());
}

Guard::Op Guard::op() const noexcept { return node_->op; }

bool Guard::is_constant_true() const noexcept {
    return node_->op == Op::Const && node_->value;
}

namespace {

bool eval(const Guard::Node& n, const Valuation& v) {
    switch (n.op) {
    case Guard::Op::Const:
        return n.value;
    case Guard::Op::Atom: {
        auto it = v.find(n.name);
        if (it == v.end())
            throw MissingAtomError(n.name);
        return it->second;
    }
    case Guard::Op::Not:
        return !eval(*n.lhs, v);
    case Guard::Op::And:
        return eval(*n.lhs, v) && eval(*n.rhs, v);
    case Guard::Op::Or:
        return eval(*n.lhs, v) || eval(*n.rhs, v);
    }
    return false;
}

void collect(const Guard::Node& n, std::set<std::string>& out) {
    if (n.op == Guard::Op::Atom)
        out.insert(n.name);
    if (n.lhs)
        collect(*n.lhs, out);
    if (n.rhs)
        collect(*n.rhs, out);
}

void print(const Guard::Node& n, std::string& out) {
    auto child = [&out](const Guard::Node& c, bool parens) {
        if (parens)
            out += '(';
        print(c, out);
        if (parens)
            out += ')';
    };
    switch (n.op) {
    case Guard::Op::Const:
        out += n.value ? "True" : "False";
        break;
    case Guard::Op::Atom:
        out += n.name;
        break;
    case Guard::Op::Not:
        out += '!';
        child(*n.lhs, precedence(n.lhs->op) < 3);
        break;
    case Guard::Op::And:
    case Guard::Op::Or: {
        int p = precedence(n.op);
        child(*n.lhs, precedence(n.lhs->op) < p);
        out += n.op == Guard::Op::And ? " && " : " || ";
        child(*n.rhs, precedence(n.rhs->op) <= p);
        break;
    }
    }
}

bool same(const Guard::Node& a, const Guard::Node& b) {
    if (a.op != b.op)
        return false;
    switch (a.op) {
    case Guard::Op::Const:
        return a.value == b.value;
    case Guard::Op::Atom:
        return a.name == b.name;
    case Guard::Op::Not:
        return same(*a.lhs, *b.lhs);
    default:
        return same(*a.lhs, *b.lhs) && same(*a.rhs, *b.rhs);
    }
}

void emit(const Guard::Node& n, const std::vector<std::string>& table, CompiledGuard& out,
          std::vector<CompiledGuard::Instr>& program, std::set<std::uint32_t>& used) {
    using Code = CompiledGuard::Code;
    switch (n.op) {
    case Guard::Op::Const:
        program.push_back({n.value ? Code::PushTrue : Code::PushFalse});
        return;
    case Guard::Op::Atom: {
        for (std::uint32_t i = 0; i < table.size(); ++i) {
            if (table[i] == n.name) {
                program.push_back({Code::PushAtom, i});
                used.insert(i);
                return;
            }
        }
        throw MissingAtomError(n.name);
    }
    case Guard::Op::Not:
        emit(*n.lhs, table, out, program, used);
        program.push_back({Code::Not});
        return;
    case Guard::Op::And:
    case Guard::Op::Or:
        emit(*n.lhs, table, out, program, used);
        emit(*n.rhs, table, out, program, used);
        program.push_back({n.op == Guard::Op::And ? Code::And : Code::Or});
        return;
    }
}

} // namespace

bool Guard::evaluate(const Valuation& valuation) const { return eval(*node_, valuation); }

std::set<std::string> Guard::atoms() const {
    std::set<std::string> out;
    collect(*node_, out);
    return out;
}

std::string Guard::to_string() const {
    std::string out;
    print(*node_, out);
    return out;
}

CompiledGuard Guard::compile(const std::vector<std::string>& atom_table) const {
    CompiledGuard compiled;
    std::set<std::uint32_t> used;
    emit(*node_, atom_table, compiled, compiled.program_, used);
    compiled.atoms_.assign(used.begin(), used.end());
    return compiled;
}

bool operator==(const Guard& a, const Guard& b) { return same(*a.node_, *b.node_); }

bool CompiledGuard::evaluate(const std::vector<bool>& atom_values) const {
    bool stack[64];
    std::vector<bool> spill;
    // Guards in practice are shallow; deep ones fall back to a heap stack.
    if (program_.size() > 64) {
        for (const auto& ins : program_) {
            switch (ins.code) {
            case Code::PushFalse: spill.push_back(false); break;
            case Code::PushTrue: spill.push_back(true); break;
            case Code::PushAtom: spill.push_back(atom_values[ins.atom]); break;
            case Code::Not: spill.back() = !spill.back(); break;
            case Code::And: { bool r = spill.back(); spill.pop_back(); spill.back() = spill.back() && r; break; }
            case Code::Or: { bool r = spill.back(); spill.pop_back(); spill.back() = spill.back() || r; break; }
            }
        }
        return spill.back();
    }
    std::size_t top = 0;
    for (const auto& ins : program_) {
        switch (ins.code) {
        case Code::PushFalse: stack[top++] = false; break;
        case Code::PushTrue: stack[top++] = true; break;
        case Code::PushAtom: stack[top++] = atom_values[ins.atom]; break;
        case Code::Not: stack[top - 1] = !stack[top - 1]; break;
        case Code::And: --top; stack[top - 1] = stack[top - 1] && stack[top]; break;
        case Code::Or: --top; stack[top - 1] = stack[top - 1] || stack[top]; break;
        }
    }
    return stack[0];
}

} // namespace hpn
