#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hpn/error.hpp"

namespace hpn {

/// Truth assignment for guard atoms.
using Valuation = std::map<std::string, bool, std::less<>>;

class GuardSyntaxError : public Error {
public:
    GuardSyntaxError(std::string message, std::size_t column)
        : Error(std::move(message)), column_(column) {}

    /// Zero-based offset into the parsed expression.
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// Guard compiled against a fixed atom table; evaluated as a postfix program.
class CompiledGuard {
public:
    enum class Code : std::uint8_t { PushFalse, PushTrue, PushAtom, Not, And, Or };

    struct Instr {
        Code code;
        std::uint32_t atom = 0;
    };

    bool evaluate(const std::vector<bool>& atom_values) const;
    bool always_true() const noexcept { return program_.size() == 1 && program_[0].code == Code::PushTrue; }
    /// Indices into the atom table that this guard reads.
    const std::vector<std::uint32_t>& atoms() const noexcept { return atoms_; }

private:
    friend class Guard;
    std::vector<Instr> program_;
    std::vector<std::uint32_t> atoms_;
};

/// Boolean formula over named atoms attached to a transition.
///
/// Immutable value; copies share the expression tree.
class Guard {
public:
    enum class Op : std::uint8_t { Const, Atom, Not, And, Or };

    /// The constant True guard.
    Guard();

    static Guard constant(bool value);
    static Guard atom(std::string name);
    static Guard negate(Guard operand);
    static Guard conjunction(Guard lhs, Guard rhs);
    static Guard disjunction(Guard lhs, Guard rhs);

    /// Parses `&&`, `||`, `!`, parentheses, atoms and the constants True/False.
    static Guard parse(std::string_view text);

    Op op() const noexcept;
    bool is_constant_true() const noexcept;

    /// Throws MissingAtomError when an atom is unassigned.
    bool evaluate(const Valuation& valuation) const;

    std::set<std::string> atoms() const;

    /// Canonical text form; parse(to_string()) reproduces the same tree.
    std::string to_string() const;

    CompiledGuard compile(const std::vector<std::string>& atom_table) const;

    friend bool operator==(const Guard& a, const Guard& b);

    /// Expression node; defined in the implementation file.
    struct Node;

private:
    explicit Guard(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

} // namespace hpn
