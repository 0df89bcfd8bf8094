#pragma once

// Scalar math expressions over the time variable t and state coordinates
// x1..x99. The trees are immutable after parsing; evaluation is reentrant
// and safe to share across threads.

#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ftslab {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// sign(x)*|x|^p. Total on the reals apart from x = 0 with p <= 0.
double signed_pow(double x, double p);

enum class NodeKind : std::uint8_t {
    Number,
    TimeVar,
    StateVar,
    Neg,
    Sin,
    Cos,
    Abs,
    Exp,
    Ln,
    Sqrt,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Spow,
};

struct ExprNode {
    NodeKind kind = NodeKind::Number;
    std::uint32_t pos = 0;  // source offset, carried into diagnostics
    double number = 0.0;    // Number
    int var_index = 0;      // StateVar: 1-based coordinate index
    std::unique_ptr<ExprNode> lhs;
    std::unique_ptr<ExprNode> rhs;
};

class Expression {
public:
    Expression() = default;

    /// Recursive-descent parse under the grammar in docs/expressions.md.
    /// Throws ParseError with the offending position.
    static Expression parse(std::string_view source);

    /// Throws EvalError on domain errors (ln of non-positive, sqrt of a
    /// negative, 0^negative, fractional pow of a negative base, division by
    /// zero) and whenever a node produces a non-finite value.
    double evaluate(double t, std::span<const double> x) const;
    double evaluate(double t) const { return evaluate(t, {}); }

    /// Exact set of variable names appearing in the tree ("t", "x1", ...).
    std::set<std::string> free_variables() const;
    bool uses_time() const;
    int max_state_index() const;  // 0 when no state coordinate appears
    bool is_time_only() const { return max_state_index() == 0; }

    /// Fully parenthesized form; reparsing yields an identically evaluating tree.
    std::string to_string() const;

    bool empty() const { return root_ == nullptr; }
    const ExprNode& root() const { return *root_; }

private:
    explicit Expression(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}
    std::shared_ptr<const ExprNode> root_;
};

} // namespace ftslab
