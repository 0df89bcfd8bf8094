#include "ftslab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <utility>

namespace ftslab {

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
      position_(position) {}

double signed_pow(double x, double p) {
    if (x == 0.0) {
        if (p > 0.0) return 0.0;
        throw EvalError("spow: zero base with non-positive exponent");
    }
    const double m = std::pow(std::abs(x), p);
    return x < 0.0 ? -m : m;
}

namespace {

using NodePtr = std::unique_ptr<ExprNode>;

NodePtr make_node(NodeKind kind, std::uint32_t pos, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto n = std::make_unique<ExprNode>();
    n->kind = kind;
    n->pos = pos;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

struct FunctionInfo {
    NodeKind kind;
    int arity;
};

const std::map<std::string, FunctionInfo, std::less<>>& function_table() {
    static const std::map<std::string, FunctionInfo, std::less<>> table = {
        {"neg", {NodeKind::Neg, 1}},   {"sin", {NodeKind::Sin, 1}},
        {"cos", {NodeKind::Cos, 1}},   {"abs", {NodeKind::Abs, 1}},
        {"exp", {NodeKind::Exp, 1}},   {"ln", {NodeKind::Ln, 1}},
        {"sqrt", {NodeKind::Sqrt, 1}}, {"pow", {NodeKind::Pow, 2}},
        {"spow", {NodeKind::Spow, 2}},
    };
    return table;
}

// expression := term (('+'|'-') term)*
// term       := factor (('*'|'/') factor)*
// factor     := '-' factor | power
// power      := primary ('^' factor)?        right-associative
// primary    := NUMBER | IDENT | IDENT '(' expression {',' expression} ')'
//             | '(' expression ')'
//
// A leading '-' binds looser than '^' (so -2^2 = -(2^2)) while the exponent
// position re-admits unary minus (so 2^-3 parses).
class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr run() {
        skip_ws();
        if (at_end()) throw ParseError("empty expression", 0);
        NodePtr e = expression();
        skip_ws();
        if (!at_end()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return at_end() ? '\0' : src_[pos_]; }
    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        skip_ws();
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!consume(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos_);
    }

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            skip_ws();
            const std::size_t at = pos_;
            if (consume('+')) {
                lhs = make_node(NodeKind::Add, static_cast<std::uint32_t>(at), std::move(lhs), term());
            } else if (consume('-')) {
                lhs = make_node(NodeKind::Sub, static_cast<std::uint32_t>(at), std::move(lhs), term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            skip_ws();
            const std::size_t at = pos_;
            if (consume('*')) {
                lhs = make_node(NodeKind::Mul, static_cast<std::uint32_t>(at), std::move(lhs), factor());
            } else if (consume('/')) {
                lhs = make_node(NodeKind::Div, static_cast<std::uint32_t>(at), std::move(lhs), factor());
            } else {
                return lhs;
            }
        }
    }

    NodePtr factor() {
        skip_ws();
        const std::size_t at = pos_;
        if (consume('-')) return make_node(NodeKind::Neg, static_cast<std::uint32_t>(at), factor());
        if (consume('+')) return factor();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        skip_ws();
        const std::size_t at = pos_;
        if (consume('^')) {
            return make_node(NodeKind::Pow, static_cast<std::uint32_t>(at), std::move(base), factor());
        }
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (at_end()) throw ParseError("unexpected end of input", pos_);
        const std::size_t at = pos_;
        const char c = peek();
        if (c == '(') {
            ++pos_;
            NodePtr e = expression();
            expect(')', "to close parenthesized expression");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(at);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier(at);
        throw ParseError(std::string("unexpected character '") + c + "'", at);
    }

    NodePtr number(std::size_t at) {
        std::size_t end = pos_;
        while (end < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.'))
            ++end;
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
            if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                ++e;
                while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
                end = e;
            }
        }
        const std::string text(src_.substr(pos_, end - pos_));
        char* stop = nullptr;
        const double value = std::strtod(text.c_str(), &stop);
        if (stop == text.c_str() || *stop != '\0')
            throw ParseError("malformed numeric literal '" + text + "'", at);
        pos_ = end;
        auto n = make_node(NodeKind::Number, static_cast<std::uint32_t>(at));
        n->number = value;
        return n;
    }

    NodePtr identifier(std::size_t at) {
        std::size_t end = pos_;
        while (end < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
            ++end;
        const std::string_view name = src_.substr(pos_, end - pos_);
        pos_ = end;
        skip_ws();

        if (peek() == '(') {
            const auto& table = function_table();
            const auto it = table.find(name);
            if (it == table.end())
                throw ParseError("unknown function '" + std::string(name) + "'", at);
            ++pos_;
            NodePtr a = expression();
            NodePtr b;
            int got = 1;
            if (consume(',')) {
                b = expression();
                got = 2;
            }
            expect(')', "to close argument list");
            if (got != it->second.arity)
                throw ParseError("function '" + std::string(name) + "' expects " +
                                     std::to_string(it->second.arity) + " argument(s), got " +
                                     std::to_string(got),
                                 at);
            return make_node(it->second.kind, static_cast<std::uint32_t>(at), std::move(a), std::move(b));
        }

        if (name == "t") return make_node(NodeKind::TimeVar, static_cast<std::uint32_t>(at));
        if (name.size() >= 2 && name[0] == 'x') {
            int index = 0;
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
                    digits = false;
                    break;
                }
                index = index * 10 + (name[i] - '0');
            }
            if (digits && index >= 1 && index <= 99) {
                auto n = make_node(NodeKind::StateVar, static_cast<std::uint32_t>(at));
                n->var_index = index;
                return n;
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", at);
    }
};

bool is_integral(double v) {
    return std::isfinite(v) && v == std::nearbyint(v) && std::abs(v) < 9.007199254740992e15;
}

[[noreturn]] void domain_error(const std::string& what, std::uint32_t pos) {
    throw EvalError(what + " (expression position " + std::to_string(pos) + ")");
}

double eval_node(const ExprNode& n, double t, std::span<const double> x) {
    double out;
    switch (n.kind) {
        case NodeKind::Number:
            return n.number;
        case NodeKind::TimeVar:
            return t;
        case NodeKind::StateVar:
            if (n.var_index > static_cast<int>(x.size()))
                domain_error("state variable x" + std::to_string(n.var_index) +
                                 " out of range for dimension " + std::to_string(x.size()),
                             n.pos);
            return x[static_cast<std::size_t>(n.var_index - 1)];
        case NodeKind::Neg:
            return -eval_node(*n.lhs, t, x);
        case NodeKind::Sin:
            out = std::sin(eval_node(*n.lhs, t, x));
            break;
        case NodeKind::Cos:
            out = std::cos(eval_node(*n.lhs, t, x));
            break;
        case NodeKind::Abs:
            return std::abs(eval_node(*n.lhs, t, x));
        case NodeKind::Exp:
            out = std::exp(eval_node(*n.lhs, t, x));
            break;
        case NodeKind::Ln: {
            const double v = eval_node(*n.lhs, t, x);
            if (v <= 0.0) domain_error("ln of non-positive value", n.pos);
            out = std::log(v);
            break;
        }
        case NodeKind::Sqrt: {
            const double v = eval_node(*n.lhs, t, x);
            if (v < 0.0) domain_error("sqrt of negative value", n.pos);
            out = std::sqrt(v);
            break;
        }
        case NodeKind::Add:
            out = eval_node(*n.lhs, t, x) + eval_node(*n.rhs, t, x);
            break;
        case NodeKind::Sub:
            out = eval_node(*n.lhs, t, x) - eval_node(*n.rhs, t, x);
            break;
        case NodeKind::Mul:
            out = eval_node(*n.lhs, t, x) * eval_node(*n.rhs, t, x);
            break;
        case NodeKind::Div: {
            const double b = eval_node(*n.rhs, t, x);
            if (b == 0.0) domain_error("division by zero", n.pos);
            out = eval_node(*n.lhs, t, x) / b;
            break;
        }
        case NodeKind::Pow: {
            const double b = eval_node(*n.lhs, t, x);
            const double e = eval_node(*n.rhs, t, x);
            if (b < 0.0 && !is_integral(e))
                domain_error("pow of negative base with non-integral exponent (use spow)", n.pos);
            if (b == 0.0 && e < 0.0) domain_error("zero base with negative exponent", n.pos);
            out = std::pow(b, e);
            break;
        }
        case NodeKind::Spow: {
            const double b = eval_node(*n.lhs, t, x);
            const double e = eval_node(*n.rhs, t, x);
            if (b == 0.0 && e <= 0.0) domain_error("spow: zero base with non-positive exponent", n.pos);
            out = signed_pow(b, e);
            break;
        }
        default:
            throw EvalError("corrupt expression node");
    }
    if (!std::isfinite(out)) domain_error("non-finite value produced", n.pos);
    return out;
}

void collect_variables(const ExprNode& n, std::set<std::string>& vars) {
    if (n.kind == NodeKind::TimeVar) vars.insert("t");
    if (n.kind == NodeKind::StateVar) vars.insert("x" + std::to_string(n.var_index));
    if (n.lhs) collect_variables(*n.lhs, vars);
    if (n.rhs) collect_variables(*n.rhs, vars);
}

int max_index(const ExprNode& n) {
    int m = n.kind == NodeKind::StateVar ? n.var_index : 0;
    if (n.lhs) m = std::max(m, max_index(*n.lhs));
    if (n.rhs) m = std::max(m, max_index(*n.rhs));
    return m;
}

bool has_time(const ExprNode& n) {
    if (n.kind == NodeKind::TimeVar) return true;
    return (n.lhs && has_time(*n.lhs)) || (n.rhs && has_time(*n.rhs));
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void print_node(const ExprNode& n, std::string& out) {
    auto unary = [&](const char* name) {
        out += name;
        out += '(';
        print_node(*n.lhs, out);
        out += ')';
    };
    auto binary = [&](char op) {
        out += '(';
        print_node(*n.lhs, out);
        out += op;
        print_node(*n.rhs, out);
        out += ')';
    };
    switch (n.kind) {
        case NodeKind::Number: out += format_number(n.number); break;
        case NodeKind::TimeVar: out += 't'; break;
        case NodeKind::StateVar: out += 'x' + std::to_string(n.var_index); break;
        case NodeKind::Neg:
            out += "(-";
            print_node(*n.lhs, out);
            out += ')';
            break;
        case NodeKind::Sin: unary("sin"); break;
        case NodeKind::Cos: unary("cos"); break;
        case NodeKind::Abs: unary("abs"); break;
        case NodeKind::Exp: unary("exp"); break;
        case NodeKind::Ln: unary("ln"); break;
        case NodeKind::Sqrt: unary("sqrt"); break;
        case NodeKind::Add: binary('+'); break;
        case NodeKind::Sub: binary('-'); break;
        case NodeKind::Mul: binary('*'); break;
        case NodeKind::Div: binary('/'); break;
        case NodeKind::Pow: binary('^'); break;
        case NodeKind::Spow:
            out += "spow(";
            print_node(*n.lhs, out);
            out += ", ";
            print_node(*n.rhs, out);
            out += ')';
            break;
    }
}

} // namespace

Expression Expression::parse(std::string_view source) {
    Parser parser(source);
    return Expression(std::shared_ptr<const ExprNode>(parser.run().release()));
}

double Expression::evaluate(double t, std::span<const double> x) const {
    if (!root_) throw EvalError("empty expression");
    return eval_node(*root_, t, x);
}

std::set<std::string> Expression::free_variables() const {
    std::set<std::string> vars;
    if (root_) collect_variables(*root_, vars);
    return vars;
}

bool Expression::uses_time() const { return root_ && has_time(*root_); }

int Expression::max_state_index() const { return root_ ? max_index(*root_) : 0; }

std::string Expression::to_string() const {
    if (!root_) return {};
    std::string out;
    out.reserve(64);
    print_node(*root_, out);
    return out;
}

} // namespace ftslab
