#include "lojalab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace lojalab {
namespace detail {

enum class Kind : std::uint8_t { constant, variable, sum, product, int_pow, quotient, sqrt_fn };

struct Node {
    Kind kind;
    long long num = 0, den = 1; // constant value num/den, den > 0, reduced
    int var = -1;               // variable index
    int exponent = 0;           // int_pow, >= 0
    std::shared_ptr<const Node> a, b;
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

[[noreturn]] void overflow() { throw ExprError("rational constant overflow during construction"); }

long long checked(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) overflow();
    return static_cast<long long>(v);
}

struct Rational {
    long long num, den;
};

Rational reduce(__int128 n, __int128 d) {
    if (d == 0) throw ExprError("constant with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        n /= a;
        d /= a;
    }
    return {checked(n), checked(d)};
}

NodePtr make_const(long long num, long long den) {
    auto r = reduce(num, den);
    auto n = std::make_shared<Node>();
    n->kind = Kind::constant;
    n->num = r.num;
    n->den = r.den;
    return n;
}

bool is_const(const NodePtr& n) { return n->kind == Kind::constant; }
bool is_const(const NodePtr& n, long long num, long long den) {
    return n->kind == Kind::constant && n->num == num && n->den == den;
}

NodePtr make_sum(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b)) {
        auto r = reduce(static_cast<__int128>(a->num) * b->den + static_cast<__int128>(b->num) * a->den,
                        static_cast<__int128>(a->den) * b->den);
        return make_const(r.num, r.den);
    }
    if (is_const(a, 0, 1)) return b;
    if (is_const(b, 0, 1)) return a;
    auto n = std::make_shared<Node>();
    n->kind = Kind::sum;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_product(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b)) {
        auto r = reduce(static_cast<__int128>(a->num) * b->num, static_cast<__int128>(a->den) * b->den);
        return make_const(r.num, r.den);
    }
    if (is_const(a, 1, 1)) return b;
    if (is_const(b, 1, 1)) return a;
    auto n = std::make_shared<Node>();
    n->kind = Kind::product;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_quotient(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b) && b->num != 0) {
        auto r = reduce(static_cast<__int128>(a->num) * b->den, static_cast<__int128>(a->den) * b->num);
        return make_const(r.num, r.den);
    }
    if (is_const(b, 1, 1)) return a;
    auto n = std::make_shared<Node>();
    n->kind = Kind::quotient;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_int_pow(NodePtr base, int k) {
    if (k < 0) throw ExprError("integer power exponent must be nonnegative");
    if (k == 1) return base;
    if (is_const(base)) {
        if (k == 0) return make_const(1, 1);
        __int128 n = 1, d = 1;
        for (int i = 0; i < k; ++i) {
            n *= base->num;
            d *= base->den;
            if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) overflow();
        }
        auto r = reduce(n, d);
        return make_const(r.num, r.den);
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::int_pow;
    n->exponent = k;
    n->a = std::move(base);
    return n;
}

NodePtr make_sqrt(NodePtr arg) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::sqrt_fn;
    n->a = std::move(arg);
    return n;
}

template <typename S>
S eval_node(const Node* n, std::span<const S> x, EvalStatus& st) {
    switch (n->kind) {
    case Kind::constant:
        return static_cast<S>(n->num) / static_cast<S>(n->den);
    case Kind::variable:
        return x[static_cast<std::size_t>(n->var)];
    case Kind::sum:
        return eval_node(n->a.get(), x, st) + eval_node(n->b.get(), x, st);
    case Kind::product:
        return eval_node(n->a.get(), x, st) * eval_node(n->b.get(), x, st);
    case Kind::int_pow: {
        const S base = eval_node(n->a.get(), x, st);
        S r = S(1);
        for (int i = 0; i < n->exponent; ++i) r *= base;
        return r;
    }
    case Kind::quotient: {
        const S num = eval_node(n->a.get(), x, st);
        const S den = eval_node(n->b.get(), x, st);
        if (den == S(0)) {
            if (st == EvalStatus::ok) st = EvalStatus::division_by_zero;
            return std::numeric_limits<S>::quiet_NaN();
        }
        return num / den;
    }
    case Kind::sqrt_fn: {
        const S a = eval_node(n->a.get(), x, st);
        if (a < S(0)) {
            if (st == EvalStatus::ok) st = EvalStatus::sqrt_of_negative;
            return std::numeric_limits<S>::quiet_NaN();
        }
        return std::sqrt(a);
    }
    }
    return S(0);
}

bool contains_variable(const Node* n) {
    switch (n->kind) {
    case Kind::constant: return false;
    case Kind::variable: return true;
    case Kind::sqrt_fn: return contains_variable(n->a.get());
    case Kind::int_pow: return contains_variable(n->a.get());
    default: return contains_variable(n->a.get()) || contains_variable(n->b.get());
    }
}

std::optional<int> degree_node(const Node* n) {
    switch (n->kind) {
    case Kind::constant:
        return 0;
    case Kind::variable:
        return 1;
    case Kind::sum: {
        auto da = degree_node(n->a.get()), db = degree_node(n->b.get());
        if (!da || !db) return std::nullopt;
        return std::max(*da, *db);
    }
    case Kind::product: {
        auto da = degree_node(n->a.get()), db = degree_node(n->b.get());
        if (!da || !db) return std::nullopt;
        return *da + *db;
    }
    case Kind::int_pow: {
        auto da = degree_node(n->a.get());
        if (!da) return std::nullopt;
        const long long d = static_cast<long long>(*da) * n->exponent;
        if (d > 1000000) throw ExprError("polynomial degree too large");
        return static_cast<int>(d);
    }
    case Kind::quotient: {
        if (contains_variable(n->b.get())) return std::nullopt;
        return degree_node(n->a.get());
    }
    case Kind::sqrt_fn:
        if (contains_variable(n->a.get())) return std::nullopt;
        return 0;
    }
    return std::nullopt;
}

bool same_node(const Node* x, const Node* y) {
    if (x->kind != y->kind) return false;
    switch (x->kind) {
    case Kind::constant: return x->num == y->num && x->den == y->den;
    case Kind::variable: return x->var == y->var;
    case Kind::int_pow: return x->exponent == y->exponent && same_node(x->a.get(), y->a.get());
    case Kind::sqrt_fn: return same_node(x->a.get(), y->a.get());
    default: return same_node(x->a.get(), y->a.get()) && same_node(x->b.get(), y->b.get());
    }
}

std::size_t count_nodes(const Node* n) {
    switch (n->kind) {
    case Kind::constant:
    case Kind::variable: return 1;
    case Kind::int_pow:
    case Kind::sqrt_fn: return 1 + count_nodes(n->a.get());
    default: return 1 + count_nodes(n->a.get()) + count_nodes(n->b.get());
    }
}

// precedence levels for printing: sum < product/quotient < power < atom
int precedence(const Node* n) {
    switch (n->kind) {
    case Kind::sum: return 1;
    case Kind::product:
    case Kind::quotient: return 2;
    case Kind::int_pow: return 3;
    default:
        if (n->kind == Kind::constant && n->num < 0) return 1; // prints with a leading minus
        return 4;
    }
}

void print_node(const Node* n, const std::vector<std::string>& names, std::string& out);

void print_child(const Node* c, int parent_prec, const std::vector<std::string>& names, std::string& out) {
    if (precedence(c) < parent_prec) {
        out += '(';
        print_node(c, names, out);
        out += ')';
    } else {
        print_node(c, names, out);
    }
}

bool is_negation(const Node* n) {
    return n->kind == Kind::product && n->a->kind == Kind::constant && n->a->num == -1 && n->a->den == 1;
}

void print_node(const Node* n, const std::vector<std::string>& names, std::string& out) {
    switch (n->kind) {
    case Kind::constant:
        out += std::to_string(n->num);
        if (n->den != 1) {
            out += '/';
            out += std::to_string(n->den);
        }
        return;
    case Kind::variable:
        out += names[static_cast<std::size_t>(n->var)];
        return;
    case Kind::sum: {
        print_child(n->a.get(), 1, names, out);
        const Node* rhs = n->b.get();
        if (rhs->kind == Kind::constant && rhs->num < 0) {
            out += " - ";
            Node pos = *rhs;
            pos.num = -pos.num;
            print_node(&pos, names, out);
        } else if (is_negation(rhs)) {
            out += " - ";
            print_child(rhs->b.get(), 2, names, out);
        } else {
            out += " + ";
            print_child(rhs, 2, names, out);
        }
        return;
    }
    case Kind::product:
        if (is_negation(n)) {
            out += '-';
            print_child(n->b.get(), 3, names, out);
            return;
        }
        print_child(n->a.get(), 2, names, out);
        out += '*';
        print_child(n->b.get(), 3, names, out);
        return;
    case Kind::quotient:
        print_child(n->a.get(), 2, names, out);
        out += '/';
        print_child(n->b.get(), 3, names, out);
        return;
    case Kind::int_pow:
        print_child(n->a.get(), 4, names, out);
        out += '^';
        out += std::to_string(n->exponent);
        return;
    case Kind::sqrt_fn:
        out += "sqrt(";
        print_node(n->a.get(), names, out);
        out += ')';
        return;
    }
}

// derivative with zero/one elimination so gradient trees stay compact
NodePtr diff(const NodePtr& n, int var) {
    switch (n->kind) {
    case Kind::constant:
        return make_const(0, 1);
    case Kind::variable:
        return make_const(n->var == var ? 1 : 0, 1);
    case Kind::sum:
        return make_sum(diff(n->a, var), diff(n->b, var));
    case Kind::product: {
        NodePtr da = diff(n->a, var), db = diff(n->b, var);
        NodePtr left = is_const(da, 0, 1) ? da : make_product(da, n->b);
        NodePtr right = is_const(db, 0, 1) ? db : make_product(n->a, db);
        if (is_const(da, 0, 1)) return right;
        if (is_const(db, 0, 1)) return left;
        return make_sum(left, right);
    }
    case Kind::int_pow: {
        if (n->exponent == 0) return make_const(0, 1);
        NodePtr du = diff(n->a, var);
        if (is_const(du, 0, 1)) return du;
        NodePtr factor = make_product(make_const(n->exponent, 1), make_int_pow(n->a, n->exponent - 1));
        return make_product(factor, du);
    }
    case Kind::quotient: {
        // quotient rule, left unsimplified apart from vanishing terms
        NodePtr du = diff(n->a, var), dv = diff(n->b, var);
        NodePtr den = make_int_pow(n->b, 2);
        if (is_const(dv, 0, 1)) return make_quotient(make_product(du, n->b), den);
        NodePtr lhs = make_product(du, n->b);
        NodePtr rhs = make_product(make_const(-1, 1), make_product(n->a, dv));
        if (is_const(du, 0, 1)) return make_quotient(rhs, den);
        return make_quotient(make_sum(lhs, rhs), den);
    }
    case Kind::sqrt_fn: {
        NodePtr du = diff(n->a, var);
        if (is_const(du, 0, 1)) return du;
        return make_quotient(du, make_product(make_const(2, 1), make_sqrt(n->a)));
    }
    }
    return make_const(0, 1);
}

} // namespace
} // namespace detail

using detail::Kind;
using detail::Node;
using detail::NodePtr;

Expr::Expr(NodePtr n, int arity) : root_(std::move(n)), arity_(arity) {}

Expr Expr::constant(long long num, long long den) { return Expr(detail::make_const(num, den), 0); }

Expr Expr::variable(int index, int arity) {
    if (index < 0 || index >= arity) throw ExprError("variable index out of range for declared arity");
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->var = index;
    return Expr(std::move(n), arity);
}

namespace {
int joint_arity(const Expr& a, const Expr& b) { return std::max(a.arity(), b.arity()); }
}

Expr operator+(const Expr& a, const Expr& b) {
    return Expr(detail::make_sum(a.root_, b.root_), joint_arity(a, b));
}
Expr operator*(const Expr& a, const Expr& b) {
    return Expr(detail::make_product(a.root_, b.root_), joint_arity(a, b));
}
Expr operator/(const Expr& a, const Expr& b) {
    return Expr(detail::make_quotient(a.root_, b.root_), joint_arity(a, b));
}
Expr operator-(const Expr& a) {
    return Expr(detail::make_product(detail::make_const(-1, 1), a.root_), a.arity());
}
Expr operator-(const Expr& a, const Expr& b) {
    return Expr(detail::make_sum(a.root_, detail::make_product(detail::make_const(-1, 1), b.root_)),
                joint_arity(a, b));
}
Expr pow(const Expr& base, int exponent) {
    return Expr(detail::make_int_pow(base.root_, exponent), base.arity());
}
Expr sqrt(const Expr& arg) { return Expr(detail::make_sqrt(arg.root_), arg.arity()); }

EvalOutcome Expr::eval(std::span<const double> x) const {
    EvalOutcome out;
    out.value = detail::eval_node<double>(root_.get(), x, out.status);
    return out;
}

EvalOutcomeL Expr::eval_ld(std::span<const long double> x) const {
    EvalOutcomeL out;
    out.value = detail::eval_node<long double>(root_.get(), x, out.status);
    return out;
}

Expr Expr::derivative(int var) const { return Expr(detail::diff(root_, var), arity_); }

std::optional<int> Expr::degree() const { return detail::degree_node(root_.get()); }

std::string Expr::to_string(const std::vector<std::string>& var_names) const {
    std::vector<std::string> names = var_names;
    if (names.empty()) {
        names.reserve(static_cast<std::size_t>(arity_));
        for (int i = 0; i < arity_; ++i) names.push_back("x" + std::to_string(i + 1));
    }
    if (static_cast<int>(names.size()) < arity_)
        throw ExprError("not enough variable names for arity");
    std::string out;
    detail::print_node(root_.get(), names, out);
    return out;
}

bool Expr::same_structure(const Expr& other) const {
    return detail::same_node(root_.get(), other.root_.get());
}

Expr Expr::widened(int arity) const {
    if (arity < arity_) throw ExprError("cannot shrink expression arity");
    return Expr(root_, arity);
}

std::size_t Expr::num_nodes() const { return detail::count_nodes(root_.get()); }

Gradient grad(const Expr& f) {
    Gradient g;
    g.partials.reserve(static_cast<std::size_t>(f.arity()));
    for (int i = 0; i < f.arity(); ++i) g.partials.push_back(f.derivative(i));
    return g;
}

EvalStatus Gradient::eval(std::span<const double> x, std::span<double> out) const {
    EvalStatus st = EvalStatus::ok;
    for (std::size_t i = 0; i < partials.size(); ++i) {
        auto r = partials[i].eval(x);
        out[i] = r.value;
        if (st == EvalStatus::ok) st = r.status;
    }
    return st;
}

EvalStatus Gradient::eval_ld(std::span<const long double> x, std::span<long double> out) const {
    EvalStatus st = EvalStatus::ok;
    for (std::size_t i = 0; i < partials.size(); ++i) {
        auto r = partials[i].eval_ld(x);
        out[i] = r.value;
        if (st == EvalStatus::ok) st = r.status;
    }
    return st;
}

// ---------------------------------------------------------------------------
// parser

namespace {

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& names, bool indexed, int arity)
        : text_(text), names_(names), indexed_(indexed), arity_(arity) {}

    Expr run() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return e.widened(arity_);
    }

private:
    const std::string& text_;
    const std::vector<std::string>& names_;
    bool indexed_;
    int arity_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Expr parse_sum() {
        Expr e = parse_term();
        while (true) {
            const char c = peek();
            if (c == '+') {
                ++pos_;
                e = e + parse_term();
            } else if (c == '-') {
                ++pos_;
                e = e - parse_term();
            } else {
                return e;
            }
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        while (true) {
            const char c = peek();
            if (c == '*') {
                ++pos_;
                e = e * parse_unary();
            } else if (c == '/') {
                ++pos_;
                e = e / parse_unary();
            } else {
                return e;
            }
        }
    }

    Expr parse_unary() {
        if (eat('-')) return -parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (eat('^')) {
            skip_ws();
            const std::size_t at = pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                throw ParseError("exponent must be a nonnegative integer literal", at);
            long long k = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                k = k * 10 + (text_[pos_] - '0');
                if (k > 1000000) throw ParseError("exponent too large", at);
                ++pos_;
            }
            return pow(base, static_cast<int>(k));
        }
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        const std::size_t at = pos_;
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", at);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!eat(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            long long v = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                if (v > (INT64_MAX - 9) / 10) throw ParseError("integer literal too large", at);
                v = v * 10 + (text_[pos_] - '0');
                ++pos_;
            }
            return Expr::constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                id += text_[pos_];
                ++pos_;
            }
            if (id == "sqrt") {
                if (!eat('(')) throw ParseError("expected '(' after sqrt", pos_);
                Expr arg = parse_sum();
                if (!eat(')')) throw ParseError("expected ')'", pos_);
                return sqrt(arg);
            }
            return lookup(id, at);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", at);
    }

    Expr lookup(const std::string& id, std::size_t at) {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == id) return Expr::variable(static_cast<int>(i), arity_);
        if (indexed_ && id.size() >= 2 && id[0] == 'x') {
            bool all_digits = true;
            for (std::size_t i = 1; i < id.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(id[i]))) all_digits = false;
            if (all_digits)
                throw ParseError("variable index in '" + id + "' exceeds declared arity " +
                                     std::to_string(arity_),
                                 at);
        }
        throw ParseError("unknown identifier '" + id + "'", at);
    }
};

} // namespace

Expr parse(const std::string& text, const std::vector<std::string>& var_names) {
    for (const auto& n : var_names)
        if (n == "sqrt") throw ExprError("'sqrt' cannot be used as a variable name");
    Parser p(text, var_names, false, static_cast<int>(var_names.size()));
    return p.run();
}

Expr parse(const std::string& text, int arity) {
    if (arity < 1) throw ExprError("arity must be positive");
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(arity));
    for (int i = 0; i < arity; ++i) names.push_back("x" + std::to_string(i + 1));
    Parser p(text, names, true, arity);
    return p.run();
}

// ---------------------------------------------------------------------------
// compiled form

CompiledExpr::CompiledExpr(const Expr& e) : arity_(e.arity()) {
    // postorder flatten; evaluation order matches the recursive walk exactly
    int depth = 0, max_depth = 0;
    auto emit = [&](const Node* n, auto&& self) -> void {
        switch (n->kind) {
        case Kind::constant:
            ops_.push_back({OpCode::push_const, 0,
                            static_cast<double>(n->num) / static_cast<double>(n->den)});
            ++depth;
            break;
        case Kind::variable:
            ops_.push_back({OpCode::push_var, n->var, 0.0});
            ++depth;
            break;
        case Kind::sum:
            self(n->a.get(), self);
            self(n->b.get(), self);
            ops_.push_back({OpCode::add, 0, 0.0});
            --depth;
            break;
        case Kind::product:
            self(n->a.get(), self);
            self(n->b.get(), self);
            ops_.push_back({OpCode::mul, 0, 0.0});
            --depth;
            break;
        case Kind::int_pow:
            self(n->a.get(), self);
            ops_.push_back({OpCode::int_pow, n->exponent, 0.0});
            break;
        case Kind::quotient:
            self(n->a.get(), self);
            self(n->b.get(), self);
            ops_.push_back({OpCode::divide, 0, 0.0});
            --depth;
            break;
        case Kind::sqrt_fn:
            self(n->a.get(), self);
            ops_.push_back({OpCode::sqrt_op, 0, 0.0});
            break;
        }
        max_depth = std::max(max_depth, depth);
    };
    emit(e.root(), emit);
    max_depth_ = max_depth;
    if (max_depth_ > 200) throw ExprError("expression too deep to compile");
}

EvalOutcome CompiledExpr::eval(std::span<const double> x) const {
    double st[200];
    int top = -1;
    EvalStatus status = EvalStatus::ok;
    for (const Op& op : ops_) {
        switch (op.code) {
        case OpCode::push_const:
            st[++top] = op.c;
            break;
        case OpCode::push_var:
            st[++top] = x[static_cast<std::size_t>(op.arg)];
            break;
        case OpCode::add:
            st[top - 1] = st[top - 1] + st[top];
            --top;
            break;
        case OpCode::mul:
            st[top - 1] = st[top - 1] * st[top];
            --top;
            break;
        case OpCode::int_pow: {
            const double base = st[top];
            double r = 1.0;
            for (int i = 0; i < op.arg; ++i) r *= base;
            st[top] = r;
            break;
        }
        case OpCode::divide:
            if (st[top] == 0.0) {
                if (status == EvalStatus::ok) status = EvalStatus::division_by_zero;
                st[top - 1] = std::numeric_limits<double>::quiet_NaN();
            } else {
                st[top - 1] = st[top - 1] / st[top];
            }
            --top;
            break;
        case OpCode::sqrt_op:
            if (st[top] < 0.0) {
                if (status == EvalStatus::ok) status = EvalStatus::sqrt_of_negative;
                st[top] = std::numeric_limits<double>::quiet_NaN();
            } else {
                st[top] = std::sqrt(st[top]);
            }
            break;
        }
    }
    return {top >= 0 ? st[top] : 0.0, status};
}

} // namespace lojalab
