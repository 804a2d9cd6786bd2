#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lojalab/vecmath.hpp"

namespace lojalab {

enum class EvalStatus : std::uint8_t { ok, sqrt_of_negative, division_by_zero };

struct EvalOutcome {
    double value = 0.0;
    EvalStatus status = EvalStatus::ok;
    bool ok() const { return status == EvalStatus::ok; }
};

struct EvalOutcomeL {
    long double value = 0.0L;
    EvalStatus status = EvalStatus::ok;
    bool ok() const { return status == EvalStatus::ok; }
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t at)
        : std::runtime_error(msg + " (at byte " + std::to_string(at) + ")"), offset(at) {}
    std::size_t offset;
};

struct ExprError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

// Immutable expression tree over n real variables: rational constants,
// variables, sums, products, nonnegative integer powers, quotients and square
// roots. Construction folds constant subtrees exactly (int64 rationals) and
// drops exact neutral elements (x+0, x*1, x/1, x^1); nothing else is
// simplified. Trees are shared and never mutated, so evaluation and
// differentiation are safe under unrestricted concurrent use.
class Expr {
public:
    Expr() = default; // empty handle; only assignment is valid afterwards

    static Expr constant(long long num, long long den = 1);
    static Expr variable(int index, int arity);

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& base, int exponent);
    friend Expr sqrt(const Expr& arg);

    int arity() const { return arity_; }
    bool valid() const { return root_ != nullptr; }

    EvalOutcome eval(std::span<const double> x) const;
    EvalOutcomeL eval_ld(std::span<const long double> x) const;

    // partial derivative w.r.t. one variable, by recursive rules
    Expr derivative(int var) const;

    // total degree if the tree is polynomial (no variable under sqrt, none in
    // a quotient's denominator); nullopt otherwise
    std::optional<int> degree() const;

    // round-trip text form; names default to x1..xn
    std::string to_string(const std::vector<std::string>& var_names = {}) const;

    bool same_structure(const Expr& other) const;
    std::size_t num_nodes() const;

    // same tree viewed over a larger variable space
    Expr widened(int arity) const;

    const detail::Node* root() const { return root_.get(); }

private:
    Expr(std::shared_ptr<const detail::Node> n, int arity);
    std::shared_ptr<const detail::Node> root_;
    int arity_ = 0;
};

// Symbolic gradient: one partial per variable, each with the source arity.
struct Gradient {
    std::vector<Expr> partials;
    int arity() const { return static_cast<int>(partials.size()); }
    // evaluates all partials; status is the first non-ok encountered
    EvalStatus eval(std::span<const double> x, std::span<double> out) const;
    EvalStatus eval_ld(std::span<const long double> x, std::span<long double> out) const;
};

Gradient grad(const Expr& f);

// parse with explicit variable names, declared in order
Expr parse(const std::string& text, const std::vector<std::string>& var_names);
// parse with default names x1..xn; an index above the arity is an error
Expr parse(const std::string& text, int arity);

// Flat postorder program for hot loops (grid scans, sampling). Evaluates the
// exact same operation sequence as Expr::eval, so results are bit-identical.
class CompiledExpr {
public:
    explicit CompiledExpr(const Expr& e);
    EvalOutcome eval(std::span<const double> x) const;
    int arity() const { return arity_; }

private:
    enum class OpCode : std::uint8_t { push_const, push_var, add, mul, int_pow, divide, sqrt_op };
    struct Op {
        OpCode code;
        int arg = 0;
        double c = 0.0;
    };
    std::vector<Op> ops_;
    int arity_ = 0;
    int max_depth_ = 0;
};

} // namespace lojalab
