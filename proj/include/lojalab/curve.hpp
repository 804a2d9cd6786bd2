#pragma once

#include <span>
#include <vector>

#include "lojalab/expr.hpp"

namespace lojalab {

// Parameterized curve s -> X(s) in R^n, each component a univariate
// expression in s, defined for all s >= s_min.
struct Curve {
    std::vector<Expr> components;
    double s_min = 1.0;
    int arity() const { return static_cast<int>(components.size()); }
};

Point eval_curve(const Curve& c, double s); // throws std::domain_error on bad evaluation

// Power-law fit g(s) ~ c * s^nu from log-log least squares over the upper
// half of a geometric grid. fit_residual is the max absolute log-log
// residual over that window. ok=false marks a degenerate fit (nonpositive
// data in the window); coefficient is nonzero whenever ok.
struct PowerLaw {
    double exponent = 0.0;
    double coefficient = 0.0;
    double fit_residual = 0.0;
    bool ok = false;
};

// pre: >= 8 samples, strictly positive values, strictly increasing grid with
// overall span s_back/s_front >= 2
PowerLaw asymptotic_order(std::span<const double> s, std::span<const double> g);

// unchecked variant used internally where the caller controls the window
PowerLaw fit_loglog(std::span<const double> s, std::span<const double> g);

struct GridSpec {
    double s_min = 10.0;
    double s_max = 1e4;
    int points = 25;
};

std::vector<double> geometric_grid(const GridSpec& spec);

// Everything the asymptotic checks consume, sampled in one pass along a
// curve. Internally computed in extended precision so that cancellation in
// expressions like x*y - 1 does not contaminate the far-field samples.
struct CurveSamples {
    std::vector<double> s;
    std::vector<double> norm;      // ||X(s)||
    std::vector<double> f_value;   // f(X(s))
    std::vector<double> f_dev;     // |f(X(s)) - t|
    std::vector<double> grad_norm; // ||grad f(X(s))||
    std::vector<double> product;   // ||X(s)|| * ||grad f(X(s))||
};

CurveSamples sample_curve_quantities(const Expr& f, const Curve& c, double t,
                                     std::span<const double> grid);

enum class WitnessVariant { K, Ktilde };

// Checks the three defining conditions for t being an asymptotic critical
// value along the curve: the norm diverges, f tends to t, and the monitored
// quantity (||x||*||grad f|| for K, ||grad f|| for the K-tilde variant)
// decays below eps. The limit of f is taken at the largest sample and only
// trusted when the last two samples differ by less than eps/10.
struct WitnessReport {
    bool norm_diverges = false;
    double f_limit = 0.0;
    bool f_limit_reliable = false;
    PowerLaw monitored_law;
    double monitored_last = 0.0;
    PowerLaw norm_law;
    bool accept = false;
    double epsilon = 0.0;
    WitnessVariant variant = WitnessVariant::K;
};

WitnessReport kinf_witness_check(const Expr& f, const Curve& c, double t, WitnessVariant variant,
                                 double eps, const GridSpec& grid = {});

} // namespace lojalab
