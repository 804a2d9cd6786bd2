#pragma once

#include <string>
#include <vector>

#include "lojalab/curve.hpp"
#include "lojalab/expr.hpp"

namespace lojalab {

struct CurveSpec {
    std::vector<std::string> components; // expressions in the variable s
    double s_min = 1.0;
};

struct ExampleEntry {
    std::string id;
    std::string expression;
    std::vector<std::string> vars;
    int arity = 0;
    std::string notes;
    std::vector<CurveSpec> curves; // curves[0] is the default witness curve
    std::vector<double> levels;    // levels[0] is the default level
};

const std::vector<ExampleEntry>& example_registry();
const ExampleEntry* find_example(const std::string& id); // nullptr when unknown

Expr example_expr(const ExampleEntry& e);
Curve make_curve(const CurveSpec& spec);

} // namespace lojalab
