#include "lojalab/registry.hpp"

namespace lojalab {

const std::vector<ExampleEntry>& example_registry() {
    static const std::vector<ExampleEntry> entries = {
        {"e1",
         "x/(y^2 + 1)",
         {"x", "y"},
         2,
         "every level defeats the classical inequality along an escaping curve while the "
         "mixed form grows; gradient-variant sweeps accept arbitrary levels",
         {{{"(1 - 1/s)*(s^2 + 1)", "s"}, 2.0}},
         {1.0, 0.0, -1.0}},
        {"broughton",
         "x*(x*y - 1)",
         {"x", "y"},
         2,
         "level 0 is an asymptotic critical value, yet the mixed inequality with "
         "exponent 1/18 still admits a positive constant",
         {{{"1/(2*s)", "s"}, 1.0}},
         {0.0}},
        {"e3",
         "z*(x^4 + (x*y - 1)^2)",
         {"x", "y", "z"},
         3,
         "level 0 is an asymptotic critical value and the mixed inequality fails along "
         "the escaping curve for every exponent choice",
         {{{"1/s", "s", "s"}, 1.0}},
         {0.0}},
        {"sqrtslope",
         "x/sqrt(y^2 + 1)",
         {"x", "y"},
         2,
         "no asymptotic critical values at all; putting an exponent below 1 on the norm "
         "factor breaks the mixed inequality at level 2",
         {{{"sqrt(s^2 + 1)", "s"}, 1.0}},
         {2.0}},
        {"linear",
         "x",
         {"x", "y"},
         2,
         "calibration case: the distance to the level set is exactly the first coordinate gap",
         {},
         {0.0}},
        {"posdef",
         "x^2 + y^2 + 1",
         {"x", "y"},
         2,
         "empty fiber at level 0; exercises the distance-one convention for empty level sets",
         {},
         {0.0}},
        {"emptyinf",
         "(x*y - 1)^2 + x^2",
         {"x", "y"},
         2,
         "empty fiber whose values still vanish at infinity, so level 0 is an asymptotic "
         "critical value detected through squared-value sweeps",
         {{{"s/(s^2 + 1)", "s"}, 1.0}},
         {0.0}},
    };
    return entries;
}

const ExampleEntry* find_example(const std::string& id) {
    for (const auto& e : example_registry())
        if (e.id == id) return &e;
    return nullptr;
}

Expr example_expr(const ExampleEntry& e) { return parse(e.expression, e.vars); }

Curve make_curve(const CurveSpec& spec) {
    Curve c;
    c.s_min = spec.s_min;
    for (const auto& comp : spec.components) c.components.push_back(parse(comp, {"s"}));
    return c;
}

} // namespace lojalab
