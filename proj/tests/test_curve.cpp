#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lojalab/curve.hpp"
#include "lojalab/random.hpp"

#include <cmath>

using namespace lojalab;

namespace {

Curve make_curve(const std::vector<std::string>& comps, double s_min = 1.0) {
    Curve c;
    c.s_min = s_min;
    for (const auto& t : comps) c.components.push_back(parse(t, {"s"}));
    return c;
}

} // namespace

TEST_CASE("eval_curve is componentwise evaluation") {
    const Curve c3 = make_curve({"1/s", "s", "s"});
    const Point p = eval_curve(c3, 10.0);
    CHECK(p[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(p[1] == 10.0);
    CHECK(p[2] == 10.0);

    const Curve c5 = make_curve({"sqrt(s^2 + 1)", "s"});
    const Point q = eval_curve(c5, 1.0);
    CHECK(q[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(q[1] == 1.0);

    const Curve cc = make_curve({"1", "1"});
    for (double s : {1.0, 7.0, 1e6}) {
        const Point r = eval_curve(cc, s);
        CHECK(r[0] == 1.0);
        CHECK(r[1] == 1.0);
    }
}

TEST_CASE("asymptotic_order recovers exact power laws to high accuracy") {
    std::vector<double> s, g;
    for (int k = 1; k <= 10; ++k) {
        s.push_back(std::pow(2.0, k));
        g.push_back(5.0 * s.back() * s.back());
    }
    const PowerLaw law = asymptotic_order(s, g);
    REQUIRE(law.ok);
    CHECK(std::abs(law.exponent - 2.0) <= 1e-9 * 2.0);
    CHECK(std::abs(law.coefficient - 5.0) <= 1e-9 * 5.0);
    CHECK(law.fit_residual <= 1e-12);

    // random exact laws
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const double nu = rng.uniform(-4.0, 4.0);
        const double c = std::exp(rng.uniform(-3.0, 3.0));
        std::vector<double> ss, gg;
        for (int k = 0; k < 12; ++k) {
            ss.push_back(3.0 * std::pow(2.5, k));
            gg.push_back(c * std::pow(ss.back(), nu));
        }
        const PowerLaw l = asymptotic_order(ss, gg);
        REQUIRE(l.ok);
        CHECK(std::abs(l.exponent - nu) <= 1e-9 * std::max(1.0, std::abs(nu)));
        CHECK(std::abs(l.coefficient - c) <= 1e-9 * c);
    }
}

TEST_CASE("asymptotic_order rejects bad inputs") {
    std::vector<double> s{1, 2, 4, 8, 16, 32, 64, 128};
    std::vector<double> g{1, 1, 1, 1, 1, 1, 1, 0.0};
    CHECK_THROWS_AS(asymptotic_order(s, g), std::invalid_argument); // nonpositive sample
    std::vector<double> s2{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> g2(7, 1.0);
    CHECK_THROWS_AS(asymptotic_order(s2, g2), std::invalid_argument); // too few
    std::vector<double> s3{1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7};
    std::vector<double> g3(8, 1.0);
    CHECK_THROWS_AS(asymptotic_order(s3, g3), std::invalid_argument); // span < 2
}

TEST_CASE("curve quantities reproduce the three-variable example rates") {
    const Expr f = parse("z*(x^4 + (x*y - 1)^2)", {"x", "y", "z"});
    const Curve c = make_curve({"1/s", "s", "s"});
    const auto grid = geometric_grid({10.0, 1e4, 25});
    const auto samples = sample_curve_quantities(f, c, 0.0, grid);

    const PowerLaw f_law = asymptotic_order(samples.s, samples.f_dev);
    REQUIRE(f_law.ok);
    CHECK(f_law.exponent == doctest::Approx(-3.0).epsilon(0.01));

    const PowerLaw prod_law = asymptotic_order(samples.s, samples.product);
    REQUIRE(prod_law.ok);
    CHECK(prod_law.exponent == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("witness accepts the three-variable example at t=0") {
    const Expr f = parse("z*(x^4 + (x*y - 1)^2)", {"x", "y", "z"});
    const Curve c = make_curve({"1/s", "s", "s"});
    const auto rep = kinf_witness_check(f, c, 0.0, WitnessVariant::K, 1e-2);
    CHECK(rep.norm_diverges);
    CHECK(rep.f_limit_reliable);
    CHECK(std::abs(rep.f_limit) <= 1e-2);
    CHECK(rep.accept);
}

TEST_CASE("witness accepts the broughton polynomial along 1/(2s), s") {
    // grad f = (2xy - 1, x^2); along the curve the product decays like 1/(4s)
    const Expr f = parse("x*(x*y - 1)", {"x", "y"});
    const Curve c = make_curve({"1/(2*s)", "s"});
    const auto grid = geometric_grid({10.0, 1e4, 25});
    const auto samples = sample_curve_quantities(f, c, 0.0, grid);
    for (std::size_t k = 0; k < samples.s.size(); ++k) {
        const double s = samples.s[k];
        const double expected = std::sqrt(s * s + 1.0 / (4 * s * s)) *
                                std::hypot(2 * (1.0 / (2 * s)) * s - 1.0, 1.0 / (4 * s * s));
        CHECK(samples.product[k] == doctest::Approx(expected).epsilon(1e-10));
    }
    const auto rep = kinf_witness_check(f, c, 0.0, WitnessVariant::K, 1e-2);
    CHECK(rep.accept);
    CHECK(rep.monitored_law.ok);
    CHECK(rep.monitored_law.exponent == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("witness rejects x/sqrt(y^2+1) along the diagonal at t=1") {
    // the product tends to 2, so no threshold below that accepts
    const Expr f = parse("x/sqrt(y^2 + 1)", {"x", "y"});
    const Curve c = make_curve({"s", "s"});
    const auto rep = kinf_witness_check(f, c, 1.0, WitnessVariant::K, 1e-2, {10.0, 1e6, 25});
    CHECK(rep.norm_diverges);
    CHECK(!rep.accept);
    CHECK(rep.monitored_last == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("witness acceptance is monotone in the threshold") {
    const Expr f = parse("x*(x*y - 1)", {"x", "y"});
    const Curve c = make_curve({"1/(2*s)", "s"});
    bool prev = false;
    for (double eps : {1e-6, 1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
        const auto rep = kinf_witness_check(f, c, 0.0, WitnessVariant::K, eps);
        if (prev) CHECK(rep.accept); // once accepted, larger eps must accept
        prev = rep.accept;
    }
    CHECK(prev);
}

TEST_CASE("K-acceptance implies gradient-variant acceptance on escaping curves") {
    const std::vector<std::pair<std::string, std::vector<std::string>>> curves = {
        {"z*(x^4 + (x*y - 1)^2)", {"1/s", "s", "s"}},
        {"x*(x*y - 1)", {"1/(2*s)", "s"}},
    };
    for (const auto& [ftext, comps] : curves) {
        const int n = static_cast<int>(comps.size());
        const Expr f = parse(ftext, n == 2 ? std::vector<std::string>{"x", "y"}
                                           : std::vector<std::string>{"x", "y", "z"});
        const Curve c = make_curve(comps);
        for (double eps : {1e-3, 1e-2, 0.1}) {
            const auto k_rep = kinf_witness_check(f, c, 0.0, WitnessVariant::K, eps);
            if (!k_rep.accept) continue;
            const auto kt_rep = kinf_witness_check(f, c, 0.0, WitnessVariant::Ktilde, eps);
            // ||X(s_max)|| >= 1 on these curves, so the gradient at the last
            // sample is already below eps
            CHECK(kt_rep.accept);
        }
    }
}

TEST_CASE("geometric grids are increasing and hit both endpoints") {
    const auto g = geometric_grid({10.0, 1e4, 25});
    REQUIRE(g.size() == 25);
    CHECK(g.front() == doctest::Approx(10.0));
    CHECK(g.back() == 1e4);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(g[i] < g[i + 1]);
}
