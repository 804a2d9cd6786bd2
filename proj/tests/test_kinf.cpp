#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lojalab/kinf.hpp"
#include "lojalab/random.hpp"
#include "lojalab/vecmath.hpp"

#include <cmath>

using namespace lojalab;

TEST_CASE("sweep on the three-variable example: product collapses toward level 0") {
    const Expr f = parse("z*(x^4 + (x*y - 1)^2)", {"x", "y", "z"});
    const auto records = sweep_min_product(f, 0.0, default_radii(), std::nullopt, SweepVariant::product);
    REQUIRE(records.size() == 10);
    for (const auto& r : records) {
        CHECK(std::abs(vec::norm(r.minimizer) - r.radius) <= 1e-6 * r.radius);
        CHECK(r.objective >= 0.0);
        CHECK(r.alignment_residual >= 0.0);
        CHECK(r.alignment_residual <= 1.0);
    }
    // The sphere minimum sits on {z = 0, x*y = 1} where the product decays
    // like R^-3, faster than the 1/R rate along the escaping curve
    // (1/s, s, s). Fit the decay before the double-precision floor (~1e-8).
    std::vector<double> rs, os;
    for (const auto& r : records)
        if (r.converged && r.objective > 1e-6) {
            rs.push_back(r.radius);
            os.push_back(r.objective);
        }
    REQUIRE(rs.size() >= 4);
    const PowerLaw law = fit_loglog(rs, os);
    REQUIRE(law.ok);
    CHECK(law.exponent <= -0.9);
    CHECK(std::abs(records.back().f_value) < 1e-6);

    const auto set = detect_asymptotic_values(records, 0.05);
    REQUIRE(set.candidates.size() == 1);
    CHECK(std::abs(set.candidates[0].value) <= 0.05);
    CHECK(set.candidates[0].decay_law.exponent < -0.05);

    const auto cert = malgrange_certificate(f, 0.0, records, 0.5);
    CHECK(!cert.valid);
}

TEST_CASE("sweep on x/sqrt(y^2+1): no decay, empty candidates, valid certificate") {
    const Expr f = parse("x/sqrt(y^2 + 1)", {"x", "y"});
    const auto records =
        sweep_min_product(f, 0.0, default_radii(), 0.5, SweepVariant::product);
    REQUIRE(records.size() == 10);
    for (const auto& r : records) {
        REQUIRE(r.converged);
        // the sphere minimum sits at x = 0 where the product is R/sqrt(1+R^2)
        const double expected = r.radius / std::sqrt(1.0 + r.radius * r.radius);
        CHECK(r.objective == doctest::Approx(expected).epsilon(1e-6));
    }
    const auto set = detect_asymptotic_values(records, 0.05);
    CHECK(set.candidates.empty());

    const auto cert = malgrange_certificate(f, 0.0, records, 0.5);
    REQUIRE(cert.valid);
    CHECK(cert.c0 >= 0.25);

    // soundness sampling: every point in the certified region obeys the bound
    const Gradient g = grad(f);
    Rng rng(314);
    int found = 0;
    std::vector<double> gv(2);
    while (found < 10000) {
        const auto dir = rng.unit_vector(2);
        const double radius = cert.radius * std::exp(rng.uniform(0.0, std::log(10.0)));
        const Point x = vec::scaled(dir, radius);
        const auto fv = f.eval(x);
        if (!fv.ok() || std::abs(fv.value - 0.0) > cert.delta) continue;
        ++found;
        REQUIRE(g.eval(x, gv) == EvalStatus::ok);
        CHECK(vec::norm(x) * vec::norm(gv) >= cert.c0);
    }
}

TEST_CASE("sweep on a linear function: product grows, certificate valid") {
    const Expr f = parse("x1", 3);
    const auto records = sweep_min_product(f, 0.0, default_radii(), 0.5, SweepVariant::product);
    for (const auto& r : records) CHECK(r.objective == doctest::Approx(r.radius).epsilon(1e-9));
    const auto set = detect_asymptotic_values(records, 0.05);
    CHECK(set.candidates.empty());
    const auto cert = malgrange_certificate(f, 0.0, records, 0.5);
    REQUIRE(cert.valid);
    CHECK(cert.c0 >= 0.5 * records.front().radius);
}

TEST_CASE("fsq sweep on (xy-1)^2 + x^2 exercises the empty-fiber branch") {
    const Expr f = parse("(x*y - 1)^2 + x^2", {"x", "y"});
    const auto records = sweep_min_product(f, 0.0, default_radii(), std::nullopt, SweepVariant::fsq);
    std::vector<double> rs, os, prods;
    const Gradient g = grad(f);
    std::vector<double> gv(2);
    for (const auto& r : records) {
        if (!r.converged) continue;
        rs.push_back(r.radius);
        // exact sphere minimum of f is 1/(R^2+1)
        const double exact = 1.0 / (r.radius * r.radius + 1.0);
        CHECK(r.objective == doctest::Approx(exact * exact).epsilon(1e-6));
        os.push_back(r.objective);
        REQUIRE(g.eval(r.minimizer, gv) == EvalStatus::ok);
        prods.push_back(vec::norm(r.minimizer) * vec::norm(gv));
        // Lagrange alignment: gradient is radial at sphere-critical points
        if (vec::norm(gv) > 1e-8) CHECK(r.alignment_residual <= 1e-3);
    }
    REQUIRE(rs.size() >= 8);
    const PowerLaw obj_law = asymptotic_order(rs, os);
    REQUIRE(obj_law.ok);
    CHECK(obj_law.exponent <= -1.5);
    const PowerLaw prod_law = asymptotic_order(rs, prods);
    REQUIRE(prod_law.ok);
    CHECK(prod_law.exponent <= -1.5);
    CHECK(prod_law.exponent == doctest::Approx(-2.0).epsilon(0.05));
}

TEST_CASE("gradient-variant sweeps accept every level of x/(y^2+1)") {
    const Expr f = parse("x/(y^2 + 1)", {"x", "y"});
    for (double t : {-1.0, 0.0, 1.0}) {
        const auto records = sweep_min_product(f, t, default_radii(), 0.05, SweepVariant::gradient);
        const auto set = detect_asymptotic_values(records, 0.05);
        CAPTURE(t);
        REQUIRE(set.candidates.size() == 1);
        CHECK(std::abs(set.candidates[0].value - t) <= 0.06);
    }
}

TEST_CASE("detect output grows monotonically with the threshold") {
    const Expr f = parse("z*(x^4 + (x*y - 1)^2)", {"x", "y", "z"});
    const auto records = sweep_min_product(f, 0.0, default_radii(), std::nullopt, SweepVariant::product);
    const double tol = 0.05;
    std::vector<double> prev_values;
    for (double eps : {1e-4, 1e-3, 1e-2, 0.05, 0.2}) {
        const auto set = detect_asymptotic_values(records, eps, tol);
        std::vector<double> values;
        for (const auto& c : set.candidates) values.push_back(c.value);
        for (double v : prev_values) {
            bool covered = false;
            for (double w : values)
                if (std::abs(v - w) <= tol) covered = true;
            CHECK(covered);
        }
        prev_values = values;
    }
}

TEST_CASE("sweep precondition checks") {
    const Expr f = parse("x1", 2);
    CHECK_THROWS_AS(sweep_min_product(f, 0.0, {1.0, 2.0}, std::nullopt, SweepVariant::product),
                    std::invalid_argument);
    SweepOptions opts;
    opts.starts = 4;
    CHECK_THROWS_AS(sweep_min_product(f, 0.0, default_radii(), std::nullopt, SweepVariant::product, opts),
                    std::invalid_argument);
}

TEST_CASE("sweeps are deterministic for a fixed seed") {
    const Expr f = parse("x*(x*y - 1)", {"x", "y"});
    SweepOptions opts;
    opts.seed = 9;
    const auto a = sweep_min_product(f, 0.0, default_radii(), std::nullopt, SweepVariant::product, opts);
    const auto b = sweep_min_product(f, 0.0, default_radii(), std::nullopt, SweepVariant::product, opts);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].objective == b[i].objective);
        CHECK(a[i].minimizer == b[i].minimizer);
        CHECK(a[i].f_value == b[i].f_value);
    }
}
