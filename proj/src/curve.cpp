#include "lojalab/curve.hpp"

#include <cmath>
#include <stdexcept>

namespace lojalab {

Point eval_curve(const Curve& c, double s) {
    if (s < c.s_min) throw std::invalid_argument("curve evaluated below s_min");
    Point p(c.components.size());
    const double sv[1] = {s};
    for (std::size_t i = 0; i < c.components.size(); ++i) {
        const auto r = c.components[i].eval(sv);
        if (!r.ok()) throw std::domain_error("curve component hit a domain error at s=" + std::to_string(s));
        p[i] = r.value;
    }
    return p;
}

PowerLaw fit_loglog(std::span<const double> s, std::span<const double> g) {
    PowerLaw law;
    const std::size_t n = s.size();
    if (n < 2) return law;
    for (std::size_t i = 0; i < n; ++i)
        if (!(g[i] > 0.0) || !std::isfinite(g[i])) return law;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(s[i]), y = std::log(g[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double d = n * sxx - sx * sx;
    if (d <= 0.0) return law;
    law.exponent = (n * sxy - sx * sy) / d;
    const double intercept = (sy - law.exponent * sx) / n;
    law.coefficient = std::exp(intercept);
    law.fit_residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(g[i]) - (intercept + law.exponent * std::log(s[i]));
        law.fit_residual = std::max(law.fit_residual, std::abs(r));
    }
    law.ok = true;
    return law;
}

PowerLaw asymptotic_order(std::span<const double> s, std::span<const double> g) {
    if (s.size() != g.size()) throw std::invalid_argument("sample arrays differ in length");
    if (s.size() < 8) throw std::invalid_argument("need at least 8 samples");
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (!(s[i] < s[i + 1])) throw std::invalid_argument("grid must be strictly increasing");
    if (!(s.back() >= 2.0 * s.front())) throw std::invalid_argument("grid span ratio must be >= 2");
    for (double v : g)
        if (!(v > 0.0)) throw std::invalid_argument("samples must be strictly positive");
    const std::size_t window = s.size() / 2;
    const std::size_t from = s.size() - window;
    return fit_loglog(s.subspan(from), g.subspan(from));
}

std::vector<double> geometric_grid(const GridSpec& spec) {
    if (spec.points < 2 || !(spec.s_max > spec.s_min) || !(spec.s_min > 0))
        throw std::invalid_argument("bad grid spec");
    std::vector<double> s(static_cast<std::size_t>(spec.points));
    const double ratio = std::log(spec.s_max / spec.s_min) / (spec.points - 1);
    for (int i = 0; i < spec.points; ++i)
        s[static_cast<std::size_t>(i)] = spec.s_min * std::exp(ratio * i);
    s.back() = spec.s_max;
    return s;
}

CurveSamples sample_curve_quantities(const Expr& f, const Curve& c, double t,
                                     std::span<const double> grid) {
    if (f.arity() != c.arity()) throw std::invalid_argument("curve and function arity differ");
    const Gradient g = grad(f);
    const std::size_t n = c.components.size();
    CurveSamples out;
    out.s.assign(grid.begin(), grid.end());
    out.norm.resize(grid.size());
    out.f_value.resize(grid.size());
    out.f_dev.resize(grid.size());
    out.grad_norm.resize(grid.size());
    out.product.resize(grid.size());

    std::vector<long double> x(n), gval(n);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const long double sv[1] = {static_cast<long double>(grid[k])};
        if (grid[k] < c.s_min) throw std::invalid_argument("grid point below curve s_min");
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = c.components[i].eval_ld(std::span<const long double>(sv, 1));
            if (!r.ok())
                throw std::domain_error("curve component hit a domain error at s=" +
                                        std::to_string(grid[k]));
            x[i] = r.value;
        }
        const auto fv = f.eval_ld(x);
        if (!fv.ok())
            throw std::domain_error("function hit a domain error along the curve at s=" +
                                    std::to_string(grid[k]));
        if (g.eval_ld(x, gval) != EvalStatus::ok)
            throw std::domain_error("gradient hit a domain error along the curve at s=" +
                                    std::to_string(grid[k]));
        long double n2 = 0.0L, g2 = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            n2 += x[i] * x[i];
            g2 += gval[i] * gval[i];
        }
        const long double nrm = std::sqrt(n2), gn = std::sqrt(g2);
        out.norm[k] = static_cast<double>(nrm);
        out.f_value[k] = static_cast<double>(fv.value);
        out.f_dev[k] = static_cast<double>(std::abs(fv.value - static_cast<long double>(t)));
        out.grad_norm[k] = static_cast<double>(gn);
        out.product[k] = static_cast<double>(nrm * gn);
    }
    return out;
}

WitnessReport kinf_witness_check(const Expr& f, const Curve& c, double t, WitnessVariant variant,
                                 double eps, const GridSpec& grid) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const auto s = geometric_grid(grid);
    const auto samples = sample_curve_quantities(f, c, t, s);

    WitnessReport rep;
    rep.epsilon = eps;
    rep.variant = variant;

    const std::size_t window = s.size() / 2;
    const std::size_t from = s.size() - window;
    rep.norm_law = fit_loglog(std::span<const double>(samples.s).subspan(from),
                              std::span<const double>(samples.norm).subspan(from));
    rep.norm_diverges =
        rep.norm_law.ok && rep.norm_law.exponent > 0.05 && samples.norm.back() > samples.norm.front();

    const auto& monitored = variant == WitnessVariant::K ? samples.product : samples.grad_norm;
    rep.monitored_law = fit_loglog(std::span<const double>(samples.s).subspan(from),
                                   std::span<const double>(monitored).subspan(from));
    rep.monitored_last = monitored.back();

    rep.f_limit = samples.f_value.back();
    const std::size_t m = samples.f_value.size();
    rep.f_limit_reliable = std::abs(samples.f_value[m - 1] - samples.f_value[m - 2]) < eps / 10.0;

    rep.accept = rep.norm_diverges && rep.f_limit_reliable && std::abs(rep.f_limit - t) <= eps &&
                 rep.monitored_last <= eps;
    return rep;
}

} // namespace lojalab
