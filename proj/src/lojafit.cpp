#include "lojalab/lojafit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lojalab/random.hpp"
#include "lojalab/vecmath.hpp"

namespace lojalab {

double loja_lhs(const LojaForm& form, double f_dev, double x_norm) {
    if (form.kind == LojaForm::Kind::classical)
        return std::pow(f_dev, form.alpha) + std::pow(f_dev, form.beta);
    return std::pow(f_dev, form.alpha) + std::pow(x_norm, form.beta) * f_dev;
}

long long r_bound(int n, int d) {
    if (n < 1 || d < 1) throw std::invalid_argument("r_bound requires n, d >= 1");
    if (d == 1) return 1;
    const __int128 base = 3LL * d - 3;
    __int128 v = d;
    for (int i = 1; i < n; ++i) {
        v *= base;
        if (v > INT64_MAX) throw std::overflow_error("r_bound exceeds 64-bit range");
    }
    return static_cast<long long>(v);
}

namespace {

void validate_form(const LojaForm& form) {
    if (!(form.alpha > 0)) throw std::invalid_argument("alpha must be positive");
    if (form.kind == LojaForm::Kind::classical && !(form.beta > 0))
        throw std::invalid_argument("classical form requires beta > 0");
}

std::vector<Point> draw_samples(const Expr& f, const SamplerSpec& sampler) {
    const int n = f.arity();
    if (sampler.count < 100) throw std::invalid_argument("need at least 100 samples");
    if (!sampler.box && !(sampler.r_min >= 0 && sampler.r_max > sampler.r_min))
        throw std::invalid_argument("bad annulus bounds");
    const CompiledExpr fc(f);
    Rng rng(sampler.seed);
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(sampler.count));
    long long attempts = 0;
    const long long cap = 64LL * sampler.count + 4096;
    while (static_cast<int>(out.size()) < sampler.count && attempts < cap) {
        ++attempts;
        Point x;
        if (sampler.box) {
            x.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                x[static_cast<std::size_t>(i)] =
                    rng.uniform(sampler.box->lo[static_cast<std::size_t>(i)],
                                sampler.box->hi[static_cast<std::size_t>(i)]);
        } else {
            const auto dir = rng.unit_vector(n);
            const double u = rng.uniform();
            const double p = static_cast<double>(n);
            const double r = std::pow(std::pow(sampler.r_min, p) +
                                          u * (std::pow(sampler.r_max, p) - std::pow(sampler.r_min, p)),
                                      1.0 / p);
            x = vec::scaled(dir, r);
        }
        const auto fv = fc.eval(x);
        if (!fv.ok() || !std::isfinite(fv.value)) continue; // outside the domain
        out.push_back(std::move(x));
    }
    if (static_cast<int>(out.size()) < sampler.count)
        throw FitError("sampler could not find enough in-domain points");
    return out;
}

struct DistEvaluator {
    const LevelSpec& spec;
    const DistOptions& opts;
    std::string source;
    std::optional<FiberCloud> cloud;

    DistEvaluator(const LevelSpec& s, const DistOptions& o, const SamplerSpec& sampler)
        : spec(s), opts(o) {
        DistBackend backend = opts.backend;
        if (backend == DistBackend::auto_select)
            backend = spec.f.arity() <= 2 ? DistBackend::oracle : DistBackend::projection;
        if (backend == DistBackend::oracle) {
            if (spec.f.arity() > 3) throw std::invalid_argument("oracle backend needs arity <= 3");
            source = "oracle";
            Box box;
            if (sampler.box) {
                box = *sampler.box;
                const std::size_t n = box.lo.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const double pad = 0.02 * (box.hi[i] - box.lo[i]) + 4 * opts.oracle_resolution;
                    box.lo[i] -= pad;
                    box.hi[i] += pad;
                }
            } else {
                const double r = sampler.r_max * 1.02 + 4 * opts.oracle_resolution;
                box.lo.assign(static_cast<std::size_t>(spec.f.arity()), -r);
                box.hi.assign(static_cast<std::size_t>(spec.f.arity()), r);
            }
            // coarsen the resolution until the scan fits the node budget
            double span = 0;
            for (std::size_t i = 0; i < box.lo.size(); ++i) span = std::max(span, box.hi[i] - box.lo[i]);
            const double per_axis = std::floor(
                std::pow(static_cast<double>(opts.oracle_node_budget), 1.0 / spec.f.arity()));
            const double res = std::max(opts.oracle_resolution, span / (per_axis - 2));
            cloud.emplace(spec, box, res, opts.oracle_node_budget);
        } else {
            source = "projection";
        }
    }

    // Near-fiber ratios are numerically meaningless noise; with the grid
    // oracle the noise floor is its own cell diagonal, not f_tol.
    double exclusion_floor() const {
        const double base = 10.0 * opts.f_tol;
        return cloud ? std::max(base, 2.0 * cloud->cell_diagonal()) : base;
    }

    // distance or nullopt when inconclusive; empty fibers give 1 by convention
    std::optional<double> operator()(const Point& x, std::uint64_t sample_index) {
        if (cloud) {
            const double d = cloud->distance(x);
            return d == kEmptyFiberMarker ? 1.0 : d;
        }
        ProjectionOptions popts = opts.projection;
        popts.seed = Rng::mix(popts.seed, sample_index);
        const auto pr = project_to_levelset(spec, x, popts);
        if (pr.status == ProjectionStatus::feasible) return pr.dist_upper;
        if (pr.status == ProjectionStatus::empty_fiber_presumed) return 1.0;
        return std::nullopt;
    }
};

} // namespace

LojaFitResult fit_constants(const Expr& f, double t, const LojaForm& form,
                            const SamplerSpec& sampler, const DistOptions& dist) {
    validate_form(form);
    const auto points = draw_samples(f, sampler);
    const LevelSpec spec{f, t, dist.f_tol};
    DistEvaluator dister(spec, dist, sampler);
    const CompiledExpr fc(f);

    LojaFitResult res;
    res.form = form;
    res.t = t;
    res.seed = sampler.seed;
    res.dist_source = dister.source;
    res.samples.reserve(points.size());

    int inconclusive = 0;
    std::size_t best = SIZE_MAX;
    for (std::size_t i = 0; i < points.size(); ++i) {
        SampleRatio sr;
        sr.x = points[i];
        const auto fv = fc.eval(sr.x);
        const double dev = std::abs(fv.value - t);
        sr.lhs = loja_lhs(form, dev, vec::norm(sr.x));
        const auto d = dister(sr.x, i);
        if (!d) {
            ++inconclusive;
            sr.excluded = true;
            res.samples.push_back(std::move(sr));
            continue;
        }
        sr.dist = *d;
        if (sr.dist < dister.exclusion_floor()) {
            sr.excluded = true; // ratios at the fiber are noise
            res.samples.push_back(std::move(sr));
            continue;
        }
        sr.ratio = sr.lhs / sr.dist;
        res.samples.push_back(std::move(sr));
        if (best == SIZE_MAX || res.samples.back().ratio < res.samples[best].ratio) best = res.samples.size() - 1;
        ++res.samples_used;
    }
    if (inconclusive * 10 > static_cast<int>(points.size()))
        throw FitError("distance backend inconclusive on more than 10% of samples");
    if (best == SIZE_MAX) throw FitError("all samples fell on or near the fiber");
    res.c_star = res.samples[best].ratio;
    res.witness = res.samples[best].x;
    return res;
}

std::vector<Violation> test_inequality(const Expr& f, double t, const LojaForm& form, double c,
                                       const SamplerSpec& sampler, const DistOptions& dist) {
    if (!(c > 0)) throw std::invalid_argument("c must be positive");
    validate_form(form);
    const auto points = draw_samples(f, sampler);
    const LevelSpec spec{f, t, dist.f_tol};
    DistEvaluator dister(spec, dist, sampler);
    const CompiledExpr fc(f);

    std::vector<Violation> out;
    int inconclusive = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto fv = fc.eval(points[i]);
        const double dev = std::abs(fv.value - t);
        const double lhs = loja_lhs(form, dev, vec::norm(points[i]));
        const auto d = dister(points[i], i);
        if (!d) {
            ++inconclusive;
            continue;
        }
        if (*d < dister.exclusion_floor()) continue; // near-fiber, excluded as in the fit
        if (lhs < c * (*d)) out.push_back({points[i], lhs, *d});
    }
    if (inconclusive * 10 > static_cast<int>(points.size()))
        throw FitError("distance backend inconclusive on more than 10% of samples");
    return out;
}

FailureCertificate counterexample_certificate(const Expr& f, double t, const LojaForm& form,
                                              const Curve& curve, const GridSpec& grid,
                                              const DistOptions& dist) {
    validate_form(form);
    if (f.arity() != curve.arity()) throw std::invalid_argument("curve and function arity differ");
    const auto s = geometric_grid(grid);
    const auto samples = sample_curve_quantities(f, curve, t, s);

    // the curve must escape to infinity
    if (!(samples.norm.back() >= 2.0 * samples.norm.front()))
        throw std::invalid_argument("curve does not escape to infinity over this grid");

    // never let the curve's own small residual count as on-fiber
    double min_dev = std::numeric_limits<double>::infinity();
    for (double d : samples.f_dev) min_dev = std::min(min_dev, d);
    LevelSpec spec{f, t, dist.f_tol};
    if (min_dev > 0) spec.f_tol = std::min(spec.f_tol, 0.01 * min_dev);

    FailureCertificate cert;
    cert.form = form;
    cert.t = t;
    cert.curve = curve;
    cert.trace.reserve(s.size());

    std::vector<double> ss, ratios;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Point x = eval_curve(curve, s[i]);
        ProjectionOptions popts = dist.projection;
        popts.seed = Rng::mix(popts.seed, i);
        const auto pr = project_to_levelset(spec, x, popts);
        if (pr.status == ProjectionStatus::inconclusive)
            throw FitError("distance estimate inconclusive along the curve at s=" +
                           std::to_string(s[i]));
        const double d = pr.dist_upper;
        RatioTracePoint tp;
        tp.s = s[i];
        tp.lhs = loja_lhs(form, samples.f_dev[i], samples.norm[i]);
        tp.dist = d;
        tp.ratio = d > 0 ? tp.lhs / d : std::numeric_limits<double>::infinity();
        cert.trace.push_back(tp);
        ss.push_back(tp.s);
        ratios.push_back(tp.ratio);
    }

    // oracle cross-check at the three smallest grid values when affordable
    if (f.arity() <= 3) {
        for (std::size_t i = 0; i < std::min<std::size_t>(3, s.size()); ++i) {
            const Point x = eval_curve(curve, s[i]);
            const double guess = cert.trace[i].dist;
            if (!std::isfinite(guess)) continue;
            const double half = 2.0 * guess + 1.0;
            Box box;
            for (double c : x) {
                box.lo.push_back(c - half);
                box.hi.push_back(c + half);
            }
            const double per_axis =
                std::floor(std::pow(static_cast<double>(dist.oracle_node_budget), 1.0 / f.arity()));
            const double res = std::max(dist.oracle_resolution, 2.0 * half / (per_axis - 2));
            const double od = dist_oracle_grid(spec, x, box, res);
            cert.cross_checks.push_back({s[i], guess, od});
        }
    }

    const std::size_t window = ss.size() / 2;
    bool positive = true;
    for (std::size_t i = ss.size() - window; i < ss.size(); ++i)
        if (!(ratios[i] > 0) || !std::isfinite(ratios[i])) positive = false;
    if (positive)
        cert.ratio_law = fit_loglog(std::span<const double>(ss).subspan(ss.size() - window),
                                    std::span<const double>(ratios).subspan(ss.size() - window));
    // a failure needs confirmed decay plus a material drop: either below the
    // absolute 1e-2 floor or to at most half the initial ratio (slow decays
    // like s^-0.1 never reach an absolute floor on a finite grid)
    const bool dropped = ratios.back() < 1e-2 || ratios.back() <= 0.5 * ratios.front();
    cert.fails = cert.ratio_law.ok && cert.ratio_law.exponent < -0.05 && dropped;
    return cert;
}

} // namespace lojalab
