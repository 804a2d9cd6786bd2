#include "lojalab/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "lojalab/random.hpp"
#include "lojalab/vecmath.hpp"

namespace lojalab {

// ---------------------------------------------------------------------------
// grid oracle

FiberCloud::FiberCloud(const LevelSpec& spec, const Box& box, double resolution,
                       long long node_budget) {
    dim_ = spec.f.arity();
    if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("grid oracle supports arity 1..3 only");
    if (!(resolution > 0)) throw std::invalid_argument("resolution must be positive");
    if (static_cast<int>(box.lo.size()) != dim_ || static_cast<int>(box.hi.size()) != dim_)
        throw std::invalid_argument("box dimension mismatch");

    std::size_t counts[3] = {1, 1, 1};
    long long total = 1;
    for (int i = 0; i < dim_; ++i) {
        const double span = box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)];
        if (!(span > 0)) throw std::invalid_argument("degenerate box");
        counts[i] = static_cast<std::size_t>(std::ceil(span / resolution)) + 1;
        total *= static_cast<long long>(counts[i]);
        if (total > node_budget) throw std::invalid_argument("box too large for resolution budget");
    }
    cell_diagonal_ = resolution * std::sqrt(static_cast<double>(dim_));

    const CompiledExpr fc(spec.f);
    const double t = spec.t;

    // pad missing leading axes with singleton dimensions so one triple loop
    // covers arity 1..3; axis 2 is innermost
    std::size_t n0 = 1, n1 = 1, n2 = 1;
    double lo0 = 0, lo1 = 0, lo2 = 0;
    int a0 = -1, a1 = -1, a2 = -1;
    if (dim_ == 1) {
        n2 = counts[0];
        lo2 = box.lo[0];
        a2 = 0;
    } else if (dim_ == 2) {
        n1 = counts[0];
        n2 = counts[1];
        lo1 = box.lo[0];
        lo2 = box.lo[1];
        a1 = 0;
        a2 = 1;
    } else {
        n0 = counts[0];
        n1 = counts[1];
        n2 = counts[2];
        lo0 = box.lo[0];
        lo1 = box.lo[1];
        lo2 = box.lo[2];
        a0 = 0;
        a1 = 1;
        a2 = 2;
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> prev_slice(dim_ == 3 ? n1 * n2 : 0, nan);
    std::vector<double> row(n2, nan), prev_row(n2, nan);

    Point p(static_cast<std::size_t>(dim_));
    auto record = [&](double c0, double c1, double c2) {
        if (a0 >= 0) coords_.push_back(c0);
        if (a1 >= 0) coords_.push_back(c1);
        coords_.push_back(c2);
        ++count_;
    };

    for (std::size_t i = 0; i < n0; ++i) {
        const double x0 = lo0 + static_cast<double>(i) * resolution;
        if (a0 >= 0) p[static_cast<std::size_t>(a0)] = x0;
        for (std::size_t j = 0; j < n1; ++j) {
            const double x1 = lo1 + static_cast<double>(j) * resolution;
            if (a1 >= 0) p[static_cast<std::size_t>(a1)] = x1;
            for (std::size_t k = 0; k < n2; ++k) {
                const double x2 = lo2 + static_cast<double>(k) * resolution;
                p[static_cast<std::size_t>(a2)] = x2;
                const auto r = fc.eval(p);
                double dev = nan;
                if (r.ok() && std::isfinite(r.value)) {
                    dev = r.value - t;
                    const double ad = std::abs(dev);
                    if (ad < min_abs_dev_) min_abs_dev_ = ad;
                    if (ad <= spec.f_tol) record(x0, x1, x2);
                }
                row[k] = dev;
                if (k > 0 && dev * row[k - 1] < 0.0) {
                    record(x0, x1, x2);
                    record(x0, x1, x2 - resolution);
                }
                if (j > 0 && dev * prev_row[k] < 0.0) {
                    record(x0, x1, x2);
                    record(x0, x1 - resolution, x2);
                }
                if (i > 0 && dev * prev_slice[j * n2 + k] < 0.0) {
                    record(x0, x1, x2);
                    record(x0 - resolution, x1, x2);
                }
            }
            if (dim_ == 3) std::copy(row.begin(), row.end(), prev_slice.begin() + static_cast<std::ptrdiff_t>(j * n2));
            std::swap(row, prev_row);
        }
        std::fill(prev_row.begin(), prev_row.end(), nan);
    }
}

double FiberCloud::distance(const Point& x) const {
    if (count_ == 0) return kEmptyFiberMarker;
    double best = std::numeric_limits<double>::infinity();
    const double* c = coords_.data();
    if (dim_ == 2) {
        const double qx = x[0], qy = x[1];
        for (std::size_t i = 0; i < count_; ++i, c += 2) {
            const double dx = c[0] - qx, dy = c[1] - qy;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best) best = d2;
        }
        return std::sqrt(best);
    }
    for (std::size_t i = 0; i < count_; ++i, c += dim_) {
        double d2 = 0;
        for (int k = 0; k < dim_; ++k) {
            const double d = c[k] - x[static_cast<std::size_t>(k)];
            d2 += d * d;
        }
        if (d2 < best) best = d2;
    }
    return std::sqrt(best);
}

double dist_oracle_grid(const LevelSpec& spec, const Point& x, const Box& box, double resolution) {
    if (static_cast<int>(x.size()) != spec.f.arity())
        throw std::invalid_argument("query dimension mismatch");
    if (!box.contains(x)) throw std::invalid_argument("query point outside oracle box");
    const FiberCloud cloud(spec, box, resolution);
    return cloud.distance(x);
}

// ---------------------------------------------------------------------------
// projection

namespace {

struct Workspace {
    const LevelSpec& spec;
    CompiledExpr fc;
    std::vector<CompiledExpr> gc;
    double min_dev = std::numeric_limits<double>::infinity();

    explicit Workspace(const LevelSpec& s) : spec(s), fc(s.f) {
        const Gradient g = grad(s.f);
        gc.reserve(g.partials.size());
        for (const auto& p : g.partials) gc.emplace_back(p);
    }

    // f(p) - t, or nullopt on domain error / non-finite value
    std::optional<double> dev(const Point& p) {
        const auto r = fc.eval(p);
        if (!r.ok() || !std::isfinite(r.value)) return std::nullopt;
        const double d = r.value - spec.t;
        const double ad = std::abs(d);
        if (ad < min_dev) min_dev = ad;
        return d;
    }

    bool gradient(const Point& p, std::vector<double>& out) {
        for (std::size_t i = 0; i < gc.size(); ++i) {
            const auto r = gc[i].eval(p);
            if (!r.ok() || !std::isfinite(r.value)) return false;
            out[i] = r.value;
        }
        return true;
    }
};

// Armijo descent on ||y - x||^2 + rho (f(y) - t)^2 with an adaptive step
void penalty_stage(Workspace& ws, const Point& x, Point& y, double rho, int max_iters,
                   double& step) {
    const std::size_t n = y.size();
    std::vector<double> gv(n), gp(n);
    for (int it = 0; it < max_iters; ++it) {
        const auto d = ws.dev(y);
        if (!d) return;
        if (std::abs(*d) <= ws.spec.f_tol) return;
        if (!ws.gradient(y, gv)) return;
        double p_val = rho * (*d) * (*d);
        double gn2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dy = y[i] - x[i];
            p_val += dy * dy;
            gp[i] = 2.0 * dy + 2.0 * rho * (*d) * gv[i];
            gn2 += gp[i] * gp[i];
        }
        if (gn2 <= 1e-24 * (1.0 + p_val) * (1.0 + p_val)) return;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Point trial(n);
            for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] - step * gp[i];
            const auto dt = ws.dev(trial);
            if (dt) {
                double pt = rho * (*dt) * (*dt);
                for (std::size_t i = 0; i < n; ++i) {
                    const double dy = trial[i] - x[i];
                    pt += dy * dy;
                }
                if (pt <= p_val - 1e-4 * step * gn2) {
                    y = std::move(trial);
                    step *= 1.7;
                    accepted = true;
                    break;
                }
            }
            step *= 0.4;
            if (step * std::sqrt(gn2) < 1e-18 * (1.0 + vec::norm(y))) return;
        }
        if (!accepted) return;
    }
}

// damped first-order root polish toward |f - t| <= tol
bool newton_polish(Workspace& ws, Point& y, double tol, int max_iters = 80) {
    const std::size_t n = y.size();
    std::vector<double> gv(n);
    auto d = ws.dev(y);
    if (!d) return false;
    for (int it = 0; it < max_iters; ++it) {
        if (std::abs(*d) <= tol) return true;
        if (!ws.gradient(y, gv)) return false;
        const double gn2 = vec::dot(gv, gv);
        if (gn2 < 1e-280) return false;
        const double scale = -(*d) / gn2;
        double lam = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 48; ++bt) {
            Point trial = vec::axpy(y, lam * scale, gv);
            const auto dt = ws.dev(trial);
            if (dt && std::abs(*dt) < std::abs(*d) * (1.0 - 0.25 * lam)) {
                y = std::move(trial);
                d = dt;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted) return false;
    }
    return std::abs(*d) <= tol;
}

// slide along the fiber to shrink ||y - x||, re-polishing feasibility
void tangential_refine(Workspace& ws, const Point& x, Point& y) {
    const std::size_t n = y.size();
    std::vector<double> gv(n);
    for (int round = 0; round < 40; ++round) {
        if (!ws.gradient(y, gv)) return;
        const double gn = vec::norm(gv);
        if (gn < 1e-250) return;
        Point d = vec::sub(x, y);
        const double along = vec::dot(d, gv) / (gn * gn);
        Point dt(n);
        double dtn2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dt[i] = d[i] - along * gv[i];
            dtn2 += dt[i] * dt[i];
        }
        const double dtn = std::sqrt(dtn2);
        const double cur = vec::norm(d);
        if (dtn <= 1e-12 * (1.0 + cur)) return;
        double alpha = 1.0;
        bool improved = false;
        for (int bt = 0; bt < 14; ++bt) {
            Point trial = vec::axpy(y, alpha, dt);
            if (newton_polish(ws, trial, ws.spec.f_tol) &&
                vec::dist(trial, x) < cur * (1.0 - 1e-12)) {
                y = std::move(trial);
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) return;
    }
}

// sign-change scan along a ray; confirmed crossings become candidates
void ray_candidates(Workspace& ws, const Point& x, std::vector<Point>& cands) {
    const std::size_t n = x.size();
    std::vector<Point> dirs;
    for (std::size_t i = 0; i < n; ++i) {
        Point e(n, 0.0);
        e[i] = 1.0;
        dirs.push_back(e);
        e[i] = -1.0;
        dirs.push_back(e);
    }
    {
        std::vector<double> gv(n);
        if (ws.gradient(x, gv)) {
            const double gn = vec::norm(gv);
            if (gn > 1e-250) {
                dirs.push_back(vec::scaled(gv, 1.0 / gn));
                dirs.push_back(vec::scaled(gv, -1.0 / gn));
            }
        }
    }
    const double scale = 1.0 + vec::norm(x);
    const double a = 1e-9 * scale, b = 30.0 * scale;
    const int steps = 96;
    for (const auto& dir : dirs) {
        bool have_prev = false;
        double prev_t = 0.0, prev_dev = 0.0;
        for (int j = 0; j <= steps; ++j) {
            const double tj = j == 0 ? 0.0 : a * std::pow(b / a, static_cast<double>(j - 1) / (steps - 1));
            const Point p = vec::axpy(x, tj, dir);
            const auto d = ws.dev(p);
            if (!d) {
                have_prev = false;
                continue;
            }
            if (std::abs(*d) <= ws.spec.f_tol) {
                cands.push_back(p);
                have_prev = false;
                continue;
            }
            if (have_prev && (*d > 0) != (prev_dev > 0)) {
                // bisect the bracket; only a confirmed small residual counts
                double t_lo = prev_t, t_hi = tj, d_lo = prev_dev;
                Point mid(n);
                for (int bt = 0; bt < 120; ++bt) {
                    const double tm = 0.5 * (t_lo + t_hi);
                    mid = vec::axpy(x, tm, dir);
                    const auto dm = ws.dev(mid);
                    if (!dm) break;
                    if (std::abs(*dm) <= 0.5 * ws.spec.f_tol) {
                        cands.push_back(mid);
                        break;
                    }
                    if ((*dm > 0) == (d_lo > 0)) {
                        t_lo = tm;
                        d_lo = *dm;
                    } else {
                        t_hi = tm;
                    }
                    if (t_hi - t_lo <= 1e-17 * (1.0 + t_hi)) {
                        if (std::abs(*dm) <= ws.spec.f_tol) cands.push_back(mid);
                        break;
                    }
                }
            }
            have_prev = true;
            prev_t = tj;
            prev_dev = *d;
        }
    }
}

} // namespace

ProjectionResult project_to_levelset(const LevelSpec& spec, const Point& x,
                                     const ProjectionOptions& opts) {
    if (static_cast<int>(x.size()) != spec.f.arity())
        throw std::invalid_argument("query dimension mismatch");
    if (opts.starts < 1) throw std::invalid_argument("need at least one start");
    if (!vec::finite(x)) throw std::invalid_argument("query point must be finite");

    Workspace ws(spec);
    std::vector<Point> feasible;

    const double base_scale = 1.0 + vec::norm(x);
    static constexpr double kScales[3] = {0.1, 1.0, 10.0};

    for (int k = 0; k < opts.starts; ++k) {
        Point y = x;
        if (k > 0) {
            Rng rng(Rng::mix(opts.seed, 1000 + static_cast<std::uint64_t>(k)));
            const auto dir = rng.unit_vector(static_cast<int>(x.size()));
            y = vec::axpy(x, kScales[(k - 1) % 3] * base_scale, dir);
        }
        double step = 0.5;
        for (double rho = 1.0; rho <= 1e16; rho *= 10.0) {
            penalty_stage(ws, x, y, rho, opts.max_iters, step);
            const auto d = ws.dev(y);
            if (d && std::abs(*d) <= spec.f_tol) break;
        }
        if (newton_polish(ws, y, spec.f_tol)) {
            tangential_refine(ws, x, y);
            feasible.push_back(std::move(y));
        }
    }

    {
        std::vector<Point> raw;
        ray_candidates(ws, x, raw);
        for (auto& y : raw) {
            if (newton_polish(ws, y, spec.f_tol)) {
                tangential_refine(ws, x, y);
                feasible.push_back(std::move(y));
            }
        }
    }

    ProjectionResult res;
    res.starts_used = opts.starts;
    if (!feasible.empty()) {
        std::size_t best = 0;
        double best_d = vec::dist(feasible[0], x);
        double best_n = vec::norm(feasible[0]);
        for (std::size_t i = 1; i < feasible.size(); ++i) {
            const double d = vec::dist(feasible[i], x);
            const double nn = vec::norm(feasible[i]);
            const bool better = d < best_d || (d == best_d && nn < best_n) ||
                                (d == best_d && nn == best_n && vec::lex_less(feasible[i], feasible[best]));
            if (better) {
                best = i;
                best_d = d;
                best_n = nn;
            }
        }
        res.y = feasible[best];
        res.dist_upper = best_d;
        res.feasible = true;
        res.status = ProjectionStatus::feasible;
        res.min_abs_dev_seen = ws.min_dev;
        return res;
    }

    // no start reached the fiber; look for evidence that it is empty
    {
        Rng rng(Rng::mix(opts.seed, 777));
        const double b = 10.0 * base_scale;
        Point p(x.size());
        for (int i = 0; i < 4096; ++i) {
            for (auto& c : p) c = rng.uniform(-b, b);
            (void)ws.dev(p);
        }
    }
    const double floor = std::max(1e3 * spec.f_tol, 1e-3);
    res.y = x;
    res.min_abs_dev_seen = ws.min_dev;
    if (ws.min_dev >= floor) {
        res.empty_fiber_presumed = true;
        res.dist_upper = 1.0; // dist(x, empty set) = 1 by convention
        res.status = ProjectionStatus::empty_fiber_presumed;
    } else {
        res.status = ProjectionStatus::inconclusive;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Ekeland-style descent

EkelandResult ekeland_descent(const Expr& f, const Point& x0, double lambda, int max_iters) {
    if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
    if (static_cast<int>(x0.size()) != f.arity()) throw std::invalid_argument("dimension mismatch");
    const auto f0 = f.eval(x0);
    if (!f0.ok() || !std::isfinite(f0.value)) throw std::invalid_argument("f undefined at x0");
    if (f0.value == 0.0) throw std::invalid_argument("ekeland_descent requires f(x0) != 0");

    const double eps = std::abs(f0.value);
    const std::size_t n = x0.size();
    const Gradient g = grad(f);

    EkelandResult res;
    res.eps = eps;
    res.lambda = lambda;

    auto clip_ball = [&](Point p) {
        const Point d = vec::sub(p, x0);
        const double dn = vec::norm(d);
        if (dn > lambda) p = vec::axpy(x0, lambda / dn, d);
        return p;
    };

    Point y = x0;
    double fy = f0.value;
    std::vector<double> gv(n);
    double step = 0.0;
    {
        if (g.eval(x0, gv) != EvalStatus::ok) throw std::invalid_argument("gradient undefined at x0");
        step = 0.25 * lambda / (1.0 + vec::norm(gv));
    }

    const double fiber_tol = 1e-13 * (1.0 + eps);
    int it = 0;
    for (; it < max_iters; ++it) {
        if (std::abs(fy) <= fiber_tol) break;
        if (g.eval(y, gv) != EvalStatus::ok) break;
        Point dir = vec::scaled(gv, fy > 0 ? 1.0 : -1.0);
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            Point trial = clip_ball(vec::axpy(y, -step, dir));
            const auto ft = f.eval(trial);
            if (ft.ok() && std::isfinite(ft.value)) {
                const Point moved = vec::sub(y, trial);
                const double decrease = vec::dot(dir, moved);
                if (std::abs(ft.value) <= std::abs(fy) - 1e-4 * decrease && decrease > 0) {
                    y = std::move(trial);
                    fy = ft.value;
                    step *= 1.6;
                    accepted = true;
                    break;
                }
            }
            step *= 0.4;
            if (step < 1e-18 * lambda) break;
        }
        if (!accepted) break;
    }
    res.iterations = it;

    // classify the terminal point, then recompute every certificate from it
    bool converged = false;
    if (std::abs(fy) <= fiber_tol) {
        converged = true;
    } else if (g.eval(y, gv) == EvalStatus::ok) {
        const double gn = vec::norm(gv);
        const Point r = vec::sub(y, x0);
        const double rn = vec::norm(r);
        const double tol = 1e-5 * (1.0 + gn);
        if (rn < lambda * (1.0 - 1e-10)) {
            converged = gn <= tol;
        } else {
            const Point dir = vec::scaled(gv, fy > 0 ? 1.0 : -1.0);
            const double radial = vec::dot(dir, r) / rn;
            double tang2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = dir[i] - radial * r[i] / rn;
                tang2 += c * c;
            }
            converged = std::sqrt(tang2) <= tol && radial <= tol &&
                        gn <= (eps / lambda) * (1.0 + 5e-3);
        }
    }

    res.y0 = y;
    res.converged = converged;
    const auto fy_check = f.eval(y);
    res.cert_value = fy_check.ok() && std::abs(fy_check.value) <= eps;
    res.cert_radius = vec::dist(x0, y) <= lambda * (1.0 + 1e-9);
    if (g.eval(y, gv) == EvalStatus::ok)
        res.cert_gradient = vec::norm(gv) <= (eps / lambda) * (1.0 + 1e-2);
    res.success = res.converged && res.cert_value && res.cert_radius && res.cert_gradient;
    return res;
}

} // namespace lojalab
