#include "lojalab/kinf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lojalab/random.hpp"
#include "lojalab/vecmath.hpp"

namespace lojalab {

std::vector<double> default_radii() {
    std::vector<double> r;
    double v = 10.0;
    for (int k = 0; k < 10; ++k, v *= 2.0) r.push_back(v);
    return r;
}

namespace {

struct SphereProblem {
    CompiledExpr fc;
    std::vector<CompiledExpr> gc;         // first partials
    std::vector<CompiledExpr> hc;         // second partials, row-major n x n
    int n;
    double t;
    SweepVariant variant;
    std::optional<double> window;

    SphereProblem(const Expr& f, double t_, SweepVariant v, std::optional<double> w)
        : fc(f), n(f.arity()), t(t_), variant(v), window(w) {
        const Gradient g = grad(f);
        for (const auto& p : g.partials) {
            gc.emplace_back(p);
            for (int j = 0; j < n; ++j) hc.emplace_back(p.derivative(j));
        }
    }

    bool f_at(const Point& x, double& out) const {
        const auto r = fc.eval(x);
        if (!r.ok() || !std::isfinite(r.value)) return false;
        out = r.value;
        return true;
    }

    bool grad_at(const Point& x, std::vector<double>& out) const {
        for (int i = 0; i < n; ++i) {
            const auto r = gc[static_cast<std::size_t>(i)].eval(x);
            if (!r.ok() || !std::isfinite(r.value)) return false;
            out[static_cast<std::size_t>(i)] = r.value;
        }
        return true;
    }

    bool hess_at(const Point& x, std::vector<double>& out) const {
        for (int i = 0; i < n * n; ++i) {
            const auto r = hc[static_cast<std::size_t>(i)].eval(x);
            if (!r.ok() || !std::isfinite(r.value)) return false;
            out[static_cast<std::size_t>(i)] = r.value;
        }
        return true;
    }

    // objective pieces: base quantity q and, with a level window, the
    // penalized violation. w is the current penalty weight.
    bool value(const Point& x, double w, double& out) const {
        double fv;
        if (!f_at(x, fv)) return false;
        double q;
        if (variant == SweepVariant::fsq) {
            q = fv * fv;
        } else {
            std::vector<double> gv(static_cast<std::size_t>(n));
            if (!grad_at(x, gv)) return false;
            q = vec::dot(gv, gv);
        }
        if (window) {
            const double viol = std::max(0.0, std::abs(fv - t) - *window);
            q += w * viol * viol;
        }
        out = q;
        return std::isfinite(out);
    }

    bool gradient(const Point& x, double w, std::vector<double>& out) const {
        double fv;
        if (!f_at(x, fv)) return false;
        std::vector<double> gv(static_cast<std::size_t>(n));
        if (!grad_at(x, gv)) return false;
        if (variant == SweepVariant::fsq) {
            for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = 2.0 * fv * gv[static_cast<std::size_t>(i)];
        } else {
            // grad ||grad f||^2 = 2 H grad f
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) {
                    const auto r = hc[static_cast<std::size_t>(i * n + j)].eval(x);
                    if (!r.ok() || !std::isfinite(r.value)) return false;
                    s += r.value * gv[static_cast<std::size_t>(j)];
                }
                out[static_cast<std::size_t>(i)] = 2.0 * s;
            }
        }
        if (window) {
            const double dev = fv - t;
            const double viol = std::max(0.0, std::abs(dev) - *window);
            if (viol > 0.0) {
                const double c = 2.0 * w * viol * (dev > 0 ? 1.0 : -1.0);
                for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] += c * gv[static_cast<std::size_t>(i)];
            }
        }
        return vec::finite(out);
    }
};

void renormalize(Point& x, double radius) {
    const double nv = vec::norm(x);
    if (nv > 0) {
        const double c = radius / nv;
        for (auto& v : x) v *= c;
    } else {
        x.assign(x.size(), 0.0);
        x[0] = radius;
    }
}

std::vector<Point> tangent_basis(const Point& x, double radius) {
    const std::size_t n = x.size();
    std::vector<Point> basis;
    for (std::size_t i = 0; i < n && basis.size() + 1 < n; ++i) {
        Point v(n, 0.0);
        v[i] = 1.0;
        const double r = x[i] / radius / radius; // (e_i . x) / R^2
        for (std::size_t j = 0; j < n; ++j) v[j] -= r * x[j];
        for (const auto& b : basis) {
            const double c = vec::dot(v, b);
            for (std::size_t j = 0; j < n; ++j) v[j] -= c * b[j];
        }
        const double nv = vec::norm(v);
        if (nv > 1e-8) basis.push_back(vec::scaled(v, 1.0 / nv));
    }
    return basis;
}

// Constrained stationarity on the sphere. Without a window this is the plain
// tangential-gradient test; with an active window it is the KKT test for the
// constraint |f - t| <= delta with a sign-checked multiplier.
bool classify_converged(const SphereProblem& prob, double radius, const Point& x) {
    const std::size_t n = x.size();
    std::vector<double> gq(n), gf(n);
    if (!prob.gradient(x, 0.0, gq)) return false;
    auto tangential = [&](const std::vector<double>& g, std::vector<double>& out) {
        const double radial = vec::dot(g, x) / (radius * radius);
        double n2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = g[i] - radial * x[i];
            n2 += out[i] * out[i];
        }
        return std::sqrt(n2);
    };
    std::vector<double> tq(n), tf(n);
    const double tqn = tangential(gq, tq);
    const double gqn = vec::norm(gq);
    const bool plain_ok = tqn <= 1e-7 * (1.0 + gqn);
    if (!prob.window) return plain_ok;

    double fv;
    if (!prob.f_at(x, fv)) return false;
    const double dev = fv - prob.t;
    const double slack = std::abs(dev) - *prob.window;
    const double tol_active = 1e-6 * (1.0 + *prob.window);
    if (slack > tol_active) return false;     // outside the window
    if (slack < -tol_active) return plain_ok; // window inactive
    if (!prob.grad_at(x, gf)) return false;
    if (dev < 0)
        for (auto& v : gf) v = -v; // gradient of |f - t|
    const double tfn = tangential(gf, tf);
    if (tfn <= 1e-12 * (1.0 + vec::norm(gf))) return plain_ok;
    const double mu = -vec::dot(tq, tf) / (tfn * tfn);
    if (mu < -1e-6 * (1.0 + tqn / tfn)) return false; // wrong multiplier sign
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = tq[i] + mu * tf[i];
        res2 += r * r;
    }
    return std::sqrt(res2) <= 1e-5 * (1.0 + tqn + std::abs(mu) * tfn);
}

// Tangential Newton polish for fsq minimizers: drives the tangential part of
// grad f to zero, which is the Lagrange alignment condition at constrained
// critical points of f^2. Gradient descent alone cannot reach it because the
// objective is quadratically flat along the sphere there.
void polish_fsq_alignment(const SphereProblem& prob, double radius, Point& x) {
    const std::size_t n = x.size();
    if (n < 2) return;
    std::vector<double> gf(n), H(n * n);
    auto residual = [&](const Point& p, std::vector<double>& out) -> double {
        if (!prob.grad_at(p, out)) return -1.0;
        const double radial = vec::dot(out, p) / (radius * radius);
        double n2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] -= radial * p[i];
            n2 += out[i] * out[i];
        }
        return std::sqrt(n2);
    };
    std::vector<double> r(n);
    double rn = residual(x, r);
    if (rn < 0) return;
    for (int it = 0; it < 8; ++it) {
        if (!prob.grad_at(x, gf) || !prob.hess_at(x, H)) return;
        const auto basis = tangent_basis(x, radius);
        const std::size_t m = basis.size();
        if (m == 0 || m > 2) return;
        // reduced Jacobian of the tangential gradient map on the sphere
        const double radial = vec::dot(gf, x) / radius;
        double A[4] = {0, 0, 0, 0}, b[2] = {0, 0};
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t c = 0; c < m; ++c) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        s += basis[a][i] * H[i * n + j] * basis[c][j];
                s -= (radial / radius) * (a == c ? 1.0 : 0.0);
                A[a * 2 + c] = s;
            }
            b[a] = -vec::dot(basis[a], r);
        }
        double d0, d1 = 0.0;
        if (m == 1) {
            if (std::abs(A[0]) < 1e-300) return;
            d0 = b[0] / A[0];
        } else {
            const double det = A[0] * A[3] - A[1] * A[2];
            if (std::abs(det) < 1e-300) return;
            d0 = (b[0] * A[3] - b[1] * A[1]) / det;
            d1 = (A[0] * b[1] - A[2] * b[0]) / det;
        }
        bool improved = false;
        double lam = 1.0;
        std::vector<double> rt(n);
        for (int bt = 0; bt < 12; ++bt) {
            Point trial = x;
            for (std::size_t i = 0; i < n; ++i)
                trial[i] += lam * (d0 * basis[0][i] + (m == 2 ? d1 * basis[1][i] : 0.0));
            renormalize(trial, radius);
            const double rtn = residual(trial, rt);
            if (rtn >= 0 && rtn < rn) {
                x = std::move(trial);
                rn = rtn;
                improved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!improved) return;
    }
}

struct SphereMin {
    Point x;
    double objective = std::numeric_limits<double>::infinity(); // penalized value
    bool converged = false;
    bool window_ok = true;
};

// projected descent with renormalization; returns the terminal point
SphereMin sphere_descend(const SphereProblem& prob, double radius, Point x0, double w,
                         int max_iters) {
    SphereMin out;
    renormalize(x0, radius);
    Point x = std::move(x0);
    const std::size_t n = x.size();
    std::vector<double> g(n), gt(n);
    double q;
    if (!prob.value(x, w, q)) return out;
    double step = 0.1 * radius;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        if (!prob.gradient(x, w, g)) break;
        const double radial = vec::dot(g, x) / (radius * radius);
        double gtn2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            gt[i] = g[i] - radial * x[i];
            gtn2 += gt[i] * gt[i];
        }
        const double gn = vec::norm(g);
        if (std::sqrt(gtn2) <= 1e-13 * (1.0 + gn)) {
            converged = true;
            break;
        }
        bool accepted = false;
        for (int bt = 0; bt < 64; ++bt) {
            Point trial = vec::axpy(x, -step, gt);
            renormalize(trial, radius);
            double qt;
            if (prob.value(trial, w, qt) && qt <= q - 1e-4 * step * gtn2) {
                x = std::move(trial);
                q = qt;
                step = std::min(step * 1.6, 1e3 * radius);
                accepted = true;
                break;
            }
            step *= 0.4;
            if (step < 1e-18 * radius) break;
        }
        if (!accepted) {
            // stalled: accept as converged only if the tangential gradient is
            // small at a looser tolerance
            converged = std::sqrt(gtn2) <= 1e-7 * (1.0 + gn);
            break;
        }
    }
    out.x = std::move(x);
    out.objective = q;
    out.converged = converged;
    if (prob.window) {
        double fv;
        out.window_ok = prob.f_at(out.x, fv) &&
                        std::abs(fv - prob.t) <= *prob.window * (1.0 + 1e-6) + 1e-12;
    }
    return out;
}

} // namespace

std::vector<SweepRecord> sweep_min_product(const Expr& f, double t, const std::vector<double>& radii,
                                           std::optional<double> level_window, SweepVariant variant,
                                           const SweepOptions& opts) {
    if (radii.size() < 6) throw std::invalid_argument("need at least 6 radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1])) throw std::invalid_argument("radii must be increasing");
    if (opts.starts < 8) throw std::invalid_argument("need at least 8 starts");
    if (level_window && !(*level_window > 0)) throw std::invalid_argument("level window must be positive");

    const SphereProblem prob(f, t, variant, level_window);
    const int n = f.arity();
    std::vector<SweepRecord> records;
    records.reserve(radii.size());
    Point carry; // best direction from the previous radius

    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const double radius = radii[ri];
        SphereMin best;
        bool have_best = false;
        for (int k = -1; k < opts.starts; ++k) {
            Point dir;
            if (k < 0) {
                if (carry.empty()) continue;
                dir = carry;
            } else {
                Rng rng(Rng::mix(Rng::mix(opts.seed, ri), static_cast<std::uint64_t>(k)));
                dir = rng.unit_vector(n);
            }
            Point x0 = vec::scaled(dir, radius / std::max(vec::norm(dir), 1e-300));
            SphereMin m = sphere_descend(prob, radius, std::move(x0), 1.0, opts.max_iters);
            if (level_window) {
                // escalate the window penalty, warm-started
                for (double w = 1e2; w <= 1e8; w *= 100.0)
                    m = sphere_descend(prob, radius, std::move(m.x), w, opts.max_iters);
            }
            if (variant == SweepVariant::fsq) polish_fsq_alignment(prob, radius, m.x);
            m.converged = classify_converged(prob, radius, m.x);
            {
                double q;
                if (prob.value(m.x, level_window ? 1e8 : 0.0, q)) m.objective = q;
                if (prob.window) {
                    double fv;
                    m.window_ok = prob.f_at(m.x, fv) &&
                                  std::abs(fv - prob.t) <= *prob.window * (1.0 + 1e-6) + 1e-12;
                }
            }
            const bool better =
                !have_best ||
                (m.converged && !best.converged) ||
                (m.converged == best.converged && m.objective < best.objective);
            if (m.window_ok && better) {
                best = std::move(m);
                have_best = true;
            }
        }

        SweepRecord rec;
        rec.radius = radius;
        if (have_best) {
            rec.minimizer = best.x;
            rec.converged = best.converged;
            double fv = 0.0;
            std::vector<double> gv(static_cast<std::size_t>(n), 0.0);
            if (prob.f_at(best.x, fv) && prob.grad_at(best.x, gv)) {
                rec.f_value = fv;
                const double gn = vec::norm(gv);
                switch (variant) {
                case SweepVariant::product: rec.objective = radius * gn; break;
                case SweepVariant::gradient: rec.objective = gn; break;
                case SweepVariant::fsq: rec.objective = fv * fv; break;
                }
                if (gn > 0.0) {
                    const double radial = vec::dot(gv, best.x) / (radius * radius);
                    double t2 = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double c = gv[static_cast<std::size_t>(i)] - radial * best.x[static_cast<std::size_t>(i)];
                        t2 += c * c;
                    }
                    rec.alignment_residual = std::min(1.0, std::sqrt(t2) / gn);
                }
                carry = best.x;
            } else {
                rec.converged = false;
            }
        } else {
            rec.minimizer.assign(static_cast<std::size_t>(n), 0.0);
            rec.minimizer[0] = radius;
            rec.converged = false;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

CandidateValueSet detect_asymptotic_values(const std::vector<SweepRecord>& records, double eps,
                                           double cluster_tol) {
    if (!(eps > 0) || !(cluster_tol > 0)) throw std::invalid_argument("eps and cluster_tol must be positive");
    CandidateValueSet out;
    out.epsilon = eps;
    out.cluster_tol = cluster_tol;

    std::vector<const SweepRecord*> conv;
    for (const auto& r : records)
        if (r.converged) conv.push_back(&r);
    if (conv.size() < 2) return out;

    // gate: small at the two largest radii and genuinely decaying
    if (!(conv[conv.size() - 1]->objective < eps && conv[conv.size() - 2]->objective < eps)) return out;
    {
        std::vector<double> rs, os;
        const std::size_t from = conv.size() - std::max<std::size_t>(2, conv.size() / 2);
        for (std::size_t i = from; i < conv.size(); ++i) {
            rs.push_back(conv[i]->radius);
            os.push_back(std::max(conv[i]->objective, 1e-300));
        }
        const PowerLaw law = fit_loglog(rs, os);
        if (!law.ok || law.exponent >= -0.05) return out;
    }

    // tail records support the candidates
    const double mid_radius = records[records.size() / 2].radius;
    std::vector<const SweepRecord*> tail;
    for (const auto* r : conv)
        if (r->radius >= mid_radius && r->objective < eps) tail.push_back(r);
    if (tail.empty()) return out;

    std::sort(tail.begin(), tail.end(),
              [](const SweepRecord* a, const SweepRecord* b) { return a->f_value < b->f_value; });
    std::vector<std::vector<const SweepRecord*>> clusters;
    for (const auto* r : tail) {
        if (clusters.empty() || r->f_value - clusters.back().back()->f_value > cluster_tol)
            clusters.emplace_back();
        clusters.back().push_back(r);
    }

    for (auto& cl : clusters) {
        Candidate cand;
        std::sort(cl.begin(), cl.end(),
                  [](const SweepRecord* a, const SweepRecord* b) { return a->radius < b->radius; });
        cand.value = cl.back()->f_value;
        std::vector<double> rs, os;
        for (const auto* r : cl) {
            cand.support.push_back(*r);
            rs.push_back(r->radius);
            os.push_back(std::max(r->objective, 1e-300));
        }
        if (rs.size() >= 2) {
            cand.decay_law = fit_loglog(rs, os);
        }
        if (!cand.decay_law.ok || cand.decay_law.exponent >= 0.0) {
            // single-record cluster: inherit the sweep-wide decay law
            std::vector<double> ars, aos;
            for (const auto* r : conv) {
                ars.push_back(r->radius);
                aos.push_back(std::max(r->objective, 1e-300));
            }
            const std::size_t from = ars.size() - std::max<std::size_t>(2, ars.size() / 2);
            cand.decay_law = fit_loglog(std::span<const double>(ars).subspan(from),
                                        std::span<const double>(aos).subspan(from));
        }
        out.candidates.push_back(std::move(cand));
    }
    std::sort(out.candidates.begin(), out.candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    return out;
}

MalgrangeCertificate malgrange_certificate(const Expr& /*f*/, double /*t*/,
                                           const std::vector<SweepRecord>& records, double delta) {
    if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
    MalgrangeCertificate cert;
    cert.delta = delta;

    std::vector<const SweepRecord*> conv;
    for (const auto& r : records)
        if (r.converged) conv.push_back(&r);
    if (conv.size() < 3) return cert;

    // decay means the witness failed: no lower bound to certify
    {
        std::vector<double> rs, os;
        const std::size_t from = conv.size() - std::max<std::size_t>(2, conv.size() / 2);
        for (std::size_t i = from; i < conv.size(); ++i) {
            rs.push_back(conv[i]->radius);
            os.push_back(std::max(conv[i]->objective, 1e-300));
        }
        const PowerLaw law = fit_loglog(rs, os);
        const double last = conv.back()->objective;
        if (!law.ok || (law.exponent < -0.05 && last < conv.front()->objective)) return cert;
    }

    // smallest radius from which the objective stays within a factor 2 of the
    // final level
    const double last = conv.back()->objective;
    std::size_t start = conv.size() - 1;
    double suffix_min = conv.back()->objective;
    for (std::size_t i = conv.size(); i-- > 0;) {
        suffix_min = std::min(suffix_min, conv[i]->objective);
        if (suffix_min >= 0.5 * last)
            start = i;
        else
            break;
    }
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = start; i < conv.size(); ++i) m = std::min(m, conv[i]->objective);
    if (!(m > 0) || !std::isfinite(m)) return cert;
    cert.c0 = 0.5 * m;
    cert.radius = conv[start]->radius;
    cert.valid = true;
    return cert;
}

} // namespace lojalab
