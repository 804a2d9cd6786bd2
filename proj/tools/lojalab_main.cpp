// Command-line front end: sweeps, fits, witness checks, failure certificates,
// level-set projections and the example registry, with CSV/JSON reports.

#include "CLI11.hpp"

#include "lojalab/report.hpp"

#include <cmath>
#include <ctime>
#include <iostream>
#include <optional>

using namespace lojalab;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string expr, vars, example;
};

struct Resolved {
    Expr f;
    std::vector<std::string> names;
    std::string id;
    const ExampleEntry* entry = nullptr;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep || (sep == ' ' && c == ',')) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_real(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            const double p = std::stod(text.substr(0, slash));
            const double q = std::stod(text.substr(slash + 1));
            if (q == 0) throw ConfigError("zero denominator in '" + text + "'");
            return p / q;
        }
        return std::stod(text);
    } catch (const std::invalid_argument&) {
        throw ConfigError("cannot parse number '" + text + "'");
    }
}

Resolved resolve_function(const Common& c, int arity_hint = -1) {
    if (!c.example.empty()) {
        const ExampleEntry* e = find_example(c.example);
        if (!e) throw ConfigError("unknown example id '" + c.example + "'");
        return {example_expr(*e), e->vars, e->id, e};
    }
    if (c.expr.empty()) throw ConfigError("either --example or --expr is required");
    if (!c.vars.empty()) {
        const auto names = split(c.vars, ' ');
        return {parse(c.expr, names), names, c.expr, nullptr};
    }
    // unnamed variables x1..xn: smallest arity that parses
    std::vector<int> hints;
    if (arity_hint > 0) hints.push_back(arity_hint);
    for (int n = 1; n <= 16; ++n) hints.push_back(n);
    std::string last_error;
    for (int n : hints) {
        try {
            Expr f = parse(c.expr, n);
            std::vector<std::string> names;
            for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
            return {std::move(f), std::move(names), c.expr, nullptr};
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw ConfigError("cannot parse --expr '" + c.expr + "': " + last_error);
}

Curve resolve_curve(const Resolved& fn, const std::string& curve_arg, double s_min) {
    if (curve_arg.empty() || curve_arg == "default") {
        if (!fn.entry || fn.entry->curves.empty())
            throw ConfigError("no default curve for this function; pass --curve \"c1;c2;...\"");
        return make_curve(fn.entry->curves.front());
    }
    CurveSpec spec;
    spec.components = split(curve_arg, ';');
    spec.s_min = s_min;
    Curve curve = make_curve(spec);
    if (curve.arity() != fn.f.arity())
        throw ConfigError("curve has " + std::to_string(curve.arity()) + " components, function expects " +
                          std::to_string(fn.f.arity()));
    return curve;
}

double default_level(const Resolved& fn) {
    return fn.entry && !fn.entry->levels.empty() ? fn.entry->levels.front() : 0.0;
}

Json with_meta(Json payload) {
    char buf[40];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    payload["meta"] = Json{{"generated_at", buf}};
    return payload;
}

void write_json(const std::filesystem::path& path, Json payload) {
    atomic_write(path, with_meta(std::move(payload)).dump(2) + "\n");
}

LojaForm make_form(const std::string& kind, const std::string& alpha, const std::string& beta) {
    LojaForm form;
    if (kind == "classical")
        form.kind = LojaForm::Kind::classical;
    else if (kind == "mixed")
        form.kind = LojaForm::Kind::mixed;
    else
        throw ConfigError("form must be 'mixed' or 'classical'");
    form.alpha = parse_real(alpha);
    form.beta = parse_real(beta);
    return form;
}

SweepVariant sweep_variant(const std::string& name) {
    if (name == "K") return SweepVariant::product;
    if (name == "Ktilde") return SweepVariant::gradient;
    if (name == "fsq") return SweepVariant::fsq;
    throw ConfigError("variant must be K, Ktilde or fsq");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for global Lojasiewicz inequalities and asymptotic "
                 "critical values"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key-value config file with one section per command");

    Common common;
    app.add_option("--seed", common.seed, "seed for every sampler")->capture_default_str();
    app.add_option("--out", common.out, "output directory")->capture_default_str();
    app.add_option("--expr", common.expr, "inline expression (variables x1..xn unless --vars)");
    app.add_option("--vars", common.vars, "space- or comma-separated variable names for --expr");
    app.add_option("--example", common.example, "registry id (see the examples command)");

    // sweep ------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "sphere sweep for asymptotic critical values");
    sweep->fallthrough();
    std::string sw_variant = "K";
    double sw_t = std::numeric_limits<double>::quiet_NaN();
    double sw_base = 10.0, sw_factor = 2.0, sw_window = 0.0, sw_eps = 0.05, sw_cluster = 0.05,
           sw_delta = 0.5;
    int sw_count = 10, sw_starts = 16, sw_iters = 400;
    sweep->add_option("--variant", sw_variant, "K, Ktilde or fsq")->capture_default_str();
    sweep->add_option("--t", sw_t, "level (default: registry level or 0)");
    sweep->add_option("--radii-base", sw_base)->capture_default_str();
    sweep->add_option("--radii-factor", sw_factor)->capture_default_str();
    sweep->add_option("--radii-count", sw_count)->capture_default_str();
    auto* sw_window_opt = sweep->add_option("--window", sw_window, "level window half-width");
    sweep->add_option("--starts", sw_starts)->capture_default_str();
    sweep->add_option("--opt-iters", sw_iters)->capture_default_str();
    sweep->add_option("--eps", sw_eps, "candidate threshold")->capture_default_str();
    sweep->add_option("--cluster-tol", sw_cluster)->capture_default_str();
    sweep->add_option("--delta", sw_delta, "level window for the lower-bound certificate")
        ->capture_default_str();

    // fit / check --------------------------------------------------------
    auto add_fit_flags = [&](CLI::App* cmd, auto& p) {
        cmd->fallthrough();
        cmd->add_option("--t", p.t, "level (default: registry level or 0)");
        cmd->add_option("--alpha", p.alpha, "first exponent (accepts p/q)")->capture_default_str();
        cmd->add_option("--beta", p.beta, "norm exponent")->capture_default_str();
        cmd->add_option("--form", p.form, "mixed or classical")->capture_default_str();
        cmd->add_option("--rmin", p.rmin)->capture_default_str();
        cmd->add_option("--rmax", p.rmax)->capture_default_str();
        cmd->add_option("--count", p.count)->capture_default_str();
        cmd->add_option("--dist", p.dist, "auto, projection or oracle")->capture_default_str();
        cmd->add_option("--resolution", p.resolution)->capture_default_str();
        cmd->add_option("--f-tol", p.f_tol)->capture_default_str();
    };
    struct FitParams {
        double t = std::numeric_limits<double>::quiet_NaN();
        std::string alpha = "1", beta = "1", form = "mixed", dist = "auto";
        double rmin = 1.0, rmax = 100.0, resolution = 2e-3, f_tol = 1e-9;
        int count = 10000;
    } fit_p, check_p;
    auto* fit = app.add_subcommand("fit", "fit the best constant over seeded samples");
    add_fit_flags(fit, fit_p);
    auto* check = app.add_subcommand("check", "test the inequality at a given constant");
    double check_c = 0.0;
    add_fit_flags(check, check_p);
    check->add_option("--c", check_c, "constant to test")->required();

    // witness ------------------------------------------------------------
    auto* witness = app.add_subcommand("witness", "check a curve as an asymptotic witness");
    witness->fallthrough();
    std::string wi_curve = "default", wi_variant = "K";
    double wi_t = std::numeric_limits<double>::quiet_NaN(), wi_eps = 0.05;
    double wi_smin = 10.0, wi_smax = 1e4, wi_curve_smin = 1.0;
    int wi_points = 25;
    witness->add_option("--curve", wi_curve, "default or \"c1;c2;...\" in s")->capture_default_str();
    witness->add_option("--curve-smin", wi_curve_smin, "domain start for an inline curve")
        ->capture_default_str();
    witness->add_option("--t", wi_t, "level (default: registry level or 0)");
    witness->add_option("--variant", wi_variant, "K or Ktilde")->capture_default_str();
    witness->add_option("--eps", wi_eps)->capture_default_str();
    witness->add_option("--s-min", wi_smin)->capture_default_str();
    witness->add_option("--s-max", wi_smax)->capture_default_str();
    witness->add_option("--points", wi_points)->capture_default_str();

    // certify ------------------------------------------------------------
    auto* certify = app.add_subcommand("certify", "failure certificate along a curve");
    certify->fallthrough();
    struct {
        std::string alpha = "1", beta = "1", form = "mixed", curve = "default";
        double t = std::numeric_limits<double>::quiet_NaN();
        double smin = 10.0, smax = 1e4, curve_smin = 1.0, f_tol = 1e-9;
        int points = 25;
    } ce;
    certify->add_option("--alpha", ce.alpha)->capture_default_str();
    certify->add_option("--beta", ce.beta)->capture_default_str();
    certify->add_option("--form", ce.form)->capture_default_str();
    certify->add_option("--curve", ce.curve)->capture_default_str();
    certify->add_option("--curve-smin", ce.curve_smin)->capture_default_str();
    certify->add_option("--t", ce.t, "level (default: registry level or 0)");
    certify->add_option("--s-min", ce.smin)->capture_default_str();
    certify->add_option("--s-max", ce.smax)->capture_default_str();
    certify->add_option("--points", ce.points)->capture_default_str();
    certify->add_option("--f-tol", ce.f_tol)->capture_default_str();

    // project ------------------------------------------------------------
    auto* project = app.add_subcommand("project", "distance upper bound to a level set");
    project->fallthrough();
    std::string pr_point;
    double pr_t = std::numeric_limits<double>::quiet_NaN(), pr_f_tol = 1e-9;
    int pr_starts = 8, pr_iters = 240;
    project->add_option("--point", pr_point, "query point, comma-separated")->required();
    project->add_option("--t", pr_t, "level (default: registry level or 0)");
    project->add_option("--starts", pr_starts)->capture_default_str();
    project->add_option("--max-iters", pr_iters)->capture_default_str();
    project->add_option("--f-tol", pr_f_tol)->capture_default_str();

    auto* examples = app.add_subcommand("examples", "list the example registry");
    examples->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        const std::filesystem::path out_dir(common.out);

        if (examples->parsed()) {
            Json list = Json::array();
            for (const auto& e : example_registry()) list.push_back(to_json(e));
            write_json(out_dir / "examples.json", Json{{"examples", list}});
            for (const auto& e : example_registry())
                std::cout << e.id << "  arity=" << e.arity << "  " << e.expression << "\n";
            return 0;
        }

        if (sweep->parsed()) {
            const Resolved fn = resolve_function(common);
            const double t = std::isnan(sw_t) ? default_level(fn) : sw_t;
            std::vector<double> radii;
            double r = sw_base;
            for (int i = 0; i < sw_count; ++i, r *= sw_factor) radii.push_back(r);
            SweepOptions opts;
            opts.starts = sw_starts;
            opts.seed = common.seed;
            opts.max_iters = sw_iters;
            std::optional<double> window;
            if (sw_window_opt->count() > 0) window = sw_window;
            const auto records =
                sweep_min_product(fn.f, t, radii, window, sweep_variant(sw_variant), opts);
            atomic_write(out_dir / "sweep.csv", sweep_csv(records));
            const auto set = detect_asymptotic_values(records, sw_eps, sw_cluster);
            Json payload = to_json(set);
            payload["function_id"] = fn.id;
            payload["t"] = t;
            payload["seed"] = common.seed;
            if (window) {
                payload["window"] = *window;
                payload["malgrange"] = to_json(malgrange_certificate(fn.f, t, records, sw_delta));
            }
            write_json(out_dir / "candidates.json", payload);
            bool any_converged = false;
            for (const auto& rec : records) any_converged |= rec.converged;
            if (!any_converged) throw NumericalFailure("all radii inconclusive");
            std::cout << "sweep " << fn.id << " variant=" << sw_variant
                      << " candidates=" << set.candidates.size() << "\n";
            return 0;
        }

        auto run_fit_like = [&](const FitParams& p, bool do_check) {
            const Resolved fn = resolve_function(common);
            const double t = std::isnan(p.t) ? default_level(fn) : p.t;
            const LojaForm form = make_form(p.form, p.alpha, p.beta);
            SamplerSpec sampler;
            sampler.r_min = p.rmin;
            sampler.r_max = p.rmax;
            sampler.count = p.count;
            sampler.seed = common.seed;
            DistOptions dist;
            dist.backend = p.dist == "projection" ? DistBackend::projection
                           : p.dist == "oracle"   ? DistBackend::oracle
                                                  : DistBackend::auto_select;
            dist.oracle_resolution = p.resolution;
            dist.f_tol = p.f_tol;
            dist.projection.seed = common.seed;
            if (!do_check) {
                const auto res = fit_constants(fn.f, t, form, sampler, dist);
                write_json(out_dir / "fit.json", to_json(res, fn.id));
                std::cout << "fit " << fn.id << " t=" << t << " c_star=" << res.c_star << "\n";
            } else {
                const auto violations = test_inequality(fn.f, t, form, check_c, sampler, dist);
                Json vlist = Json::array();
                for (const auto& v : violations)
                    vlist.push_back(Json{{"x", v.x}, {"lhs", v.lhs}, {"dist", v.dist}});
                write_json(out_dir / "check.json",
                           Json{{"function_id", fn.id},
                                {"t", t},
                                {"c", check_c},
                                {"violations", vlist},
                                {"pass", violations.empty()},
                                {"seed", common.seed}});
                std::cout << "check " << fn.id << " c=" << check_c
                          << " violations=" << violations.size() << "\n";
            }
        };
        if (fit->parsed()) {
            run_fit_like(fit_p, false);
            return 0;
        }
        if (check->parsed()) {
            run_fit_like(check_p, true);
            return 0;
        }

        if (witness->parsed()) {
            const Resolved fn = resolve_function(common);
            const double t = std::isnan(wi_t) ? default_level(fn) : wi_t;
            const Curve curve = resolve_curve(fn, wi_curve, wi_curve_smin);
            GridSpec grid{std::max(wi_smin, curve.s_min), wi_smax, wi_points};
            WitnessVariant variant;
            if (wi_variant == "K")
                variant = WitnessVariant::K;
            else if (wi_variant == "Ktilde")
                variant = WitnessVariant::Ktilde;
            else
                throw ConfigError("witness variant must be K or Ktilde");
            const auto rep = kinf_witness_check(fn.f, curve, t, variant, wi_eps, grid);
            Json payload = to_json(rep);
            payload["function_id"] = fn.id;
            payload["t"] = t;
            payload["seed"] = common.seed;
            write_json(out_dir / "witness.json", payload);
            std::cout << "witness " << fn.id << " t=" << t << " verdict="
                      << (rep.accept ? "accept" : "reject") << "\n";
            return 0;
        }

        if (certify->parsed()) {
            const Resolved fn = resolve_function(common);
            const double t = std::isnan(ce.t) ? default_level(fn) : ce.t;
            const LojaForm form = make_form(ce.form, ce.alpha, ce.beta);
            const Curve curve = resolve_curve(fn, ce.curve, ce.curve_smin);
            const GridSpec grid{std::max(ce.smin, curve.s_min), ce.smax, ce.points};
            DistOptions dist;
            dist.f_tol = ce.f_tol;
            dist.projection.seed = common.seed;
            const auto cert = counterexample_certificate(fn.f, t, form, curve, grid, dist);
            std::vector<std::string> comps;
            if (ce.curve == "default" && fn.entry && !fn.entry->curves.empty())
                comps = fn.entry->curves.front().components;
            else
                comps = split(ce.curve, ';');
            Json payload = to_json(cert, fn.id, comps);
            payload["seed"] = common.seed;
            write_json(out_dir / "certify.json", payload);
            atomic_write(out_dir / "certify_trace.csv", ratio_trace_csv(cert));
            std::cout << "certify " << fn.id << " t=" << t << " verdict="
                      << (cert.fails ? "fails" : "holds-along-curve") << "\n";
            return 0;
        }

        if (project->parsed()) {
            Point x;
            for (const auto& c : split(pr_point, ' ')) x.push_back(parse_real(c));
            const Resolved fn = resolve_function(common, static_cast<int>(x.size()));
            if (static_cast<int>(x.size()) != fn.f.arity())
                throw ConfigError("--point has " + std::to_string(x.size()) +
                                  " coordinates, function expects " + std::to_string(fn.f.arity()));
            const double t = std::isnan(pr_t) ? default_level(fn) : pr_t;
            const LevelSpec spec{fn.f, t, pr_f_tol};
            ProjectionOptions opts;
            opts.starts = pr_starts;
            opts.max_iters = pr_iters;
            opts.seed = common.seed;
            const auto res = project_to_levelset(spec, x, opts);
            if (res.status == ProjectionStatus::inconclusive)
                throw NumericalFailure("projection inconclusive");
            Json payload = to_json(res);
            payload["function_id"] = fn.id;
            payload["t"] = t;
            payload["seed"] = common.seed;
            write_json(out_dir / "project.json", payload);
            std::cout << "project " << fn.id << " dist_upper=" << res.dist_upper << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ExprError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const FitError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
