#include "lojalab/report.hpp"

#include <cstdio>
#include <fstream>

namespace lojalab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string variant_name(SweepVariant v) {
    switch (v) {
    case SweepVariant::product: return "K";
    case SweepVariant::gradient: return "Ktilde";
    case SweepVariant::fsq: return "fsq";
    }
    return "K";
}

std::string variant_name(WitnessVariant v) {
    return v == WitnessVariant::K ? "K" : "Ktilde";
}

Json to_json(const PowerLaw& law) {
    return Json{{"exponent", law.exponent},
                {"coefficient", law.coefficient},
                {"fit_residual", law.fit_residual},
                {"ok", law.ok}};
}

Json to_json(const SweepRecord& rec) {
    return Json{{"radius", rec.radius},
                {"minimizer", rec.minimizer},
                {"objective", rec.objective},
                {"f_value", rec.f_value},
                {"alignment_residual", rec.alignment_residual},
                {"status", rec.converged ? "converged" : "inconclusive"}};
}

Json to_json(const CandidateValueSet& set) {
    Json cands = Json::array();
    for (const auto& c : set.candidates) {
        Json support = Json::array();
        for (const auto& r : c.support) support.push_back(r.radius);
        cands.push_back(Json{{"value", c.value},
                             {"decay_exponent", c.decay_law.exponent},
                             {"radii_support", support}});
    }
    return Json{{"variant", variant_name(set.variant)},
                {"epsilon", set.epsilon},
                {"cluster_tol", set.cluster_tol},
                {"candidates", cands}};
}

Json to_json(const WitnessReport& rep) {
    return Json{{"variant", variant_name(rep.variant)},
                {"epsilon", rep.epsilon},
                {"norm_diverges", rep.norm_diverges},
                {"f_limit", rep.f_limit},
                {"f_limit_reliable", rep.f_limit_reliable},
                {"monitored_law", to_json(rep.monitored_law)},
                {"monitored_last", rep.monitored_last},
                {"norm_law", to_json(rep.norm_law)},
                {"verdict", rep.accept ? "accept" : "reject"}};
}

Json to_json(const ProjectionResult& res) {
    const char* status = res.status == ProjectionStatus::feasible ? "feasible"
                         : res.status == ProjectionStatus::empty_fiber_presumed
                             ? "empty_fiber_presumed"
                             : "inconclusive";
    Json j{{"feasible", res.feasible},
           {"empty_fiber_presumed", res.empty_fiber_presumed},
           {"starts_used", res.starts_used},
           {"status", status},
           {"y", res.y}};
    if (std::isfinite(res.dist_upper))
        j["dist_upper"] = res.dist_upper;
    else
        j["dist_upper"] = nullptr;
    return j;
}

Json to_json(const MalgrangeCertificate& cert) {
    return Json{{"valid", cert.valid}, {"c0", cert.c0}, {"delta", cert.delta}, {"radius", cert.radius}};
}

Json to_json(const LojaFitResult& res, const std::string& function_id) {
    return Json{{"function_id", function_id},
                {"t", res.t},
                {"form",
                 Json{{"kind", res.form.kind == LojaForm::Kind::classical ? "classical" : "mixed"},
                      {"alpha", res.form.alpha},
                      {"beta", res.form.beta}}},
                {"c_star", res.c_star},
                {"witness", res.witness},
                {"samples_used", res.samples_used},
                {"dist_source", res.dist_source},
                {"seed", res.seed}};
}

Json to_json(const FailureCertificate& cert, const std::string& function_id,
             const std::vector<std::string>& curve_components) {
    Json checks = Json::array();
    for (const auto& cc : cert.cross_checks)
        checks.push_back(Json{{"s", cc.s}, {"projection", cc.projection}, {"oracle", cc.oracle}});
    return Json{{"function_id", function_id},
                {"t", cert.t},
                {"form",
                 Json{{"kind", cert.form.kind == LojaForm::Kind::classical ? "classical" : "mixed"},
                      {"alpha", cert.form.alpha},
                      {"beta", cert.form.beta}}},
                {"curve", curve_components},
                {"ratio_law", to_json(cert.ratio_law)},
                {"verdict", cert.fails ? "fails" : "holds-along-curve"},
                {"dist_cross_checks", checks}};
}

Json to_json(const ExampleEntry& e) {
    Json curves = Json::array();
    for (const auto& c : e.curves)
        curves.push_back(Json{{"components", c.components}, {"s_min", c.s_min}});
    return Json{{"id", e.id},       {"expression", e.expression}, {"vars", e.vars},
                {"arity", e.arity}, {"notes", e.notes},           {"curves", curves},
                {"levels", e.levels}};
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::string out = "radius,objective,f_value,alignment_residual,status";
    const std::size_t n = records.empty() ? 0 : records.front().minimizer.size();
    for (std::size_t i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
    out += "\n";
    for (const auto& r : records) {
        out += fmt(r.radius) + "," + fmt(r.objective) + "," + fmt(r.f_value) + "," +
               fmt(r.alignment_residual) + ",";
        out += r.converged ? "converged" : "inconclusive";
        for (double c : r.minimizer) out += "," + fmt(c);
        out += "\n";
    }
    return out;
}

std::string ratio_trace_csv(const FailureCertificate& cert) {
    std::string out = "s,lhs,dist,ratio\n";
    for (const auto& tp : cert.trace)
        out += fmt(tp.s) + "," + fmt(tp.lhs) + "," + fmt(tp.dist) + "," + fmt(tp.ratio) + "\n";
    return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f.good()) throw std::runtime_error("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace lojalab
