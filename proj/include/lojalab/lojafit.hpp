#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lojalab/curve.hpp"
#include "lojalab/expr.hpp"
#include "lojalab/levelset.hpp"

namespace lojalab {

// Left-hand sides under test:
//   classical : |f-t|^alpha + |f-t|^beta
//   mixed     : |f-t|^alpha + ||x||^beta |f-t|   (beta = 1 is the theorem form)
struct LojaForm {
    enum class Kind { classical, mixed };
    Kind kind = Kind::mixed;
    double alpha = 1.0;
    double beta = 1.0;
};

double loja_lhs(const LojaForm& form, double f_dev, double x_norm);

// explicit exponent denominator d(3d-3)^(n-1) for polynomials of degree d in
// n variables (1 when d = 1); throws std::overflow_error when it leaves the
// 64-bit range
long long r_bound(int n, int d);

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Uniform samples in the annulus {r_min <= ||x|| <= r_max}, or in a box when
// one is given.
struct SamplerSpec {
    double r_min = 1.0;
    double r_max = 100.0;
    std::optional<Box> box;
    int count = 10000;
    std::uint64_t seed = 0;
};

enum class DistBackend { auto_select, projection, oracle };

struct DistOptions {
    DistBackend backend = DistBackend::auto_select; // oracle for arity <= 2, else projection
    double oracle_resolution = 2e-3;                // coarsened to fit the node budget
    long long oracle_node_budget = 40'000'000;
    ProjectionOptions projection;
    double f_tol = 1e-9;
};

struct SampleRatio {
    Point x;
    double lhs = 0.0;
    double dist = 0.0;
    double ratio = 0.0;
    bool excluded = false; // near-fiber or backend-inconclusive
};

struct LojaFitResult {
    LojaForm form;
    double t = 0.0;
    double c_star = 0.0;
    Point witness;
    int samples_used = 0;
    std::string dist_source;
    std::uint64_t seed = 0;
    std::vector<SampleRatio> samples;
};

// Draws seeded samples, computes LHS/dist per sample (excluding samples
// within 10 * f_tol of the fiber), and returns the minimum ratio with the
// witness attaining it. Throws FitError when all samples are excluded or the
// distance backend is inconclusive on more than 10% of them.
LojaFitResult fit_constants(const Expr& f, double t, const LojaForm& form,
                            const SamplerSpec& sampler, const DistOptions& dist = {});

struct Violation {
    Point x;
    double lhs = 0.0;
    double dist = 0.0;
};

// all samples with LHS < c * dist; empty means the inequality held on the set
std::vector<Violation> test_inequality(const Expr& f, double t, const LojaForm& form, double c,
                                       const SamplerSpec& sampler, const DistOptions& dist = {});

struct RatioTracePoint {
    double s = 0.0;
    double lhs = 0.0;
    double dist = 0.0;
    double ratio = 0.0;
};

struct DistCrossCheck {
    double s = 0.0;
    double projection = 0.0;
    double oracle = 0.0;
};

struct FailureCertificate {
    LojaForm form;
    double t = 0.0;
    Curve curve;
    PowerLaw ratio_law;
    bool fails = false; // verdict: confirmed decay with a material drop
    std::vector<RatioTracePoint> trace;
    std::vector<DistCrossCheck> cross_checks;
};

// Samples LHS/dist along the curve (distance from projection, cross-checked
// against the grid oracle at the three smallest grid values when arity <= 3)
// and fits the ratio power law. The verdict is "fails" when the fitted
// exponent is below -0.05 and the final ratio either drops below 1e-2 or to
// at most half of the initial ratio.
FailureCertificate counterexample_certificate(const Expr& f, double t, const LojaForm& form,
                                              const Curve& curve, const GridSpec& grid = {},
                                              const DistOptions& dist = {});

} // namespace lojalab
