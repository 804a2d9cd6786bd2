#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lojalab/curve.hpp"
#include "lojalab/expr.hpp"

namespace lojalab {

// Quantity minimized over spheres ||x|| = R:
//   product  : ||x|| * ||grad f||   (asymptotic critical value test)
//   gradient : ||grad f||           (the weaker variant)
//   fsq      : f^2                  (empty-fiber branch)
enum class SweepVariant { product, gradient, fsq };

struct SweepRecord {
    double radius = 0.0;
    Point minimizer;                  // on the sphere to within 1e-6 * R
    double objective = 0.0;           // variant quantity at the minimizer
    double f_value = 0.0;             // f at the minimizer
    double alignment_residual = 0.0;  // tangential fraction of grad f, in [0, 1]
    bool converged = false;
};

struct SweepOptions {
    int starts = 16;
    std::uint64_t seed = 0;
    int max_iters = 400;
};

std::vector<double> default_radii(); // 10 * 2^k, k = 0..9

// For each radius, minimizes the variant quantity over the sphere from
// seeded uniform starts (iterates renormalized to the sphere after every
// step), optionally restricted to |f - t| <= level_window by penalty. The
// best minimizer direction found at one radius seeds the next. A radius
// where no start converges still yields a record, flagged inconclusive.
std::vector<SweepRecord> sweep_min_product(const Expr& f, double t, const std::vector<double>& radii,
                                           std::optional<double> level_window, SweepVariant variant,
                                           const SweepOptions& opts = {});

struct Candidate {
    double value = 0.0;
    std::vector<SweepRecord> support;
    PowerLaw decay_law;
};

// candidates sorted ascending; supports are disjoint
struct CandidateValueSet {
    std::vector<Candidate> candidates;
    SweepVariant variant = SweepVariant::product;
    double epsilon = 0.0;
    double cluster_tol = 0.0;
};

// Keeps sweeps whose objectives at the two largest radii fall below eps and
// whose fitted decay exponent is below -0.05, then clusters the f-values of
// the qualifying tail records within cluster_tol. An empty set is a valid
// answer.
CandidateValueSet detect_asymptotic_values(const std::vector<SweepRecord>& records, double eps,
                                           double cluster_tol = 0.05);

// Lower-bound certificate: every sampled x with ||x|| >= radius and
// |f(x)-t| <= delta saw ||x|| ||grad f(x)|| >= c0 during the sweep.
struct MalgrangeCertificate {
    double c0 = 0.0;
    double delta = 0.0;
    double radius = 0.0;
    bool valid = false;
};

// pre: records came from a sweep with the same level window delta
MalgrangeCertificate malgrange_certificate(const Expr& f, double t,
                                           const std::vector<SweepRecord>& records, double delta);

} // namespace lojalab
