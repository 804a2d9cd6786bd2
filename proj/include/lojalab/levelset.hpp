#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "lojalab/expr.hpp"

namespace lojalab {

// A fiber {f = t} with the feasibility tolerance used to decide when a point
// counts as lying on it.
struct LevelSpec {
    Expr f;
    double t = 0.0;
    double f_tol = 1e-9;
};

struct Box {
    Point lo, hi;
    bool contains(const Point& x) const {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }
};

inline constexpr double kEmptyFiberMarker = std::numeric_limits<double>::infinity();

// Grid nodes straddling the fiber inside a box: a node joins the cloud when
// f - t changes sign across an axis-aligned edge or |f - t| <= f_tol at the
// node. Built once, queried many times. Nodes with domain errors never
// produce sign changes.
class FiberCloud {
public:
    FiberCloud(const LevelSpec& spec, const Box& box, double resolution,
               long long node_budget = 40'000'000);
    bool empty() const { return count_ == 0; }
    std::size_t size() const { return count_; }
    // min distance from x to any cloud node; kEmptyFiberMarker when empty
    double distance(const Point& x) const;
    double cell_diagonal() const { return cell_diagonal_; }
    double min_abs_dev_seen() const { return min_abs_dev_; }

private:
    int dim_;
    std::size_t count_ = 0;
    std::vector<double> coords_; // flattened, dim_ per node
    double cell_diagonal_ = 0.0;
    double min_abs_dev_ = std::numeric_limits<double>::infinity();
};

// Brute-force distance oracle: scans the grid and returns the min node
// distance among fiber-straddling nodes, or the empty marker when no cell
// qualifies (the caller applies the dist(x, empty set) = 1 convention).
// pre: x inside box, arity <= 3, box within the node budget at this
// resolution.
double dist_oracle_grid(const LevelSpec& spec, const Point& x, const Box& box, double resolution);

enum class ProjectionStatus { feasible, empty_fiber_presumed, inconclusive };

struct ProjectionOptions {
    int starts = 8;
    int max_iters = 240; // inner-descent budget per penalty stage
    std::uint64_t seed = 0;
};

struct ProjectionResult {
    Point y;
    double dist_upper = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
    bool empty_fiber_presumed = false;
    int starts_used = 0;
    ProjectionStatus status = ProjectionStatus::inconclusive;
    double min_abs_dev_seen = std::numeric_limits<double>::infinity(); // min |f - t| observed
};

// Upper bound on dist(x, {f = t}) by multi-start penalty continuation with a
// root-polish and tangential-slide finish. When no start reaches the fiber
// and the observed values stay above the empty-fiber floor, the result is
// dist 1 with empty_fiber_presumed, matching the dist(x, empty) = 1
// convention; otherwise the status is inconclusive.
ProjectionResult project_to_levelset(const LevelSpec& spec, const Point& x,
                                     const ProjectionOptions& opts = {});

struct EkelandResult {
    Point y0;
    double eps = 0.0;
    double lambda = 0.0;
    bool cert_value = false;    // |f(y0)| <= |f(x0)|
    bool cert_radius = false;   // ||x0 - y0|| <= lambda (1 + 1e-9)
    bool cert_gradient = false; // ||grad f(y0)|| <= (eps/lambda) (1 + 1e-2)
    bool converged = false;     // optimizer's own termination state
    bool success = false;       // converged and all three certificates hold
    int iterations = 0;
};

// Approximate minimization of |f| over the closed ball B(x0, lambda) by
// projected descent with backtracking, with eps = |f(x0)|. The three
// certificates are always recomputed from the returned point; a stalled
// descent is reported as failure, never upgraded.
EkelandResult ekeland_descent(const Expr& f, const Point& x0, double lambda, int max_iters = 4000);

} // namespace lojalab
