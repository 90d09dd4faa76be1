#pragma once

// Qudit local-consistency instances: a system shape plus marginal targets on
// subsets of subsystems. Consistency checks, rank bounds, and the feasibility
// solver entry point.

#include "constraint_system.hpp"
#include "hilbert.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace qmarginal {

struct MarginalConstraint {
    SubsystemSet subsystems;
    HermitianMatrix target;
};

class ConsistencyInstance {
  public:
    /// Validates structure only: targets must be states of the right size.
    /// Mutual compatibility of overlapping targets is the solver's problem.
    ConsistencyInstance(SystemShape shape, std::vector<MarginalConstraint> constraints, double state_tol = 1e-9)
        : shape_(std::move(shape)), constraints_(std::move(constraints)) {
        for (std::size_t i = 0; i < constraints_.size(); ++i) {
            const auto& c = constraints_[i];
            const auto want = c.subsystems.dimension(shape_);
            if (c.target.dim() != want)
                throw DimensionMismatch("constraint " + std::to_string(i) + ": target is " +
                                        std::to_string(c.target.dim()) + "-dimensional, subsystems span " +
                                        std::to_string(want));
            if (std::abs(c.target.trace() - 1.0) > state_tol)
                throw InvalidState("constraint " + std::to_string(i) + ": target trace " +
                                   std::to_string(c.target.trace()) + " != 1");
            const double lmin = min_eigenvalue(c.target);
            if (lmin < -std::sqrt(state_tol))
                throw InvalidState("constraint " + std::to_string(i) + ": target has eigenvalue " +
                                   std::to_string(lmin));
        }
    }

    const SystemShape& shape() const { return shape_; }
    const std::vector<MarginalConstraint>& constraints() const { return constraints_; }
    std::size_t size() const { return constraints_.size(); }

    ConstraintSystem system() const {
        std::vector<LinearConstraint> lc;
        lc.reserve(constraints_.size());
        for (const auto& c : constraints_) {
            LinearMarginalMap map;
            map.in_dim = shape_.total();
            map.out_dim = c.target.dim();
            map.forward = [shape = shape_, keep = c.subsystems](const ComplexMatrix& x) {
                return partial_trace(x, shape, keep);
            };
            map.adjoint = [shape = shape_, keep = c.subsystems](const ComplexMatrix& y) {
                return embed_with_identity(y, shape, keep);
            };
            lc.push_back({std::move(map), c.target});
        }
        return ConstraintSystem(shape_.total(), std::move(lc));
    }

  private:
    SystemShape shape_;
    std::vector<MarginalConstraint> constraints_;
};

inline ResidualReport check_consistency(const ConsistencyInstance& instance, const HermitianMatrix& rho) {
    if (rho.dim() != instance.shape().total())
        throw DimensionMismatch("check_consistency: state dimension " + std::to_string(rho.dim()) +
                                " != " + std::to_string(instance.shape().total()));
    ResidualReport rep;
    for (const auto& c : instance.constraints())
        rep.constraint_residuals.push_back(
            (partial_trace(rho.matrix(), instance.shape(), c.subsystems) - c.target.matrix()).norm());
    rep.psd_violation = std::max(0.0, -min_eigenvalue(rho));
    rep.trace_error = std::abs(rho.trace() - 1.0);
    return rep;
}

inline std::size_t isqrt_floor(std::size_t n) {
    auto r = std::size_t(std::sqrt(double(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

/// floor(sqrt(sum_i rank(rho_i)^2))
inline std::size_t theorem1_bound(const std::vector<std::size_t>& target_ranks) {
    std::size_t s = 0;
    for (auto r : target_ranks) s += r * r;
    return isqrt_floor(s);
}

inline std::size_t theorem1_bound(const ConsistencyInstance& instance, double rank_tol = kDefaultRankTol) {
    std::vector<std::size_t> ranks;
    for (const auto& c : instance.constraints()) ranks.push_back(numerical_rank(c.target, rank_tol));
    return theorem1_bound(ranks);
}

/// floor(sqrt(sum_i (dim I_i)^2)): the rank-independent form of the bound.
inline std::size_t dimension_bound(const ConsistencyInstance& instance) {
    std::size_t s = 0;
    for (const auto& c : instance.constraints()) s += c.target.dim() * c.target.dim();
    return isqrt_floor(s);
}

/// floor(sqrt(2 sum_i (dim I_i)^2)): the comparison bound from the quadratic-form LP argument.
inline std::size_t barvinok_bound(const ConsistencyInstance& instance) {
    std::size_t s = 0;
    for (const auto& c : instance.constraints()) s += c.target.dim() * c.target.dim();
    return isqrt_floor(2 * s);
}

inline FeasibilityResult find_feasible(const ConsistencyInstance& instance, const FeasibilityOptions& opts = {}) {
    return find_feasible(instance.system(), opts);
}

} // namespace qmarginal
