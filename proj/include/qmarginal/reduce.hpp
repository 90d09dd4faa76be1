#pragma once

// Constructive rank reduction. Given a feasible state rho, find a traceless
// Hermitian H supported on supp(rho) whose marginals all vanish, move to the
// boundary of the PSD cone along the line rho - t H, and repeat. Every
// marginal is preserved exactly (up to round-off) while the rank drops.
//
// A direction is guaranteed to exist while r^2 - sum_i r_i^2 >= 1, so the loop
// ends at rank <= floor(sqrt(sum_i r_i^2)).

#include "constraint_system.hpp"
#include "marginal.hpp"
#include "random.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmarginal {

struct ReductionOptions {
    double rank_tol = kDefaultRankTol;
    double repair_tol = 1e-8;
    double feasibility_tol = 1e-6; // accepted residual of the input state
    double deriv_tol = 1e-9;       // allowed ||T_i(H)||_F of an accepted direction
    double kernel_tol = 1e-10;     // projection norm below which no direction is reported
    std::uint64_t seed = 0;
    std::size_t max_steps = 100000;
};

struct ReductionStep {
    std::size_t rank_before = 0;
    std::size_t rank_after = 0;
    double lambda = 0.0;
    int sign = +1;
    double direction_norm = 0.0;
    double direction_trace = 0.0;
    double direction_marginal = 0.0; // max_i ||T_i(H)||_F
    std::size_t kernel_dim = 0;
    bool dimension_guarantee = false; // r^2 - sum r_i^2 >= 1 held before the step
    double residual_before_repair = 0.0;
    bool repaired = false;
    ResidualReport residual_after;
};

struct ReductionTrace {
    std::size_t initial_rank = 0;
    std::vector<ReductionStep> steps;
    std::size_t final_rank = 0;
    std::size_t bound = 0;
    bool null_space_exhausted = false;  // stopped because no direction remained
    bool guarantee_violated = false;    // no direction found although the count promised one

    bool within_bound() const { return final_rank <= bound; }
};

struct ReductionResult {
    HermitianMatrix state;
    ReductionTrace trace;
};

struct ReductionError : std::runtime_error {
    ReductionError(const std::string& what, ReductionTrace t) : std::runtime_error(what), trace(std::move(t)) {}
    ReductionTrace trace;
};

inline std::vector<std::size_t> target_ranks(const ConstraintSystem& sys, double rank_tol) {
    std::vector<std::size_t> r;
    for (const auto& c : sys.constraints()) r.push_back(numerical_rank(c.target, rank_tol));
    return r;
}

/// r^2 - sum_i r_i^2 >= 1; with no constraints a traceless direction needs r >= 2.
inline bool dimension_guarantee(std::size_t rank, const std::vector<std::size_t>& ranks) {
    if (ranks.empty()) return rank >= 2;
    long long s = 0;
    for (auto r : ranks) s += static_cast<long long>(r * r);
    return static_cast<long long>(rank * rank) - s >= 1;
}

namespace detail {

inline void require_feasible(const ConstraintSystem& sys, const HermitianMatrix& rho, double tol, const char* who) {
    if (rho.dim() != sys.dim())
        throw DimensionMismatch(std::string(who) + ": state dimension " + std::to_string(rho.dim()) + " != " +
                                std::to_string(sys.dim()));
    const auto rep = sys.residuals(rho);
    if (!rep.consistent(tol))
        throw PreconditionError(std::string(who) + ": state is not feasible (worst residual " +
                                std::to_string(rep.worst()) + ")");
}

} // namespace detail

struct DirectionDiagnostics {
    std::size_t support_rank = 0;
    std::size_t kernel_dim = 0;
    double max_marginal = 0.0;
};

/// Traceless Hermitian H in B(supp rho) with T_i(H) = 0 for every constraint and
/// ||H||_F = 1, obtained by projecting a seeded random traceless Y onto the kernel
/// of the support-restricted constraint map. Empty when that kernel is trivial.
inline std::optional<HermitianMatrix> descent_direction(const HermitianMatrix& rho, const ConstraintSystem& sys,
                                                        const ReductionOptions& opts = {},
                                                        DirectionDiagnostics* diag = nullptr) {
    detail::require_feasible(sys, rho, opts.feasibility_tol, "descent_direction");
    const auto e = eig_hermitian(rho);
    const ComplexMatrix v = support_basis(e, opts.rank_tol);
    const auto r = std::size_t(v.cols());
    if (diag) diag->support_rank = r;
    if (r <= 1) return std::nullopt;

    const SupportSystem ss(sys, v, 1e-11);
    if (diag) diag->kernel_dim = std::size_t(ss.kernel_dim());

    SeededRng rng(opts.seed);
    RealVector y0 = rng.normal_vector(Eigen::Index(r * r));
    const double mean_diag = y0.head(Eigen::Index(r)).mean();
    y0.head(Eigen::Index(r)).array() -= mean_diag;
    y0.normalize();

    RealVector y = ss.project_to_kernel(y0);
    // second pass removes what round-off left in the row space
    y = ss.project_to_kernel(y);
    const double n = y.norm();
    if (n < opts.kernel_tol) return std::nullopt;
    y /= n;

    const ComplexMatrix yr = coords::to_matrix(y, r);
    HermitianMatrix h(ComplexMatrix(v * yr * v.adjoint()));

    double worst = std::abs(h.trace());
    for (const auto& c : sys.constraints()) worst = std::max(worst, c.map.forward(h.matrix()).norm());
    if (diag) diag->max_marginal = worst;
    if (worst > opts.deriv_tol)
        throw NumericalError("descent_direction: accepted direction has marginal norm " + std::to_string(worst));
    return h;
}

inline std::optional<HermitianMatrix> descent_direction(const HermitianMatrix& rho, const ConsistencyInstance& inst,
                                                        const ReductionOptions& opts = {}) {
    return descent_direction(rho, inst.system(), opts);
}

struct StepLength {
    double lambda = 0.0;
    int sign = +1; // the new state is rho - sign * lambda * H
    std::size_t multiplicity = 0;
};

/// Largest step along -sign*H keeping rho PSD. The side whose extremal eigenvalue
/// of diag(p)^-1/2 H diag(p)^-1/2 is more degenerate wins (ties go to +).
inline StepLength step_length(const HermitianMatrix& rho, const HermitianMatrix& h,
                              double rank_tol = kDefaultRankTol) {
    if (rho.dim() != h.dim()) throw DimensionMismatch("step_length: rho and H dimensions differ");
    const double hn = h.norm();
    if (hn == 0.0) throw PreconditionError("step_length: H is zero");
    if (std::abs(h.trace()) > 1e-8 * hn) throw PreconditionError("step_length: H is not traceless");

    const auto e = eig_hermitian(rho);
    const ComplexMatrix v = support_basis(e, rank_tol);
    const ComplexMatrix p = v * v.adjoint();
    if ((h.matrix() - p * h.matrix() * p).norm() > 1e-8 * hn)
        throw PreconditionError("step_length: H is not supported on supp(rho)");

    const double thr = rank_threshold(e.eigenvalues, rank_tol);
    std::vector<double> weights;
    for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
        if (e.eigenvalues[i] > thr) weights.push_back(e.eigenvalues[i]);
    RealVector inv_sqrt(Eigen::Index(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) inv_sqrt[Eigen::Index(i)] = 1.0 / std::sqrt(weights[i]);

    const ComplexMatrix hr = v.adjoint() * h.matrix() * v;
    const ComplexMatrix b = inv_sqrt.cast<Complex>().asDiagonal() * hr * inv_sqrt.cast<Complex>().asDiagonal();
    const auto eb = eig_hermitian(HermitianMatrix(b, 1e-6));
    const auto& mu = eb.eigenvalues;
    const double mu_plus = mu[mu.size() - 1];
    const double mu_minus = -mu[0];
    if (mu_plus <= 0.0 || mu_minus <= 0.0)
        throw NumericalError("step_length: congruence lost the sign structure of a traceless H");

    const double mtol = 1e-8 * std::max(mu_plus, mu_minus);
    std::size_t m_plus = 0;
    std::size_t m_minus = 0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (std::abs(mu[i] - mu_plus) <= mtol) ++m_plus;
        if (std::abs(mu[i] + mu_minus) <= mtol) ++m_minus;
    }
    if (m_plus >= m_minus) return {1.0 / mu_plus, +1, m_plus};
    return {1.0 / mu_minus, -1, m_minus};
}

namespace detail {

// Zero eigenvalues below the rank threshold and restore unit trace.
inline HermitianMatrix truncate_spectrum(const HermitianMatrix& rho, double rank_tol) {
    auto e = eig_hermitian(rho);
    const double thr = rank_threshold(e.eigenvalues, rank_tol);
    for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
        if (e.eigenvalues[i] <= thr) e.eigenvalues[i] = 0.0;
    const double t = e.eigenvalues.sum();
    if (t > 0) e.eigenvalues /= t;
    return HermitianMatrix(e.reconstruct());
}

// Restore the constraints, first inside the current support, then globally.
inline std::optional<HermitianMatrix> repair(const ConstraintSystem& sys, const HermitianMatrix& rho,
                                             const ReductionOptions& opts) {
    const ComplexMatrix v = support_basis(eig_hermitian(rho), opts.rank_tol);
    auto y = truncate_spectrum(correct_within_support(sys, rho, v), opts.rank_tol);
    if (sys.residuals(y).consistent(opts.repair_tol)) return y;
    const AffineProjector affine(sys);
    auto z = psd_project(coords::to_hermitian(affine.project(coords::from_matrix(rho)), sys.dim()));
    z = truncate_spectrum(z, opts.rank_tol);
    if (sys.residuals(z).consistent(opts.repair_tol)) return z;
    return std::nullopt;
}

// Drop support eigenvalues too small to invert safely, if the constraints survive it.
inline HermitianMatrix guard_small_weights(const ConstraintSystem& sys, const HermitianMatrix& rho,
                                           const ReductionOptions& opts) {
    auto e = eig_hermitian(rho);
    const double thr = rank_threshold(e.eigenvalues, opts.rank_tol);
    const double guard = 1e3 * thr;
    bool small = false;
    for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
        if (e.eigenvalues[i] > thr && e.eigenvalues[i] < guard) {
            e.eigenvalues[i] = 0.0;
            small = true;
        }
    if (!small) return rho;
    e.eigenvalues /= e.eigenvalues.sum();
    const HermitianMatrix cut(e.reconstruct());
    if (sys.residuals(cut).consistent(opts.repair_tol)) return cut;
    if (auto fixed = repair(sys, cut, opts)) return *fixed;
    return rho;
}

} // namespace detail

inline ReductionResult reduce_rank(const HermitianMatrix& rho0, const ConstraintSystem& sys,
                                   const ReductionOptions& opts = {}) {
    detail::require_feasible(sys, rho0, opts.feasibility_tol, "reduce_rank");
    const auto ranks = target_ranks(sys, opts.rank_tol);

    ReductionTrace trace;
    trace.bound = theorem1_bound(ranks);

    HermitianMatrix rho = detail::truncate_spectrum(rho0, opts.rank_tol);
    if (!sys.residuals(rho).consistent(opts.repair_tol)) {
        auto fixed = detail::repair(sys, rho, opts);
        if (!fixed) {
            trace.initial_rank = trace.final_rank = numerical_rank(rho, opts.rank_tol);
            throw ReductionError("reduce_rank: could not bring the start state within repair_tol", trace);
        }
        rho = *fixed;
    }
    std::size_t rank = numerical_rank(rho, opts.rank_tol);
    trace.initial_rank = rank;

    for (std::size_t s = 0; s < opts.max_steps; ++s) {
        rho = detail::guard_small_weights(sys, rho, opts);
        rank = numerical_rank(rho, opts.rank_tol);

        ReductionOptions dopts = opts;
        dopts.seed = opts.seed + s;
        DirectionDiagnostics diag;
        const auto h = descent_direction(rho, sys, dopts, &diag);
        const bool guaranteed = dimension_guarantee(rank, ranks);
        if (!h) {
            trace.null_space_exhausted = true;
            trace.guarantee_violated = guaranteed;
            break;
        }

        const auto sl = step_length(rho, *h, opts.rank_tol);
        const HermitianMatrix moved(rho.matrix() - double(sl.sign) * sl.lambda * h->matrix());
        HermitianMatrix next = detail::truncate_spectrum(moved, opts.rank_tol);

        ReductionStep step;
        step.rank_before = rank;
        step.lambda = sl.lambda;
        step.sign = sl.sign;
        step.direction_norm = h->norm();
        step.direction_trace = h->trace();
        step.direction_marginal = diag.max_marginal;
        step.kernel_dim = diag.kernel_dim;
        step.dimension_guarantee = guaranteed;
        step.residual_before_repair = sys.affine_residual(next.matrix());

        if (!sys.residuals(next).consistent(opts.repair_tol)) {
            auto fixed = detail::repair(sys, next, opts);
            if (!fixed) {
                trace.final_rank = rank;
                throw ReductionError("reduce_rank: residual " + std::to_string(step.residual_before_repair) +
                                         " after step " + std::to_string(s) + " could not be repaired",
                                     trace);
            }
            next = *fixed;
            step.repaired = true;
        }
        step.rank_after = numerical_rank(next, opts.rank_tol);
        step.residual_after = sys.residuals(next);
        if (step.rank_after >= step.rank_before) {
            trace.final_rank = rank;
            throw ReductionError("reduce_rank: step " + std::to_string(s) + " did not lower the rank", trace);
        }
        trace.steps.push_back(step);
        rho = next;
        rank = step.rank_after;
    }
    trace.final_rank = rank;
    return {rho, trace};
}

inline ReductionResult reduce_rank(const HermitianMatrix& rho0, const ConsistencyInstance& inst,
                                   const ReductionOptions& opts = {}) {
    return reduce_rank(rho0, inst.system(), opts);
}

} // namespace qmarginal
