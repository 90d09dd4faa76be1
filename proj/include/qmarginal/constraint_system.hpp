#pragma once

// Linear marginal constraints T_i(X) = rho_i on Hermitian operators, in a form
// shared by the qudit, sector and channel problems. Every constraint is
// expanded into real linear functionals <g_m, X> = beta_m using an
// orthonormal Hermitian basis B_m of the marginal space: g_m = T_i^*(B_m),
// beta_m = Tr(B_m rho_i). The trace functional (g = I, beta = 1) is always
// appended last.

#include "numerics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qmarginal {

/// A linear map X -> T(X) between square operator spaces, with its adjoint.
struct LinearMarginalMap {
    using Fn = std::function<ComplexMatrix(const ComplexMatrix&)>;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Fn forward;
    Fn adjoint;
};

struct LinearConstraint {
    LinearMarginalMap map;
    HermitianMatrix target;
};

/// Residuals of a candidate state against a constraint system.
struct ResidualReport {
    std::vector<double> constraint_residuals; // ||T_i(X) - rho_i||_F
    double psd_violation = 0.0;               // max(0, -lambda_min)
    double trace_error = 0.0;                 // |Tr X - 1|

    double max_constraint_residual() const {
        double m = 0.0;
        for (double r : constraint_residuals) m = std::max(m, r);
        return m;
    }
    double worst() const { return std::max({max_constraint_residual(), psd_violation, trace_error}); }
    bool consistent(double tol) const { return worst() <= tol; }
};

class ConstraintSystem {
  public:
    ConstraintSystem() = default;
    ConstraintSystem(std::size_t dim, std::vector<LinearConstraint> constraints)
        : dim_(dim), constraints_(std::move(constraints)) {
        for (const auto& c : constraints_) {
            if (c.map.in_dim != dim_ || c.map.out_dim != c.target.dim())
                throw DimensionMismatch("ConstraintSystem: constraint map dimensions do not match target/state");
        }
        build_functionals();
    }

    std::size_t dim() const { return dim_; }
    const std::vector<LinearConstraint>& constraints() const { return constraints_; }
    std::size_t size() const { return constraints_.size(); }

    /// Columns are coordinates of the generators g_m (dim^2 x M).
    const RealMatrix& generators() const { return *gen_; }
    const RealVector& values() const { return *beta_; }

    std::vector<double> constraint_residuals(const ComplexMatrix& x) const {
        std::vector<double> r;
        r.reserve(constraints_.size());
        for (const auto& c : constraints_) r.push_back((c.map.forward(x) - c.target.matrix()).norm());
        return r;
    }

    ResidualReport residuals(const HermitianMatrix& x) const {
        if (x.dim() != dim_)
            throw DimensionMismatch("residuals: state dimension " + std::to_string(x.dim()) + " != " +
                                    std::to_string(dim_));
        ResidualReport rep;
        rep.constraint_residuals = constraint_residuals(x.matrix());
        rep.psd_violation = std::max(0.0, -min_eigenvalue(x));
        rep.trace_error = std::abs(x.trace() - 1.0);
        return rep;
    }

    /// Max constraint residual and trace error, ignoring PSD.
    double affine_residual(const ComplexMatrix& x) const {
        double m = std::abs(x.trace().real() - 1.0);
        for (double r : constraint_residuals(x)) m = std::max(m, r);
        return m;
    }

  private:
    void build_functionals() {
        std::size_t m_total = 1;
        for (const auto& c : constraints_) m_total += coords::size(c.target.dim());
        auto g = std::make_shared<RealMatrix>(Eigen::Index(coords::size(dim_)), Eigen::Index(m_total));
        auto b = std::make_shared<RealVector>(Eigen::Index(m_total));
        Eigen::Index col = 0;
        for (const auto& c : constraints_) {
            const std::size_t n = c.target.dim();
            for (std::size_t m = 0; m < coords::size(n); ++m) {
                const ComplexMatrix bm = coords::basis_element(n, m);
                g->col(col) = coords::from_matrix(c.map.adjoint(bm));
                (*b)[col] = frobenius_inner(bm, c.target.matrix()).real();
                ++col;
            }
        }
        g->col(col) = coords::from_matrix(ComplexMatrix::Identity(Eigen::Index(dim_), Eigen::Index(dim_)));
        (*b)[col] = 1.0;
        gen_ = std::move(g);
        beta_ = std::move(b);
    }

    std::size_t dim_ = 0;
    std::vector<LinearConstraint> constraints_;
    std::shared_ptr<const RealMatrix> gen_;
    std::shared_ptr<const RealVector> beta_;
};

namespace detail {

// Thin SVD split into numerically nonzero part, relative cutoff.
struct TruncatedSvd {
    RealMatrix u;
    RealVector s;
    RealMatrix v;

    TruncatedSvd(const RealMatrix& a, double rel_tol) {
        if (a.size() == 0) {
            u = RealMatrix::Zero(a.rows(), 0);
            v = RealMatrix::Zero(a.cols(), 0);
            s = RealVector::Zero(0);
            return;
        }
        // BDCSVD in Eigen 3.4.0 can return inaccurate factors (or assert) on these rank-deficient matrices
        Eigen::JacobiSVD<RealMatrix> jac(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        keep(jac.matrixU(), jac.singularValues(), jac.matrixV(), rel_tol);
    }

    Eigen::Index rank() const { return s.size(); }

  private:
    void keep(const RealMatrix& uu, const RealVector& sv, const RealMatrix& vv, double rel_tol) {
        const double cutoff = rel_tol * (sv.size() > 0 ? sv[0] : 0.0);
        Eigen::Index r = 0;
        while (r < sv.size() && sv[r] > cutoff && sv[r] > 0.0) ++r;
        u = uu.leftCols(r);
        v = vv.leftCols(r);
        s = sv.head(r);
    }
};

} // namespace detail

/// Orthogonal projection onto {X : <g_m, X> = beta_m} (least-squares set if inconsistent).
class AffineProjector {
  public:
    explicit AffineProjector(const ConstraintSystem& sys, double rel_tol = 1e-10)
        : svd_(sys.generators(), rel_tol) {
        // minimum-norm x0 with G^T x0 = beta in the least-squares sense
        x0_ = svd_.u * (svd_.s.cwiseInverse().asDiagonal() * (svd_.v.transpose() * sys.values()));
    }

    RealVector project(const RealVector& x) const { return x0_ + x - svd_.u * (svd_.u.transpose() * x); }

    Eigen::Index rank() const { return svd_.rank(); }

  private:
    detail::TruncatedSvd svd_;
    RealVector x0_;
};

/// The constraint functionals restricted to operators V Y V^dagger with Y Hermitian r x r.
/// Its kernel is the space of feasible directions inside B(range V); its pseudo-inverse
/// gives the minimum-norm in-support correction of a residual.
class SupportSystem {
  public:
    SupportSystem(const ConstraintSystem& sys, const ComplexMatrix& support, double rel_tol = 1e-10)
        : r_(std::size_t(support.cols())) {
        const RealMatrix& g = sys.generators();
        RealMatrix rows(g.cols(), Eigen::Index(coords::size(r_)));
        for (Eigen::Index m = 0; m < g.cols(); ++m) {
            const ComplexMatrix gm = coords::to_matrix(g.col(m), sys.dim());
            rows.row(m) = coords::from_matrix(ComplexMatrix(support.adjoint() * gm * support)).transpose();
        }
        svd_ = detail::TruncatedSvd(rows, rel_tol);
    }

    std::size_t support_dim() const { return r_; }
    Eigen::Index constraint_rank() const { return svd_.rank(); }
    Eigen::Index kernel_dim() const { return Eigen::Index(coords::size(r_)) - svd_.rank(); }

    RealVector project_to_kernel(const RealVector& y) const { return y - svd_.v * (svd_.v.transpose() * y); }

    /// Minimum-norm y with rows * y = rhs (least squares).
    RealVector solve(const RealVector& rhs) const {
        return svd_.v * (svd_.s.cwiseInverse().asDiagonal() * (svd_.u.transpose() * rhs));
    }

  private:
    std::size_t r_;
    detail::TruncatedSvd svd_{RealMatrix(), 0.0};
};

/// Move X inside B(range V) by the minimum-norm correction that restores every
/// constraint functional; negative eigenvalues created on the way are clipped.
inline HermitianMatrix correct_within_support(const ConstraintSystem& sys, const HermitianMatrix& x,
                                              const ComplexMatrix& support) {
    const ComplexMatrix p = support * support.adjoint();
    const ComplexMatrix xs = p * x.matrix() * p;
    const RealVector rhs = sys.values() - sys.generators().transpose() * coords::from_matrix(xs);
    const SupportSystem ss(sys, support);
    const ComplexMatrix delta = coords::to_matrix(ss.solve(rhs), std::size_t(support.cols()));
    HermitianMatrix y(xs + support * delta * support.adjoint());
    if (min_eigenvalue(y) < 0.0) y = psd_project(y);
    return y;
}

struct FeasibilityOptions {
    std::size_t max_iters = 5000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::size_t plateau_window = 200;
    double plateau_improvement = 0.01;
    std::size_t polish_every = 25;
};

struct FeasibilityResult {
    bool feasible = false;
    HermitianMatrix state;      // best iterate (PSD); a solution when feasible
    ResidualReport residual;
    std::size_t iterations = 0;
    double best_residual = 0.0;
    std::string diagnosis;      // "converged", "residual plateau", "max iterations"
};

namespace detail {

inline std::optional<HermitianMatrix> polish(const ConstraintSystem& sys, const HermitianMatrix& x, double support_tol,
                                             double tol) {
    const auto e = eig_hermitian(x);
    const auto v = support_basis(e, support_tol);
    if (v.cols() == 0) return std::nullopt;
    auto y = correct_within_support(sys, x, v);
    if (sys.affine_residual(y.matrix()) <= tol) return y;
    return std::nullopt;
}

} // namespace detail

/// Dykstra alternating projections between the affine constraint set and the PSD
/// cone, started at the maximally mixed state. Infeasibility is only ever a
/// heuristic verdict (residual plateau or iteration cap).
inline FeasibilityResult find_feasible(const ConstraintSystem& sys, const FeasibilityOptions& opts = {}) {
    const std::size_t d = sys.dim();
    FeasibilityResult res;
    const auto start = HermitianMatrix::maximally_mixed(d);
    if (sys.size() == 0) {
        res.feasible = true;
        res.state = start;
        res.residual = sys.residuals(start);
        res.diagnosis = "converged";
        return res;
    }

    const AffineProjector affine(sys);
    RealVector x = coords::from_matrix(start);
    RealVector p = RealVector::Zero(x.size());
    RealVector q = RealVector::Zero(x.size());
    HermitianMatrix best = start;
    double best_res = sys.affine_residual(start.matrix());
    double window_start_best = best_res;

    auto finish = [&](HermitianMatrix s, std::size_t it, bool ok, std::string why) {
        res.feasible = ok;
        res.state = std::move(s);
        res.iterations = it;
        res.residual = sys.residuals(res.state);
        res.best_residual = ok ? res.residual.worst() : best_res;
        res.diagnosis = std::move(why);
        return res;
    };

    for (std::size_t it = 1; it <= opts.max_iters; ++it) {
        const RealVector y = affine.project(x + p);
        p = x + p - y;
        const RealVector z = y + q;
        const HermitianMatrix xm = psd_project(coords::to_hermitian(z, d));
        x = coords::from_matrix(xm);
        q = z - x;

        const double r = sys.affine_residual(xm.matrix());
        if (r < best_res) {
            best_res = r;
            best = xm;
        }
        if (r <= opts.tol) {
            // tighten: the in-support correction usually lands on machine precision
            if (auto pol = detail::polish(sys, xm, 1e-12, r)) return finish(*pol, it, true, "converged");
            return finish(xm, it, true, "converged");
        }
        if (opts.polish_every > 0 && it % opts.polish_every == 0) {
            for (double stol : {1e-6, 1e-9}) {
                if (auto pol = detail::polish(sys, xm, stol, opts.tol)) return finish(*pol, it, true, "converged");
            }
        }
        if (opts.plateau_window > 0 && it % opts.plateau_window == 0) {
            if (it >= 2 * opts.plateau_window && best_res > (1.0 - opts.plateau_improvement) * window_start_best)
                return finish(best, it, false, "residual plateau");
            window_start_best = best_res;
        }
    }
    return finish(best, opts.max_iters, false, "max iterations");
}

} // namespace qmarginal
