#pragma once

// N-representability: rank reduction of N-fermion / N-boson states with a
// prescribed k-particle marginal, run entirely inside the antisymmetric or
// symmetric sector. Also the two-level bosonic sigma_p family.

#include "hilbert.hpp"
#include "reduce.hpp"

#include <string>

namespace qmarginal {

struct SectorInstance {
    Statistics statistics = Statistics::bosonic;
    std::size_t particles = 0; // N
    std::size_t levels = 0;    // d
    std::size_t marginal_particles = 0; // k
    HermitianMatrix target;    // k-particle state in the k-particle sector basis

    SectorInstance(Statistics s, std::size_t n, std::size_t d, std::size_t k, HermitianMatrix t,
                   double state_tol = 1e-9)
        : statistics(s), particles(n), levels(d), marginal_particles(k), target(std::move(t)) {
        if (s == Statistics::fermionic && d < n)
            throw PauliExclusionError("SectorInstance: " + std::to_string(n) + " fermions need d >= N, got d = " +
                                      std::to_string(d));
        if (k < 1 || k > n) throw InvalidInput("SectorInstance: need 1 <= k <= N");
        const auto want = sector_dimension(s, k, d);
        if (target.dim() != want)
            throw DimensionMismatch("SectorInstance: target is " + std::to_string(target.dim()) +
                                    "-dimensional, the " + std::to_string(k) + "-particle sector has dimension " +
                                    std::to_string(want));
        if (std::abs(target.trace() - 1.0) > state_tol) throw InvalidState("SectorInstance: target trace != 1");
        if (min_eigenvalue(target) < -std::sqrt(state_tol)) throw InvalidState("SectorInstance: target is not PSD");
    }

    std::size_t state_dim() const { return sector_dimension(statistics, particles, levels); }

    /// rank(target) <= C(d,k) (fermions) or C(d+k-1,k) (bosons).
    std::size_t sector_bound() const { return sector_dimension(statistics, marginal_particles, levels); }

    ConstraintSystem system() const {
        LinearMarginalMap map;
        map.in_dim = state_dim();
        map.out_dim = target.dim();
        if (marginal_particles == particles) {
            map.forward = [](const ComplexMatrix& x) { return x; };
            map.adjoint = [](const ComplexMatrix& y) { return y; };
        } else {
            auto emb_n = std::make_shared<SectorEmbedding>(sector_isometry(statistics, particles, levels));
            auto emb_k = std::make_shared<SectorEmbedding>(sector_isometry(statistics, marginal_particles, levels));
            map.forward = [emb_n, emb_k](const ComplexMatrix& x) { return sector_partial_trace(x, *emb_n, *emb_k); };
            map.adjoint = [emb_n, emb_k](const ComplexMatrix& y) { return sector_embed(y, *emb_n, *emb_k); };
        }
        std::vector<LinearConstraint> lc;
        lc.push_back({std::move(map), target});
        return ConstraintSystem(state_dim(), std::move(lc));
    }
};

inline ReductionResult reduce_rank_sector(const HermitianMatrix& sigma0, const SectorInstance& inst,
                                          const ReductionOptions& opts = {}) {
    if (sigma0.dim() != inst.state_dim())
        throw DimensionMismatch("reduce_rank_sector: state dimension " + std::to_string(sigma0.dim()) +
                                " != sector dimension " + std::to_string(inst.state_dim()));
    if (inst.marginal_particles == inst.particles) {
        // the marginal is the whole state
        ReductionTrace t;
        t.initial_rank = t.final_rank = numerical_rank(inst.target, opts.rank_tol);
        t.bound = t.final_rank;
        t.null_space_exhausted = true;
        return {inst.target, t};
    }
    return reduce_rank(sigma0, inst.system(), opts);
}

/// N-boson maximally mixed state on two levels: I/(N+1) in the occupation basis.
inline HermitianMatrix bosonic_maximally_mixed(std::size_t particles) {
    return HermitianMatrix::maximally_mixed(particles + 1);
}

/// M_B^(2) = (|00><00| + |11><11| + |Psi+><Psi+|)/3, i.e. I_3/3 in the two-boson basis.
inline HermitianMatrix bosonic_maximally_mixed_2() { return bosonic_maximally_mixed(2); }

struct NegativeCoefficientError : InvalidInput {
    using InvalidInput::InvalidInput;
};

/// Admissible p: (N-1)/3 <= p <= (2N+1)/3 and 1 <= p <= N-1.
inline bool sigma_p_admissible(std::size_t n, std::size_t p) {
    return n >= 2 && p >= 1 && p + 1 <= n && 3 * p + 1 >= n && 3 * p <= 2 * n + 1;
}

/// Occupation-basis weights of sigma_p: index j carries the normalized Dicke state with j excitations.
inline RealVector bosonic_sigma_p_weights(std::size_t n, std::size_t p) {
    if (!sigma_p_admissible(n, p)) {
        throw NegativeCoefficientError("bosonic_sigma_p: p = " + std::to_string(p) + " outside the admissible range [" +
                                       std::to_string((n + 1) / 3) + ", " +
                                       std::to_string(std::min((2 * n + 1) / 3, n - 1)) + "] for N = " +
                                       std::to_string(n));
    }
    const double N = double(n);
    const double P = double(p);
    RealVector w = RealVector::Zero(Eigen::Index(n + 1));
    w[0] = (3 * P + 1 - N) / (6 * P);
    w[Eigen::Index(n)] = (2 * N - 3 * P + 1) / (6 * (N - P));
    // unnormalized excitation-p sum has squared norm C(N,p): weight C(N,p) / (6 C(N-2,p-1))
    w[Eigen::Index(p)] = double(binomial(n, p)) / (6.0 * double(binomial(n - 2, p - 1)));
    return w;
}

inline HermitianMatrix bosonic_sigma_p(std::size_t n, std::size_t p) {
    const RealVector w = bosonic_sigma_p_weights(n, p);
    return HermitianMatrix(ComplexMatrix(w.cast<Complex>().asDiagonal()));
}

/// Two-boson marginal of a two-level N-boson state diagonal in the occupation basis,
/// from splitting each Dicke state over the first two particles:
/// |D_{N,j}> = [sqrt C(N-2,j) |00>|D_j> + sqrt(2 C(N-2,j-1)) |Psi+>|D_{j-1}> + sqrt C(N-2,j-2) |11>|D_{j-2}>] / sqrt C(N,j).
inline HermitianMatrix bosonic_two_body_marginal(const RealVector& occupation_weights) {
    const auto n = std::size_t(occupation_weights.size()) - 1;
    if (n < 2) throw InvalidInput("bosonic_two_body_marginal: need N >= 2");
    RealVector m = RealVector::Zero(3);
    for (std::size_t j = 0; j <= n; ++j) {
        const double w = occupation_weights[Eigen::Index(j)];
        const double c = double(binomial(n, j));
        m[0] += w * double(binomial(n - 2, j)) / c;
        if (j >= 1) m[1] += w * 2.0 * double(binomial(n - 2, j - 1)) / c;
        if (j >= 2) m[2] += w * double(binomial(n - 2, j - 2)) / c;
    }
    return HermitianMatrix(ComplexMatrix(m.cast<Complex>().asDiagonal()));
}

} // namespace qmarginal
