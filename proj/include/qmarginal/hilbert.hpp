#pragma once

// Tensor-factor index arithmetic: partial trace, its adjoint, support
// projectors, and the antisymmetric / symmetric sector isometries.
//
// Convention: subsystem 0 is the most significant digit of a composite index.

#include "numerics.hpp"

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace qmarginal {

class SystemShape {
  public:
    SystemShape() = default;
    SystemShape(std::initializer_list<std::size_t> dims) : SystemShape(std::vector<std::size_t>(dims)) {}
    explicit SystemShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw InvalidInput("SystemShape: at least one subsystem required");
        total_ = 1;
        for (auto d : dims_) {
            if (d < 2) throw InvalidInput("SystemShape: local dimension " + std::to_string(d) + " < 2");
            if (total_ > std::numeric_limits<std::size_t>::max() / d)
                throw InvalidInput("SystemShape: total dimension overflows");
            total_ *= d;
        }
    }

    static SystemShape qubits(std::size_t n) { return SystemShape(std::vector<std::size_t>(n, 2)); }

    std::size_t size() const { return dims_.size(); }
    std::size_t total() const { return total_; }
    std::size_t operator[](std::size_t i) const { return dims_[i]; }
    const std::vector<std::size_t>& dims() const { return dims_; }

    /// Stride of subsystem i in the composite index.
    std::size_t stride(std::size_t i) const {
        std::size_t s = 1;
        for (std::size_t j = i + 1; j < dims_.size(); ++j) s *= dims_[j];
        return s;
    }

    bool operator==(const SystemShape&) const = default;

  private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 0;
};

/// Strictly increasing list of subsystem positions.
class SubsystemSet {
  public:
    SubsystemSet() = default;
    SubsystemSet(std::initializer_list<std::size_t> idx) : SubsystemSet(std::vector<std::size_t>(idx)) {}
    explicit SubsystemSet(std::vector<std::size_t> idx) : idx_(std::move(idx)) {
        for (std::size_t i = 1; i < idx_.size(); ++i)
            if (idx_[i] <= idx_[i - 1]) throw InvalidInput("SubsystemSet: indices must be strictly increasing");
    }

    /// Sorts and validates; rejects duplicates.
    static SubsystemSet from_unsorted(std::vector<std::size_t> idx) {
        std::sort(idx.begin(), idx.end());
        return SubsystemSet(std::move(idx));
    }
    static SubsystemSet range(std::size_t first, std::size_t last) {
        std::vector<std::size_t> v(last - first);
        std::iota(v.begin(), v.end(), first);
        return SubsystemSet(std::move(v));
    }

    std::size_t size() const { return idx_.size(); }
    bool empty() const { return idx_.empty(); }
    std::size_t operator[](std::size_t i) const { return idx_[i]; }
    const std::vector<std::size_t>& indices() const { return idx_; }
    auto begin() const { return idx_.begin(); }
    auto end() const { return idx_.end(); }
    bool contains(std::size_t i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

    void validate(const SystemShape& shape) const {
        if (!idx_.empty() && idx_.back() >= shape.size())
            throw InvalidInput("SubsystemSet: index " + std::to_string(idx_.back()) + " out of range for " +
                               std::to_string(shape.size()) + " subsystems");
    }

    SubsystemSet complement(const SystemShape& shape) const {
        validate(shape);
        std::vector<std::size_t> c;
        for (std::size_t i = 0; i < shape.size(); ++i)
            if (!contains(i)) c.push_back(i);
        return SubsystemSet(std::move(c));
    }

    /// Hilbert dimension of the selected factors.
    std::size_t dimension(const SystemShape& shape) const {
        validate(shape);
        std::size_t d = 1;
        for (auto i : idx_) d *= shape[i];
        return d;
    }

    bool operator==(const SubsystemSet&) const = default;

  private:
    std::vector<std::size_t> idx_;
};

namespace detail {

// Composite-index offsets contributed by each joint value of a subset of factors.
inline std::vector<std::size_t> subset_offsets(const SystemShape& shape, const SubsystemSet& set) {
    std::vector<std::size_t> offsets{0};
    for (auto i : set) {
        const std::size_t d = shape[i];
        const std::size_t stride = shape.stride(i);
        std::vector<std::size_t> next;
        next.reserve(offsets.size() * d);
        for (auto o : offsets)
            for (std::size_t v = 0; v < d; ++v) next.push_back(o + v * stride);
        offsets = std::move(next);
    }
    return offsets;
}

} // namespace detail

/// Tr over the complement of `keep`. Works for any square operator, not only Hermitian ones.
inline ComplexMatrix partial_trace(const ComplexMatrix& x, const SystemShape& shape, const SubsystemSet& keep) {
    if (std::size_t(x.rows()) != shape.total() || x.rows() != x.cols())
        throw DimensionMismatch("partial_trace: operator is " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + ", shape total is " + std::to_string(shape.total()));
    keep.validate(shape);
    const auto ok = detail::subset_offsets(shape, keep);
    const auto ot = detail::subset_offsets(shape, keep.complement(shape));
    const auto dk = Eigen::Index(ok.size());
    ComplexMatrix r = ComplexMatrix::Zero(dk, dk);
    for (Eigen::Index b = 0; b < dk; ++b)
        for (Eigen::Index a = 0; a < dk; ++a) {
            Complex s = 0;
            for (auto t : ot) s += x(Eigen::Index(ok[a] + t), Eigen::Index(ok[b] + t));
            r(a, b) = s;
        }
    return r;
}

inline HermitianMatrix partial_trace(const HermitianMatrix& x, const SystemShape& shape, const SubsystemSet& keep) {
    return HermitianMatrix(partial_trace(x.matrix(), shape, keep));
}

/// Y on `on`, identity on the remaining factors; adjoint of partial_trace.
inline ComplexMatrix embed_with_identity(const ComplexMatrix& y, const SystemShape& shape, const SubsystemSet& on) {
    on.validate(shape);
    const auto ok = detail::subset_offsets(shape, on);
    if (std::size_t(y.rows()) != ok.size() || y.rows() != y.cols())
        throw DimensionMismatch("embed_with_identity: operator is " + std::to_string(y.rows()) + "x" +
                                std::to_string(y.cols()) + ", subsystem dimension is " + std::to_string(ok.size()));
    const auto ot = detail::subset_offsets(shape, on.complement(shape));
    const auto n = Eigen::Index(shape.total());
    ComplexMatrix e = ComplexMatrix::Zero(n, n);
    const auto dk = Eigen::Index(ok.size());
    for (auto t : ot)
        for (Eigen::Index b = 0; b < dk; ++b)
            for (Eigen::Index a = 0; a < dk; ++a) e(Eigen::Index(ok[a] + t), Eigen::Index(ok[b] + t)) = y(a, b);
    return e;
}

inline HermitianMatrix embed_with_identity(const HermitianMatrix& y, const SystemShape& shape,
                                           const SubsystemSet& on) {
    return HermitianMatrix(embed_with_identity(y.matrix(), shape, on));
}

inline HermitianMatrix support_projector(const HermitianMatrix& rho, double rank_tol = kDefaultRankTol) {
    const auto e = eig_hermitian(rho);
    if (e.dim() > 0 && e.eigenvalues[0] < -std::sqrt(rank_tol) * std::max(1.0, e.eigenvalues.cwiseAbs().maxCoeff()))
        throw InvalidState("support_projector: input has eigenvalue " + std::to_string(e.eigenvalues[0]));
    const auto v = support_basis(e, rank_tol);
    return HermitianMatrix(v * v.adjoint());
}

// ---------------------------------------------------------------------------
// Particle-statistics sectors

enum class Statistics { fermionic, bosonic };

inline const char* to_string(Statistics s) { return s == Statistics::fermionic ? "fermionic" : "bosonic"; }

inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::size_t(r);
}

/// Sector dimension: C(d, N) for fermions, C(N + d - 1, N) for bosons.
inline std::size_t sector_dimension(Statistics s, std::size_t particles, std::size_t levels) {
    return s == Statistics::fermionic ? binomial(levels, particles) : binomial(particles + levels - 1, particles);
}

struct PauliExclusionError : InvalidInput {
    using InvalidInput::InvalidInput;
};

struct SectorEmbedding {
    Statistics statistics = Statistics::bosonic;
    std::size_t particles = 0;
    std::size_t levels = 0;
    ComplexMatrix isometry; // levels^particles x sector dimension

    std::size_t sector_dim() const { return std::size_t(isometry.cols()); }
    std::size_t full_dim() const { return std::size_t(isometry.rows()); }
    SystemShape full_shape() const { return SystemShape(std::vector<std::size_t>(particles, levels)); }
};

namespace detail {

// Sorted index tuples in lexicographic order: strictly increasing (fermions)
// or non-decreasing (bosons).
inline std::vector<std::vector<std::size_t>> sector_tuples(Statistics s, std::size_t n, std::size_t d) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (cur.size() == n) {
            out.push_back(cur);
            return;
        }
        for (std::size_t v = start; v < d; ++v) {
            cur.push_back(v);
            self(self, s == Statistics::fermionic ? v + 1 : v);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

inline int permutation_sign(std::vector<std::size_t> p) {
    int sign = 1;
    for (std::size_t i = 0; i < p.size(); ++i)
        while (p[i] != i) {
            std::swap(p[i], p[p[i]]);
            sign = -sign;
        }
    return sign;
}

} // namespace detail

/// Columns: normalized Slater (antisymmetrized) or symmetrized basis vectors.
inline SectorEmbedding sector_isometry(Statistics statistics, std::size_t particles, std::size_t levels) {
    if (particles == 0 || levels == 0) throw InvalidInput("sector_isometry: particles and levels must be >= 1");
    if (statistics == Statistics::fermionic && particles > levels)
        throw PauliExclusionError("sector_isometry: " + std::to_string(particles) + " fermions cannot occupy " +
                                  std::to_string(levels) + " levels");
    const auto tuples = detail::sector_tuples(statistics, particles, levels);
    std::size_t full = 1;
    for (std::size_t i = 0; i < particles; ++i) full *= levels;

    SectorEmbedding emb{statistics, particles, levels, ComplexMatrix::Zero(Eigen::Index(full), Eigen::Index(tuples.size()))};
    std::vector<std::size_t> perm(particles);
    for (std::size_t c = 0; c < tuples.size(); ++c) {
        const auto& t = tuples[c];
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::size_t idx = 0;
            for (std::size_t j = 0; j < particles; ++j) idx = idx * levels + t[perm[j]];
            const double sgn = statistics == Statistics::fermionic ? detail::permutation_sign(perm) : 1.0;
            emb.isometry(Eigen::Index(idx), Eigen::Index(c)) += sgn;
        } while (std::next_permutation(perm.begin(), perm.end()));
        emb.isometry.col(Eigen::Index(c)).normalize();
    }
    return emb;
}

/// k-particle marginal of an N-particle sector state, expressed in the k-particle sector basis.
inline ComplexMatrix sector_partial_trace(const ComplexMatrix& sigma, const SectorEmbedding& emb_n,
                                          const SectorEmbedding& emb_k) {
    if (std::size_t(sigma.rows()) != emb_n.sector_dim() || sigma.rows() != sigma.cols())
        throw DimensionMismatch("sector_partial_trace: state dimension " + std::to_string(sigma.rows()) +
                                " != sector dimension " + std::to_string(emb_n.sector_dim()));
    if (emb_k.statistics != emb_n.statistics || emb_k.levels != emb_n.levels || emb_k.particles >= emb_n.particles ||
        emb_k.particles == 0)
        throw InvalidInput("sector_partial_trace: incompatible k-particle embedding");
    const ComplexMatrix full = emb_n.isometry * sigma * emb_n.isometry.adjoint();
    const auto reduced =
        partial_trace(full, emb_n.full_shape(), SubsystemSet::range(0, emb_k.particles));
    return emb_k.isometry.adjoint() * reduced * emb_k.isometry;
}

/// Adjoint of sector_partial_trace.
inline ComplexMatrix sector_embed(const ComplexMatrix& y, const SectorEmbedding& emb_n, const SectorEmbedding& emb_k) {
    const ComplexMatrix yk = emb_k.isometry * y * emb_k.isometry.adjoint();
    const auto full = embed_with_identity(yk, emb_n.full_shape(), SubsystemSet::range(0, emb_k.particles));
    return emb_n.isometry.adjoint() * full * emb_n.isometry;
}

inline HermitianMatrix sector_partial_trace(const HermitianMatrix& sigma, const SectorEmbedding& emb_n,
                                            std::size_t k) {
    if (k < 1 || k >= emb_n.particles)
        throw InvalidInput("sector_partial_trace: need 1 <= k < N, got k = " + std::to_string(k));
    const auto emb_k = sector_isometry(emb_n.statistics, k, emb_n.levels);
    return HermitianMatrix(sector_partial_trace(sigma.matrix(), emb_n, emb_k));
}

} // namespace qmarginal
