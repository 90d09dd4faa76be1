#pragma once

// Worked examples and benchmark instances: ring graph states, the all-k-local
// maximally mixed instance, seeded random feasible instances and channels.

#include "channels.hpp"
#include "marginal.hpp"
#include "random.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qmarginal {

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

namespace pauli {

inline ComplexMatrix I() { return ComplexMatrix::Identity(2, 2); }
inline ComplexMatrix X() {
    ComplexMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline ComplexMatrix Y() {
    ComplexMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
inline ComplexMatrix Z() {
    ComplexMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline ComplexMatrix from_letter(char c) {
    switch (c) {
    case 'I': return I();
    case 'X': return X();
    case 'Y': return Y();
    case 'Z': return Z();
    default: throw InvalidInput(std::string("pauli: unknown letter '") + c + "'");
    }
}

} // namespace pauli

/// Tensor product of single-qubit Paulis, qubit 0 leftmost.
class PauliString {
  public:
    explicit PauliString(std::string letters) : letters_(std::move(letters)) {
        if (letters_.empty()) throw InvalidInput("PauliString: empty");
        for (char c : letters_) pauli::from_letter(c);
    }

    /// Identity on n qubits with the given letters placed at the given positions.
    static PauliString placed(std::size_t n, const std::vector<std::pair<std::size_t, char>>& at) {
        std::string s(n, 'I');
        for (auto [pos, c] : at) {
            if (pos >= n) throw InvalidInput("PauliString: position out of range");
            s[pos] = c;
        }
        return PauliString(s);
    }

    std::size_t size() const { return letters_.size(); }
    const std::string& letters() const { return letters_; }

    ComplexMatrix matrix() const {
        ComplexMatrix m = pauli::from_letter(letters_[0]);
        for (std::size_t i = 1; i < letters_.size(); ++i) m = kron(m, pauli::from_letter(letters_[i]));
        return m;
    }

  private:
    std::string letters_;
};

/// Stabilizer generators Z_{i-1} X_i Z_{i+1} of the ring graph state (indices mod n).
inline std::vector<PauliString> ring_stabilizers(std::size_t n) {
    if (n < 3) throw InvalidInput("ring_stabilizers: need n >= 3");
    std::vector<PauliString> g;
    for (std::size_t i = 0; i < n; ++i)
        g.push_back(PauliString::placed(n, {{(i + n - 1) % n, 'Z'}, {i, 'X'}, {(i + 1) % n, 'Z'}}));
    return g;
}

/// rho_n = 2^-n prod_i (I + g_i).
inline HermitianMatrix ring_graph_state(std::size_t n) {
    if (n < 3) throw InvalidInput("ring_graph_state: need n >= 3, got " + std::to_string(n));
    if (n > 12) throw InvalidInput("ring_graph_state: dense construction limited to n <= 12");
    const auto dim = Eigen::Index(1) << n;
    ComplexMatrix rho = ComplexMatrix::Identity(dim, dim);
    for (const auto& g : ring_stabilizers(n)) rho = (rho + rho * g.matrix()).eval();
    return HermitianMatrix(ComplexMatrix(rho / double(dim)));
}

/// n qubits, every k-subset constrained to I/2^k.
inline ConsistencyInstance maximally_mixed_klocal_instance(std::size_t n, std::size_t k) {
    if (k < 1 || k >= n)
        throw InvalidInput("maximally_mixed_klocal_instance: need 1 <= k < n, got n = " + std::to_string(n) +
                           ", k = " + std::to_string(k));
    std::vector<MarginalConstraint> cs;
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + std::ptrdiff_t(k), true);
    // prev_permutation on a leading-true mask walks subsets in lexicographic order
    do {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) idx.push_back(i);
        cs.push_back({SubsystemSet(idx), HermitianMatrix::maximally_mixed(std::size_t(1) << k)});
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return ConsistencyInstance(SystemShape::qubits(n), std::move(cs));
}

/// All k-subsets of {0..n-1}, lexicographic.
inline std::vector<SubsystemSet> all_subsets(std::size_t n, std::size_t k) {
    std::vector<SubsystemSet> out;
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + std::ptrdiff_t(k), true);
    do {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) idx.push_back(i);
        out.emplace_back(std::move(idx));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return out;
}

struct FeasibleInstance {
    ConsistencyInstance instance;
    HermitianMatrix witness;
};

/// Ginibre-induced random state of the requested rank and its exact marginals on `subsets`.
inline FeasibleInstance random_feasible_instance(const SystemShape& shape, const std::vector<SubsystemSet>& subsets,
                                                 std::size_t global_rank, std::uint64_t seed) {
    if (global_rank < 1 || global_rank > shape.total())
        throw InvalidInput("random_feasible_instance: global_rank must be in [1, " + std::to_string(shape.total()) +
                           "]");
    SeededRng rng(seed);
    const auto witness = random_density(rng, shape.total(), global_rank);
    std::vector<MarginalConstraint> cs;
    for (const auto& s : subsets) cs.push_back({s, partial_trace(witness, shape, s)});
    return {ConsistencyInstance(shape, std::move(cs)), witness};
}

/// Random channel with `kraus_count` operators: the d_in columns of a Haar unitary
/// of size d_out * kraus_count, cut into d_out x d_in blocks.
inline ChannelRepr random_channel(const SystemShape& in, const SystemShape& out, std::size_t kraus_count,
                                  std::uint64_t seed) {
    const std::size_t di = in.total();
    const std::size_t d_out = out.total();
    if (kraus_count < 1 || d_out * kraus_count < di)
        throw InvalidInput("random_channel: need kraus_count >= 1 and d_out * kraus_count >= d_in");
    SeededRng rng(seed);
    const ComplexMatrix u = rng.haar_unitary(d_out * kraus_count);
    KrausSet ks;
    for (std::size_t k = 0; k < kraus_count; ++k)
        ks.operators.push_back(u.block(Eigen::Index(k * d_out), 0, Eigen::Index(d_out), Eigen::Index(di)));
    return choi_from_kraus(ks, in, out);
}

/// Single-subsystem local channels i -> i of a channel with matching input and output subsystem counts.
inline ChannelInstance diagonal_local_instance(const ChannelRepr& ch) {
    if (ch.in_shape().size() != ch.out_shape().size())
        throw InvalidInput("diagonal_local_instance: input and output subsystem counts differ");
    std::vector<LocalChannel> locals;
    for (std::size_t i = 0; i < ch.in_shape().size(); ++i)
        locals.push_back({SubsystemSet{i}, SubsystemSet{i}, sub_channel(ch, SubsystemSet{i}, SubsystemSet{i})});
    return ChannelInstance(ch.in_shape(), ch.out_shape(), std::move(locals));
}

} // namespace qmarginal
