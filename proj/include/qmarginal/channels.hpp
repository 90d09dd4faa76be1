#pragma once

// Channel consistency through the Choi-Jamiolkowski correspondence.
//
// Choi state (unit trace): sigma = (1/d_in) sum_{p,q} |p><q| (x) Psi(|p><q|),
// input factors first. A Kraus operator K corresponds to the vector
// v[p * d_out + o] = K(o, p), and sigma = (1/d_in) sum_k v_k v_k^dagger.

#include "constraint_system.hpp"
#include "hilbert.hpp"
#include "marginal.hpp"
#include "reduce.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qmarginal {

inline constexpr double kDefaultTpTol = 1e-8;

inline SystemShape concat(const SystemShape& a, const SystemShape& b) {
    std::vector<std::size_t> d = a.dims();
    d.insert(d.end(), b.dims().begin(), b.dims().end());
    return SystemShape(std::move(d));
}

inline SystemShape select(const SystemShape& shape, const SubsystemSet& set) {
    set.validate(shape);
    if (set.empty()) throw InvalidInput("select: empty subsystem set");
    std::vector<std::size_t> d;
    for (auto i : set) d.push_back(shape[i]);
    return SystemShape(std::move(d));
}

/// Complete-positivity or trace-preservation violation.
struct ChannelError : InvalidInput {
    using InvalidInput::InvalidInput;
};

class ChannelRepr {
  public:
    ChannelRepr(SystemShape in, SystemShape out, HermitianMatrix choi, double tp_tol = kDefaultTpTol)
        : in_(std::move(in)), out_(std::move(out)), choi_(std::move(choi)) {
        if (choi_.dim() != in_.total() * out_.total())
            throw DimensionMismatch("ChannelRepr: Choi matrix is " + std::to_string(choi_.dim()) +
                                    "-dimensional, expected " + std::to_string(in_.total() * out_.total()));
        const double lmin = min_eigenvalue(choi_);
        if (lmin < -tp_tol) throw ChannelError("complete positivity violated: Choi eigenvalue " + std::to_string(lmin));
        const double tp = tp_error();
        if (tp > tp_tol) throw ChannelError("trace preservation violated: ||Tr_out(choi) - I/d_in||_F = " +
                                            std::to_string(tp));
    }

    const SystemShape& in_shape() const { return in_; }
    const SystemShape& out_shape() const { return out_; }
    const HermitianMatrix& choi() const { return choi_; }
    std::size_t in_dim() const { return in_.total(); }
    std::size_t out_dim() const { return out_.total(); }
    SystemShape composite_shape() const { return concat(in_, out_); }

    double tp_error() const {
        const auto a = partial_trace(choi_.matrix(), composite_shape(), SubsystemSet::range(0, in_.size()));
        const auto n = Eigen::Index(in_dim());
        return (a - ComplexMatrix::Identity(n, n) / double(n)).norm();
    }

  private:
    SystemShape in_;
    SystemShape out_;
    HermitianMatrix choi_;
};

struct KrausSet {
    std::vector<ComplexMatrix> operators; // each d_out x d_in

    std::size_t size() const { return operators.size(); }

    ComplexMatrix completeness() const {
        if (operators.empty()) return {};
        ComplexMatrix s = ComplexMatrix::Zero(operators[0].cols(), operators[0].cols());
        for (const auto& k : operators) s += k.adjoint() * k;
        return s;
    }

    /// ||sum K^dagger K - I||_F
    double tp_error() const {
        const auto s = completeness();
        return (s - ComplexMatrix::Identity(s.rows(), s.cols())).norm();
    }
};

inline ChannelRepr choi_from_kraus(const KrausSet& kraus, const SystemShape& in, const SystemShape& out,
                                   double tp_tol = kDefaultTpTol) {
    const auto di = Eigen::Index(in.total());
    const auto d_out = Eigen::Index(out.total());
    if (kraus.operators.empty()) throw InvalidInput("choi_from_kraus: empty Kraus set");
    for (const auto& k : kraus.operators)
        if (k.rows() != d_out || k.cols() != di)
            throw DimensionMismatch("choi_from_kraus: Kraus operator is " + std::to_string(k.rows()) + "x" +
                                    std::to_string(k.cols()) + ", expected " + std::to_string(d_out) + "x" +
                                    std::to_string(di));
    const double tp = kraus.tp_error();
    if (tp > tp_tol) throw ChannelError("trace preservation violated: ||sum K^dagger K - I||_F = " + std::to_string(tp));
    ComplexMatrix sigma = ComplexMatrix::Zero(di * d_out, di * d_out);
    for (const auto& k : kraus.operators) {
        ComplexVector v(di * d_out);
        for (Eigen::Index p = 0; p < di; ++p)
            for (Eigen::Index o = 0; o < d_out; ++o) v[p * d_out + o] = k(o, p);
        sigma += v * v.adjoint();
    }
    sigma /= double(di);
    return ChannelRepr(in, out, HermitianMatrix(sigma), tp_tol);
}

/// Minimal Kraus set from the Choi eigendecomposition; its size is the numerical Kraus rank.
inline KrausSet kraus_from_choi(const ChannelRepr& ch, double rank_tol = kDefaultRankTol) {
    const auto e = eig_hermitian(ch.choi());
    const double thr = rank_threshold(e.eigenvalues, rank_tol);
    if (e.dim() > 0 && e.eigenvalues[0] < -kDefaultTpTol)
        throw ChannelError("complete positivity violated: Choi eigenvalue " + std::to_string(e.eigenvalues[0]));
    const auto di = Eigen::Index(ch.in_dim());
    const auto d_out = Eigen::Index(ch.out_dim());
    KrausSet ks;
    for (Eigen::Index j = e.eigenvalues.size() - 1; j >= 0; --j) {
        if (e.eigenvalues[j] <= thr) break;
        const double s = std::sqrt(double(di) * e.eigenvalues[j]);
        ComplexMatrix k(d_out, di);
        for (Eigen::Index p = 0; p < di; ++p)
            for (Eigen::Index o = 0; o < d_out; ++o) k(o, p) = s * e.eigenvectors(p * d_out + o, j);
        ks.operators.push_back(std::move(k));
    }
    return ks;
}

/// Psi(rho) = d_in * Tr_in[(rho^T (x) I) sigma]; works for any operator, not only states.
inline ComplexMatrix apply_channel(const ChannelRepr& ch, const ComplexMatrix& rho) {
    const auto di = Eigen::Index(ch.in_dim());
    const auto d_out = Eigen::Index(ch.out_dim());
    if (rho.rows() != di || rho.cols() != di)
        throw DimensionMismatch("apply_channel: input is " + std::to_string(rho.rows()) + "x" +
                                std::to_string(rho.cols()) + ", channel input dimension is " + std::to_string(di));
    const ComplexMatrix& s = ch.choi().matrix();
    ComplexMatrix out = ComplexMatrix::Zero(d_out, d_out);
    for (Eigen::Index p = 0; p < di; ++p)
        for (Eigen::Index q = 0; q < di; ++q)
            if (rho(p, q) != Complex(0)) out += rho(p, q) * s.block(p * d_out, q * d_out, d_out, d_out);
    return double(di) * out;
}

inline HermitianMatrix apply_channel(const ChannelRepr& ch, const HermitianMatrix& rho) {
    return HermitianMatrix(apply_channel(ch, rho.matrix()));
}

/// Choi state (1/d) sum_{p,q} |p><q| (x) f(|p><q|) of an arbitrary linear map.
template <class Map>
ComplexMatrix choi_from_action(Map&& f, std::size_t d_in, std::size_t d_out) {
    const auto di = Eigen::Index(d_in);
    const auto dout = Eigen::Index(d_out);
    ComplexMatrix sigma(di * dout, di * dout);
    for (Eigen::Index p = 0; p < di; ++p)
        for (Eigen::Index q = 0; q < di; ++q) {
            ComplexMatrix e = ComplexMatrix::Zero(di, di);
            e(p, q) = 1.0;
            sigma.block(p * dout, q * dout, dout, dout) = f(e);
        }
    return sigma / double(d_in);
}

/// Tr_{out \ out_keep} Psi(rho (x) I/d) with rho on in_keep and I on the other inputs.
inline ComplexMatrix sub_channel_action(const ChannelRepr& ch, const SubsystemSet& in_keep,
                                        const SubsystemSet& out_keep, const ComplexMatrix& rho) {
    const double rest = double(ch.in_dim()) / double(in_keep.dimension(ch.in_shape()));
    const ComplexMatrix lifted = embed_with_identity(rho, ch.in_shape(), in_keep) / rest;
    return partial_trace(apply_channel(ch, lifted), ch.out_shape(), out_keep);
}

/// The channel whose Choi state is the (in_keep, out_keep) marginal of ch's Choi state.
/// Cross-checked against the action formula on every matrix unit.
inline ChannelRepr sub_channel(const ChannelRepr& ch, const SubsystemSet& in_keep, const SubsystemSet& out_keep,
                               double tp_tol = kDefaultTpTol) {
    const auto in_sub = select(ch.in_shape(), in_keep);
    const auto out_sub = select(ch.out_shape(), out_keep);
    std::vector<std::size_t> keep = in_keep.indices();
    for (auto j : out_keep) keep.push_back(ch.in_shape().size() + j);
    ComplexMatrix marg = partial_trace(ch.choi().matrix(), ch.composite_shape(), SubsystemSet(keep));
    marg /= marg.trace().real();

    const ComplexMatrix via_action = choi_from_action(
        [&](const ComplexMatrix& e) { return sub_channel_action(ch, in_keep, out_keep, e); }, in_sub.total(),
        out_sub.total());
    if ((via_action - marg).norm() > 1e-9)
        throw NumericalError("sub_channel: Choi marginal and action formula disagree by " +
                             std::to_string((via_action - marg).norm()));
    return ChannelRepr(in_sub, out_sub, HermitianMatrix(marg), tp_tol);
}

struct LocalChannel {
    SubsystemSet in_subsystems;
    SubsystemSet out_subsystems;
    ChannelRepr channel;
};

class ChannelInstance {
  public:
    ChannelInstance(SystemShape in, SystemShape out, std::vector<LocalChannel> locals)
        : in_(std::move(in)), out_(std::move(out)), locals_(std::move(locals)) {
        for (std::size_t l = 0; l < locals_.size(); ++l) {
            const auto& lc = locals_[l];
            if (select(in_, lc.in_subsystems) != lc.channel.in_shape() ||
                select(out_, lc.out_subsystems) != lc.channel.out_shape())
                throw DimensionMismatch("ChannelInstance: local channel " + std::to_string(l) +
                                        " shapes do not match its subsystems");
        }
    }

    const SystemShape& in_shape() const { return in_; }
    const SystemShape& out_shape() const { return out_; }
    const std::vector<LocalChannel>& locals() const { return locals_; }

    /// floor(sqrt(sum_l (dim I_l dim J_l)^2))
    std::size_t kraus_bound() const {
        std::size_t s = 0;
        for (const auto& l : locals_) s += l.channel.choi().dim() * l.channel.choi().dim();
        return isqrt_floor(s);
    }
    /// Same with the global trace-preservation marginal (dim A)^2 added.
    std::size_t kraus_bound_with_tp() const {
        std::size_t s = in_.total() * in_.total();
        for (const auto& l : locals_) s += l.channel.choi().dim() * l.channel.choi().dim();
        return isqrt_floor(s);
    }

  private:
    SystemShape in_;
    SystemShape out_;
    std::vector<LocalChannel> locals_;
};

/// Marginal instance on A_1..A_n B_1..B_m whose solutions are Choi states of consistent global channels.
/// With include_tp the input marginal I/dim A is appended as a last constraint.
inline ConsistencyInstance channel_instance_to_marginal(const ChannelInstance& ci, bool include_tp = true) {
    const auto shape = concat(ci.in_shape(), ci.out_shape());
    const std::size_t n_in = ci.in_shape().size();
    std::vector<MarginalConstraint> cs;
    for (const auto& l : ci.locals()) {
        std::vector<std::size_t> idx = l.in_subsystems.indices();
        for (auto j : l.out_subsystems) idx.push_back(n_in + j);
        cs.push_back({SubsystemSet(idx), l.channel.choi()});
    }
    if (include_tp)
        cs.push_back({SubsystemSet::range(0, n_in), HermitianMatrix::maximally_mixed(ci.in_shape().total())});
    return ConsistencyInstance(shape, std::move(cs));
}

struct ChannelReductionOptions {
    FeasibilityOptions feasibility{.max_iters = 5000, .tol = 1e-10};
    ReductionOptions reduction{.repair_tol = 1e-10};
    bool include_tp = true;
    double tp_tol = kDefaultTpTol;
};

struct ChannelReductionResult {
    FeasibilityResult feasibility;
    std::optional<ChannelRepr> channel;
    KrausSet kraus;
    ReductionTrace trace;
    std::size_t local_bound = 0;  // floor(sqrt(sum_l (dim I_l dim J_l)^2))
    std::size_t tp_bound = 0;     // same plus (dim A)^2
    std::vector<double> subchannel_residuals;

    bool ok() const { return channel.has_value(); }
};

/// Local channels -> marginal instance -> feasible Choi state -> rank reduction -> Kraus operators.
inline ChannelReductionResult reduce_kraus_rank(const ChannelInstance& ci, const ChannelReductionOptions& opts = {}) {
    ChannelReductionResult res;
    res.local_bound = ci.kraus_bound();
    res.tp_bound = ci.kraus_bound_with_tp();
    const auto inst = channel_instance_to_marginal(ci, opts.include_tp);
    const auto sys = inst.system();
    res.feasibility = find_feasible(sys, opts.feasibility);
    if (!res.feasibility.feasible) return res;

    auto reduced = reduce_rank(res.feasibility.state, sys, opts.reduction);
    res.trace = reduced.trace;
    ChannelRepr ch(ci.in_shape(), ci.out_shape(), reduced.state, opts.tp_tol);
    res.kraus = kraus_from_choi(ch, opts.reduction.rank_tol);
    for (const auto& l : ci.locals()) {
        const auto sub = sub_channel(ch, l.in_subsystems, l.out_subsystems, opts.tp_tol);
        res.subchannel_residuals.push_back((sub.choi().matrix() - l.channel.choi().matrix()).norm());
    }
    res.channel = std::move(ch);
    return res;
}

} // namespace qmarginal
