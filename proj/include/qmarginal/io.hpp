#pragma once

// JSON documents for instances, states/solutions and channels. Complex
// matrices are stored as {"re": rows, "im": rows}, row-major.
// Requires nlohmann/json (json.hpp) on the include path.

#include "channels.hpp"
#include "marginal.hpp"
#include "reduce.hpp"
#include "sector.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qmarginal::io {

using Json = nlohmann::json;

/// Malformed or structurally invalid document.
struct ParseError : InvalidInput {
    using InvalidInput::InvalidInput;
};

inline Json matrix_to_json(const ComplexMatrix& m) {
    Json re = Json::array();
    Json im = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json rr = Json::array();
        Json ri = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ri.push_back(m(i, j).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    return Json{{"re", std::move(re)}, {"im", std::move(im)}};
}

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing field \"" + key + "\"");
    return *it;
}

inline std::vector<std::size_t> index_array(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an integer array");
    std::vector<std::size_t> out;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ParseError(where + ": expected non-negative integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

inline std::size_t count(const Json& j, const char* key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ParseError(where + ": \"" + key + "\" must be a non-negative integer");
    return v.get<std::size_t>();
}

inline RealMatrix real_rows(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected a 2-D array");
    const auto rows = Eigen::Index(j.size());
    const auto cols = rows > 0 && j[0].is_array() ? Eigen::Index(j[0].size()) : 0;
    RealMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& r = j[std::size_t(i)];
        if (!r.is_array() || Eigen::Index(r.size()) != cols) throw ParseError(where + ": ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) {
            if (!r[std::size_t(k)].is_number()) throw ParseError(where + ": non-numeric entry");
            m(i, k) = r[std::size_t(k)].get<double>();
        }
    }
    return m;
}

inline SystemShape shape_from(const std::vector<std::size_t>& dims, const std::string& where) {
    try {
        return SystemShape(dims);
    } catch (const InvalidInput& e) {
        throw ParseError(where + ": " + e.what());
    }
}

} // namespace detail

inline ComplexMatrix matrix_from_json(const Json& j, const std::string& where = "matrix") {
    const RealMatrix re = detail::real_rows(detail::field(j, "re", where), where + ".re");
    const RealMatrix im = detail::real_rows(detail::field(j, "im", where), where + ".im");
    if (re.rows() != im.rows() || re.cols() != im.cols())
        throw ParseError(where + ": re is " + std::to_string(re.rows()) + "x" + std::to_string(re.cols()) +
                         ", im is " + std::to_string(im.rows()) + "x" + std::to_string(im.cols()));
    ComplexMatrix m(re.rows(), re.cols());
    m.real() = re;
    m.imag() = im;
    return m;
}

inline ComplexMatrix square_matrix_from_json(const Json& j, const std::string& where) {
    auto m = matrix_from_json(j, where);
    if (m.rows() != m.cols())
        throw ParseError(where + ": expected a square matrix, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
    return m;
}

inline HermitianMatrix hermitian_from_json(const Json& j, const std::string& where) {
    try {
        return HermitianMatrix(square_matrix_from_json(j, where));
    } catch (const ParseError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ParseError(where + ": " + e.what());
    }
}

/// Parses text; syntax errors carry nlohmann's byte-position message.
inline Json parse_text(const std::string& text, const std::string& source = "<input>") {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

inline Json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

inline void write_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Instances

enum class InstanceKind { qudit, fermionic, bosonic };

inline const char* to_string(InstanceKind k) {
    switch (k) {
    case InstanceKind::fermionic: return "fermionic";
    case InstanceKind::bosonic: return "bosonic";
    default: return "qudit";
    }
}

struct ConstraintEntry {
    std::vector<std::size_t> subsystems;
    ComplexMatrix matrix;
};

/// A qudit instance, or a sector instance (N particles on d levels, k-particle
/// marginal given in the k-particle sector basis on subsystems 0..k-1).
struct InstanceDocument {
    InstanceKind kind = InstanceKind::qudit;
    std::vector<std::size_t> dims;
    std::vector<ConstraintEntry> constraints;
    std::size_t particles = 0; // N
    std::size_t levels = 0;    // d
    std::size_t marginal_particles = 0; // k

    bool is_sector() const { return kind != InstanceKind::qudit; }
    Statistics statistics() const {
        return kind == InstanceKind::fermionic ? Statistics::fermionic : Statistics::bosonic;
    }

    /// Dimension of the state the instance asks for.
    std::size_t state_dim() const {
        if (is_sector()) return sector_dimension(statistics(), particles, levels);
        return detail::shape_from(dims, "dims").total();
    }

    ConsistencyInstance to_instance() const {
        if (is_sector()) throw InvalidInput("InstanceDocument: sector instance has no qudit form");
        const auto shape = detail::shape_from(dims, "dims");
        std::vector<MarginalConstraint> cs;
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            const std::string where = "constraints[" + std::to_string(i) + "]";
            SubsystemSet set;
            try {
                set = SubsystemSet::from_unsorted(constraints[i].subsystems);
                set.validate(shape);
            } catch (const InvalidInput& e) {
                throw ParseError(where + ".subsystems: " + e.what());
            }
            if (set.empty()) throw ParseError(where + ".subsystems: empty");
            if (set.indices() != constraints[i].subsystems)
                throw ParseError(where + ".subsystems: must be strictly increasing");
            cs.push_back({set, HermitianMatrix(constraints[i].matrix)});
        }
        return ConsistencyInstance(shape, std::move(cs));
    }

    SectorInstance to_sector() const {
        if (!is_sector()) throw InvalidInput("InstanceDocument: not a sector instance");
        if (constraints.size() != 1) throw ParseError("sector instance: exactly one constraint expected");
        return SectorInstance(statistics(), particles, levels, marginal_particles,
                              HermitianMatrix(constraints[0].matrix));
    }

    ConstraintSystem system() const { return is_sector() ? to_sector().system() : to_instance().system(); }

    std::vector<std::size_t> target_ranks(double rank_tol) const {
        std::vector<std::size_t> r;
        for (const auto& c : constraints) r.push_back(numerical_rank(HermitianMatrix(c.matrix), rank_tol));
        return r;
    }

    std::size_t barvinok() const {
        std::size_t s = 0;
        for (const auto& c : constraints) s += std::size_t(c.matrix.rows() * c.matrix.rows());
        return isqrt_floor(2 * s);
    }
};

inline InstanceDocument instance_document(const ConsistencyInstance& inst) {
    InstanceDocument doc;
    doc.dims = inst.shape().dims();
    for (const auto& c : inst.constraints()) doc.constraints.push_back({c.subsystems.indices(), c.target.matrix()});
    return doc;
}

inline InstanceDocument instance_document(const SectorInstance& inst) {
    InstanceDocument doc;
    doc.kind = inst.statistics == Statistics::fermionic ? InstanceKind::fermionic : InstanceKind::bosonic;
    doc.dims.assign(inst.particles, inst.levels);
    doc.particles = inst.particles;
    doc.levels = inst.levels;
    doc.marginal_particles = inst.marginal_particles;
    std::vector<std::size_t> sub(inst.marginal_particles);
    for (std::size_t i = 0; i < sub.size(); ++i) sub[i] = i;
    doc.constraints.push_back({sub, inst.target.matrix()});
    return doc;
}

inline Json to_json(const InstanceDocument& doc) {
    Json j;
    j["kind"] = to_string(doc.kind);
    j["dims"] = doc.dims;
    if (doc.is_sector()) {
        j["N"] = doc.particles;
        j["d"] = doc.levels;
        j["k"] = doc.marginal_particles;
    }
    Json cs = Json::array();
    for (const auto& c : doc.constraints) cs.push_back({{"subsystems", c.subsystems}, {"matrix", matrix_to_json(c.matrix)}});
    j["constraints"] = std::move(cs);
    return j;
}

inline InstanceDocument instance_from_json(const Json& j) {
    InstanceDocument doc;
    if (!j.is_object()) throw ParseError("instance: expected an object");
    if (auto it = j.find("kind"); it != j.end()) {
        if (!it->is_string()) throw ParseError("instance.kind: expected a string");
        const auto k = it->get<std::string>();
        if (k == "qudit") doc.kind = InstanceKind::qudit;
        else if (k == "fermionic") doc.kind = InstanceKind::fermionic;
        else if (k == "bosonic") doc.kind = InstanceKind::bosonic;
        else throw ParseError("instance.kind: unknown kind \"" + k + "\"");
    }
    doc.dims = detail::index_array(detail::field(j, "dims", "instance"), "instance.dims");
    const auto shape = detail::shape_from(doc.dims, "instance.dims");
    if (doc.is_sector()) {
        doc.particles = detail::count(j, "N", "instance");
        doc.levels = detail::count(j, "d", "instance");
        doc.marginal_particles = detail::count(j, "k", "instance");
        if (doc.dims != std::vector<std::size_t>(doc.particles, doc.levels))
            throw ParseError("instance.dims: sector instance needs N copies of d");
    }
    const auto& cs = detail::field(j, "constraints", "instance");
    if (!cs.is_array()) throw ParseError("instance.constraints: expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const std::string where = "constraints[" + std::to_string(i) + "]";
        ConstraintEntry e;
        e.subsystems = detail::index_array(detail::field(cs[i], "subsystems", where), where + ".subsystems");
        e.matrix = square_matrix_from_json(detail::field(cs[i], "matrix", where), where + ".matrix");
        std::size_t want = 0;
        if (doc.is_sector()) {
            try {
                want = sector_dimension(doc.statistics(), e.subsystems.size(), doc.levels);
            } catch (const InvalidInput& err) {
                throw ParseError(where + ": " + err.what());
            }
        } else {
            want = 1;
            for (auto s : e.subsystems) {
                if (s >= shape.size()) throw ParseError(where + ".subsystems: index " + std::to_string(s) + " out of range");
                want *= shape[s];
            }
        }
        if (std::size_t(e.matrix.rows()) != want)
            throw ParseError(where + ".matrix: " + std::to_string(e.matrix.rows()) + "x" +
                             std::to_string(e.matrix.cols()) + " does not match subsystem dimension " +
                             std::to_string(want));
        doc.constraints.push_back(std::move(e));
    }
    return doc;
}

// ---------------------------------------------------------------------------
// States and solutions

struct TraceEntry {
    std::size_t rank_before = 0;
    std::size_t rank_after = 0;
    double lambda = 0.0;
};

struct Bounds {
    std::size_t theorem1 = 0;
    std::size_t barvinok = 0;
    std::size_t achieved = 0;
};

/// A state, optionally with the provenance of a solve (residuals, trace, bounds, settings).
struct SolutionDocument {
    ComplexMatrix matrix;
    std::size_t rank = 0;
    RealVector eigenvalues;
    std::vector<double> residuals;
    std::vector<TraceEntry> trace;
    std::optional<Bounds> bounds;
    Json settings = Json::object();
    Json meta = Json::object(); // free-form descriptive fields (kind, dims, ...)
};

inline SolutionDocument state_document(const HermitianMatrix& rho, double rank_tol = kDefaultRankTol) {
    SolutionDocument doc;
    doc.matrix = rho.matrix();
    const auto e = eig_hermitian(rho);
    doc.eigenvalues = e.eigenvalues;
    doc.rank = numerical_rank(e.eigenvalues, rank_tol);
    return doc;
}

inline Json to_json(const SolutionDocument& doc) {
    Json j = doc.meta;
    j["matrix"] = matrix_to_json(doc.matrix);
    j["rank"] = doc.rank;
    j["eigenvalues"] = std::vector<double>(doc.eigenvalues.data(), doc.eigenvalues.data() + doc.eigenvalues.size());
    j["residuals"] = doc.residuals;
    Json tr = Json::array();
    for (const auto& t : doc.trace)
        tr.push_back({{"rank_before", t.rank_before}, {"rank_after", t.rank_after}, {"lambda", t.lambda}});
    j["trace"] = std::move(tr);
    if (doc.bounds)
        j["bounds"] = {{"theorem1", doc.bounds->theorem1},
                       {"barvinok", doc.bounds->barvinok},
                       {"achieved", doc.bounds->achieved}};
    if (!doc.settings.empty()) j["settings"] = doc.settings;
    return j;
}

inline SolutionDocument solution_from_json(const Json& j) {
    SolutionDocument doc;
    doc.matrix = square_matrix_from_json(detail::field(j, "matrix", "solution"), "solution.matrix");
    if (auto it = j.find("rank"); it != j.end()) doc.rank = detail::count(j, "rank", "solution");
    if (auto it = j.find("eigenvalues"); it != j.end()) {
        if (!it->is_array()) throw ParseError("solution.eigenvalues: expected an array");
        doc.eigenvalues.resize(Eigen::Index(it->size()));
        for (std::size_t i = 0; i < it->size(); ++i) doc.eigenvalues[Eigen::Index(i)] = (*it)[i].get<double>();
    }
    if (auto it = j.find("residuals"); it != j.end()) doc.residuals = it->get<std::vector<double>>();
    if (auto it = j.find("trace"); it != j.end()) {
        for (const auto& t : *it)
            doc.trace.push_back({detail::count(t, "rank_before", "trace"), detail::count(t, "rank_after", "trace"),
                                 detail::field(t, "lambda", "trace").get<double>()});
    }
    if (auto it = j.find("bounds"); it != j.end()) {
        doc.bounds = Bounds{detail::count(*it, "theorem1", "bounds"), detail::count(*it, "barvinok", "bounds"),
                            detail::count(*it, "achieved", "bounds")};
        if (doc.bounds->achieved != doc.rank) throw ParseError("solution.bounds.achieved differs from rank");
    }
    if (auto it = j.find("settings"); it != j.end()) doc.settings = *it;
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* known[] = {"matrix", "rank", "eigenvalues", "residuals", "trace", "bounds", "settings"};
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) doc.meta[it.key()] = it.value();
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Channels

inline Json to_json(const ChannelRepr& ch) {
    return Json{{"in_dims", ch.in_shape().dims()},
                {"out_dims", ch.out_shape().dims()},
                {"choi", matrix_to_json(ch.choi().matrix())}};
}

inline ChannelRepr channel_from_json(const Json& j, double tp_tol = kDefaultTpTol, const std::string& where = "channel") {
    const auto in = detail::shape_from(detail::index_array(detail::field(j, "in_dims", where), where + ".in_dims"),
                                       where + ".in_dims");
    const auto out = detail::shape_from(
        detail::index_array(detail::field(j, "out_dims", where), where + ".out_dims"), where + ".out_dims");
    const auto choi = square_matrix_from_json(detail::field(j, "choi", where), where + ".choi");
    if (std::size_t(choi.rows()) != in.total() * out.total())
        throw ParseError(where + ".choi: " + std::to_string(choi.rows()) + "-dimensional, expected " +
                         std::to_string(in.total() * out.total()));
    return ChannelRepr(in, out, HermitianMatrix(choi), tp_tol);
}

inline Json to_json(const KrausSet& ks, const SystemShape& in, const SystemShape& out) {
    Json ops = Json::array();
    for (const auto& k : ks.operators) ops.push_back(matrix_to_json(k));
    return Json{{"in_dims", in.dims()}, {"out_dims", out.dims()}, {"kraus", std::move(ops)}};
}

inline KrausSet kraus_from_json(const Json& j) {
    const auto& ops = detail::field(j, "kraus", "kraus document");
    if (!ops.is_array()) throw ParseError("kraus: expected an array");
    KrausSet ks;
    for (std::size_t i = 0; i < ops.size(); ++i) ks.operators.push_back(matrix_from_json(ops[i], "kraus[" + std::to_string(i) + "]"));
    return ks;
}

inline Json to_json(const ChannelInstance& ci) {
    Json locals = Json::array();
    for (const auto& l : ci.locals()) {
        locals.push_back({{"in_subsystems", l.in_subsystems.indices()},
                          {"out_subsystems", l.out_subsystems.indices()},
                          {"choi", matrix_to_json(l.channel.choi().matrix())}});
    }
    return Json{{"in_dims", ci.in_shape().dims()}, {"out_dims", ci.out_shape().dims()}, {"locals", std::move(locals)}};
}

inline ChannelInstance channel_instance_from_json(const Json& j, double tp_tol = kDefaultTpTol) {
    const auto in = detail::shape_from(detail::index_array(detail::field(j, "in_dims", "channel instance"), "in_dims"),
                                       "in_dims");
    const auto out = detail::shape_from(
        detail::index_array(detail::field(j, "out_dims", "channel instance"), "out_dims"), "out_dims");
    const auto& ls = detail::field(j, "locals", "channel instance");
    if (!ls.is_array()) throw ParseError("locals: expected an array");
    std::vector<LocalChannel> locals;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        const std::string where = "locals[" + std::to_string(i) + "]";
        SubsystemSet a;
        SubsystemSet b;
        try {
            a = SubsystemSet(detail::index_array(detail::field(ls[i], "in_subsystems", where), where + ".in_subsystems"));
            b = SubsystemSet(detail::index_array(detail::field(ls[i], "out_subsystems", where), where + ".out_subsystems"));
            a.validate(in);
            b.validate(out);
        } catch (const ParseError&) {
            throw;
        } catch (const InvalidInput& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (a.empty() || b.empty()) throw ParseError(where + ": empty subsystem list");
        const auto li = select(in, a);
        const auto lo = select(out, b);
        const auto choi = square_matrix_from_json(detail::field(ls[i], "choi", where), where + ".choi");
        if (std::size_t(choi.rows()) != li.total() * lo.total())
            throw ParseError(where + ".choi: " + std::to_string(choi.rows()) + "-dimensional, expected " +
                             std::to_string(li.total() * lo.total()));
        locals.push_back({a, b, ChannelRepr(li, lo, HermitianMatrix(choi), tp_tol)});
    }
    return ChannelInstance(in, out, std::move(locals));
}

} // namespace qmarginal::io
