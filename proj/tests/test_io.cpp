#include "qmarginal/gallery.hpp"
#include "qmarginal/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace qmarginal;
using io::Json;

namespace {

// Structural equality with numbers compared to a relative tolerance.
bool json_near(const Json& a, const Json& b, double tol, std::string path = "$") {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>();
        const double y = b.get<double>();
        if (std::abs(x - y) <= tol * std::max(1.0, std::abs(y))) return true;
        ADD_FAILURE() << path << ": " << x << " vs " << y;
        return false;
    }
    if (a.type() != b.type()) {
        ADD_FAILURE() << path << ": type mismatch";
        return false;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            ADD_FAILURE() << path << ": length " << a.size() << " vs " << b.size();
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!json_near(a[i], b[i], tol, path + "[" + std::to_string(i) + "]")) return false;
        return true;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) {
            ADD_FAILURE() << path << ": key count " << a.size() << " vs " << b.size();
            return false;
        }
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) {
                ADD_FAILURE() << path << ": missing key " << it.key();
                return false;
            }
            if (!json_near(it.value(), b[it.key()], tol, path + "." + it.key())) return false;
        }
        return true;
    }
    if (a != b) ADD_FAILURE() << path << ": " << a.dump() << " vs " << b.dump();
    return a == b;
}

ComplexMatrix awkward_matrix() {
    ComplexMatrix m(2, 2);
    m << Complex(0.1, 1.0 / 3.0), Complex(std::nextafter(1.0, 2.0), -0.0),
        Complex(std::numeric_limits<double>::denorm_min(), 1e300), Complex(-2.5e-17, 123456789.123456789);
    return m;
}

} // namespace

TEST(MatrixJson, RoundTripBitExact) {
    const ComplexMatrix m = awkward_matrix();
    const Json j = Json::parse(io::matrix_to_json(m).dump());
    const ComplexMatrix back = io::matrix_from_json(j);
    ASSERT_EQ(back.rows(), 2);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_EQ(back(i).real(), m(i).real());
        EXPECT_EQ(back(i).imag(), m(i).imag());
    }
}

TEST(MatrixJson, RejectsShapeErrors) {
    EXPECT_THROW(io::matrix_from_json(Json::parse(R"({"re": [[1, 2], [3]], "im": [[0, 0], [0]]})")), io::ParseError);
    EXPECT_THROW(io::matrix_from_json(Json::parse(R"({"re": [[1]], "im": [[0, 0]]})")), io::ParseError);
    EXPECT_THROW(io::matrix_from_json(Json::parse(R"({"re": [[1]]})")), io::ParseError);
    EXPECT_THROW(io::matrix_from_json(Json::parse(R"({"re": [["a"]], "im": [[0]]})")), io::ParseError);
}

TEST(ParseText, ReportsPosition) {
    try {
        io::parse_text(R"({"dims": [2, 2], "constraints": [)", "inst.json");
        FAIL();
    } catch (const io::ParseError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("inst.json"), std::string::npos);
        EXPECT_NE(what.find("line 1, column"), std::string::npos) << what;
    }
}

TEST(InstanceDocument, RoundTripBitExact) {
    const auto fi = random_feasible_instance(SystemShape{2, 3}, {SubsystemSet{0}, SubsystemSet{0, 1}}, 3, 5);
    const auto doc = io::instance_document(fi.instance);
    const Json j = io::to_json(doc);
    const auto back = io::instance_from_json(Json::parse(j.dump()));
    EXPECT_EQ(io::to_json(back), j);
    ASSERT_EQ(back.constraints.size(), 2u);
    EXPECT_EQ(back.constraints[1].matrix, doc.constraints[1].matrix);
    const auto inst = back.to_instance();
    EXPECT_EQ(inst.shape(), fi.instance.shape());
}

TEST(InstanceDocument, SectorRoundTrip) {
    const SectorInstance si(Statistics::bosonic, 7, 2, 2, bosonic_maximally_mixed_2());
    const Json j = io::to_json(io::instance_document(si));
    EXPECT_EQ(j["kind"], "bosonic");
    EXPECT_EQ(j["N"], 7);
    const auto back = io::instance_from_json(j);
    EXPECT_TRUE(back.is_sector());
    EXPECT_EQ(back.state_dim(), 8u);
    EXPECT_EQ(back.to_sector().target.matrix(), si.target.matrix());
    EXPECT_EQ(io::to_json(back), j);
}

TEST(InstanceDocument, Validation) {
    EXPECT_THROW(io::instance_from_json(Json::parse(R"({"constraints": []})")), io::ParseError);
    EXPECT_THROW(io::instance_from_json(Json::parse(R"({"dims": [2, 1], "constraints": []})")), io::ParseError);
    EXPECT_THROW(io::instance_from_json(Json::parse(R"({"dims": [2], "kind": "anyonic", "constraints": []})")),
                 io::ParseError);
    // subsystem dimension mismatch
    EXPECT_THROW(io::instance_from_json(Json::parse(
                     R"({"dims": [2, 2], "constraints": [{"subsystems": [0], "matrix": {"re": [[1]], "im": [[0]]}}]})")),
                 io::ParseError);
    // out of range subsystem
    EXPECT_THROW(io::instance_from_json(Json::parse(
                     R"({"dims": [2], "constraints": [{"subsystems": [3], "matrix": {"re": [[1]], "im": [[0]]}}]})")),
                 io::ParseError);
    // sector dims must be N copies of d
    EXPECT_THROW(io::instance_from_json(Json::parse(R"({"kind": "bosonic", "dims": [2, 2], "N": 3, "d": 2, "k": 2,
                                                        "constraints": []})")),
                 io::ParseError);
}

TEST(InstanceDocument, UnsortedSubsystemsRejectedOnConversion) {
    auto doc = io::instance_document(maximally_mixed_klocal_instance(3, 2));
    doc.constraints[0].subsystems = {1, 0};
    EXPECT_THROW(doc.to_instance(), io::ParseError);
}

TEST(InstanceDocument, EmptyConstraintList) {
    const auto doc = io::instance_from_json(Json::parse(R"({"dims": [2, 2], "constraints": []})"));
    EXPECT_TRUE(doc.constraints.empty());
    EXPECT_EQ(doc.barvinok(), 0u);
    EXPECT_EQ(doc.to_instance().size(), 0u);
}

TEST(SolutionDocument, RoundTripBitExact) {
    auto sol = io::state_document(ring_graph_state(3));
    sol.residuals = {1e-17, 0.25};
    sol.trace = {{8, 5, 0.125}, {5, 3, 1.0 / 3.0}};
    sol.bounds = io::Bounds{6, 8, sol.rank};
    sol.settings = {{"tol", 1e-8}};
    sol.meta = {{"kind", "qudit"}};
    const Json j = io::to_json(sol);
    const auto back = io::solution_from_json(Json::parse(j.dump()));
    EXPECT_EQ(io::to_json(back), j);
    EXPECT_EQ(back.matrix, sol.matrix);
    EXPECT_EQ(back.eigenvalues, sol.eigenvalues);
    EXPECT_EQ(back.trace[1].lambda, 1.0 / 3.0);
}

TEST(SolutionDocument, AchievedMustEqualRank) {
    auto j = io::to_json(io::state_document(HermitianMatrix::maximally_mixed(2)));
    j["bounds"] = {{"theorem1", 1}, {"barvinok", 2}, {"achieved", 1}};
    EXPECT_THROW(io::solution_from_json(j), io::ParseError);
}

TEST(ChannelDocuments, RoundTrip) {
    const auto ch = random_channel(SystemShape::qubits(2), SystemShape{3}, 4, 2);
    const Json j = io::to_json(ch);
    const auto back = io::channel_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back.choi().matrix(), ch.choi().matrix());
    EXPECT_EQ(io::to_json(back), j);

    const auto ks = kraus_from_choi(ch);
    const Json jk = io::to_json(ks, ch.in_shape(), ch.out_shape());
    const auto kb = io::kraus_from_json(Json::parse(jk.dump()));
    ASSERT_EQ(kb.size(), ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) EXPECT_EQ(kb.operators[i], ks.operators[i]);

    const auto ci = diagonal_local_instance(random_channel(SystemShape::qubits(2), SystemShape::qubits(2), 3, 4));
    const Json jc = io::to_json(ci);
    EXPECT_EQ(io::to_json(io::channel_instance_from_json(Json::parse(jc.dump()))), jc);
}

TEST(ChannelDocuments, ViolationsSurfaceAsChannelError) {
    Json j = io::to_json(random_channel(SystemShape{2}, SystemShape{2}, 2, 1));
    j["choi"]["re"][0][0] = j["choi"]["re"][0][0].get<double>() + 0.1;
    EXPECT_THROW(io::channel_from_json(j), ChannelError);
    j["in_dims"] = {3};
    EXPECT_THROW(io::channel_from_json(j), io::ParseError);
}

TEST(Golden, RandomFeasibleInstance) {
    const auto fi = random_feasible_instance(SystemShape::qubits(3), all_subsets(3, 2), 4, 7);
    const Json got = io::to_json(io::instance_document(fi.instance));
    const Json want = io::read_file(std::string(QMARGINAL_GOLDEN_DIR) + "/random_feasible_n3_rank4_seed7.json");
    EXPECT_TRUE(json_near(got, want, 1e-12));
}

TEST(Golden, BosonSigma) {
    const Json got = io::to_json(io::state_document(bosonic_sigma_p(7, 2)))["matrix"];
    const Json want = io::read_file(std::string(QMARGINAL_GOLDEN_DIR) + "/boson_sigma_N7_p2.json")["matrix"];
    EXPECT_TRUE(json_near(got, want, 1e-14));
}
