// qmarginal: command-line front end.
// Exit codes: 0 success, 1 math-level failure, 2 input-level failure.

#include "qmarginal/gallery.hpp"
#include "qmarginal/io.hpp"
#include "qmarginal/qmarginal.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace qmarginal;
using io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kMathFailure = 1;
constexpr int kInputFailure = 2;

struct Settings {
    double tol = 1e-8;
    double rank_tol = kDefaultRankTol;
    std::size_t max_iters = 5000;
    std::uint64_t seed = 0;
    bool no_reduce = false;
    std::string output;
    std::string format = "json";

    Json to_json() const {
        return Json{{"tol", tol}, {"rank_tol", rank_tol}, {"max_iters", max_iters}, {"seed", seed},
                    {"reduce", !no_reduce}};
    }
};

void emit(const Json& doc, const std::string& output) {
    if (output.empty() || output == "-") std::cout << doc.dump(2) << "\n";
    else io::write_file(output, doc);
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

void print_report(std::ostream& os, const ResidualReport& rep) {
    for (std::size_t i = 0; i < rep.constraint_residuals.size(); ++i)
        os << "constraint " << i << ": residual " << fmt(rep.constraint_residuals[i]) << "\n";
    os << "psd_violation: " << fmt(rep.psd_violation) << "\n";
    os << "trace_error: " << fmt(rep.trace_error) << "\n";
    os << "worst: " << fmt(rep.worst()) << "\n";
}

std::vector<double> constraint_residuals(const ConstraintSystem& sys, const HermitianMatrix& rho) {
    return sys.constraint_residuals(rho.matrix());
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& instance_file, const std::string& solution_file, const Settings& s) {
    const auto doc = io::instance_from_json(io::read_file(instance_file));
    const auto sol = io::solution_from_json(io::read_file(solution_file));
    if (std::size_t(sol.matrix.rows()) != doc.state_dim())
        throw DimensionMismatch("check: solution is " + std::to_string(sol.matrix.rows()) +
                                "-dimensional, the instance needs " + std::to_string(doc.state_dim()));
    const auto sys = doc.system();
    const auto rep = sys.residuals(HermitianMatrix(sol.matrix));
    print_report(std::cout, rep);
    const bool ok = rep.consistent(s.tol);
    std::cout << "status: " << (ok ? "consistent" : "inconsistent") << " at tol " << s.tol << "\n";
    return ok ? kOk : kMathFailure;
}

int cmd_solve(const std::string& instance_file, const Settings& s) {
    const auto doc = io::instance_from_json(io::read_file(instance_file));
    const auto sys = doc.system();

    FeasibilityOptions fo;
    fo.max_iters = s.max_iters;
    fo.tol = s.tol;
    fo.seed = s.seed;
    const auto feas = find_feasible(sys, fo);
    if (!feas.feasible) {
        std::cerr << "infeasible: " << feas.diagnosis << " after " << feas.iterations
                  << " iterations, best residual " << fmt(feas.best_residual) << "\n";
        print_report(std::cerr, feas.residual);
        return kMathFailure;
    }

    HermitianMatrix rho = feas.state;
    ReductionTrace trace;
    if (!s.no_reduce) {
        ReductionOptions ro;
        ro.rank_tol = s.rank_tol;
        ro.repair_tol = s.tol;
        ro.seed = s.seed;
        auto res = doc.is_sector() ? reduce_rank_sector(rho, doc.to_sector(), ro) : reduce_rank(rho, sys, ro);
        rho = res.state;
        trace = res.trace;
    }

    auto sol = io::state_document(rho, s.rank_tol);
    sol.residuals = constraint_residuals(sys, rho);
    for (const auto& st : trace.steps) sol.trace.push_back({st.rank_before, st.rank_after, st.lambda});
    sol.bounds = io::Bounds{theorem1_bound(doc.target_ranks(s.rank_tol)), doc.barvinok(), sol.rank};
    sol.settings = s.to_json();
    sol.meta["kind"] = io::to_string(doc.kind);
    sol.meta["dims"] = doc.dims;
    if (doc.is_sector()) {
        sol.meta["N"] = doc.particles;
        sol.meta["d"] = doc.levels;
    }
    sol.meta["feasibility"] = {{"iterations", feas.iterations}, {"diagnosis", feas.diagnosis}};
    emit(io::to_json(sol), s.output);

    std::cerr << "feasible after " << feas.iterations << " iterations\n";
    if (!trace.steps.empty()) {
        std::cerr << "step  rank_before  rank_after  lambda\n";
        for (std::size_t i = 0; i < trace.steps.size(); ++i) {
            const auto& st = trace.steps[i];
            std::cerr << i << "  " << st.rank_before << "  " << st.rank_after << "  " << fmt(st.lambda) << "\n";
        }
    }
    std::cerr << "rank " << sol.rank << " (theorem1 bound " << sol.bounds->theorem1 << ", barvinok bound "
              << sol.bounds->barvinok << ")\n";
    const auto rep = sys.residuals(rho);
    std::cerr << "worst residual " << fmt(rep.worst()) << "\n";
    return rep.consistent(std::max(s.tol, 1e-7)) ? kOk : kMathFailure;
}

int cmd_bounds(const std::string& instance_file, const Settings& s) {
    const auto doc = io::instance_from_json(io::read_file(instance_file));
    if (doc.constraints.empty()) {
        std::cout << "theorem1: 0 (degenerate), barvinok: 0\n";
        return kOk;
    }
    std::cout << "theorem1: " << theorem1_bound(doc.target_ranks(s.rank_tol)) << ", barvinok: " << doc.barvinok()
              << "\n";
    return kOk;
}

struct ExampleArgs {
    std::string name;
    std::size_t n = 5;
    bool n_given = false;
    std::size_t k = 2;
    std::size_t particles = 0;
    long long p = -1;
    std::size_t rank = 0;
    std::string companion;
};

Json qubit_state_meta(std::size_t n) { return Json{{"kind", "qudit"}, {"dims", std::vector<std::size_t>(n, 2)}}; }

int cmd_example(const ExampleArgs& a, const Settings& s) {
    if (a.name == "ring-graph") {
        auto sol = io::state_document(ring_graph_state(a.n), s.rank_tol);
        sol.meta = qubit_state_meta(a.n);
        emit(io::to_json(sol), s.output);
        if (!a.companion.empty())
            io::write_file(a.companion, io::to_json(io::instance_document(maximally_mixed_klocal_instance(a.n, 2))));
        return kOk;
    }
    if (a.name == "mm-klocal") {
        emit(io::to_json(io::instance_document(maximally_mixed_klocal_instance(a.n, a.k))), s.output);
        return kOk;
    }
    if (a.name == "boson-sigma") {
        if (a.particles == 0) throw InvalidInput("boson-sigma: --N is required");
        if (a.p < 0) throw InvalidInput("boson-sigma: --p is required");
        const auto sigma = bosonic_sigma_p(a.particles, std::size_t(a.p));
        auto sol = io::state_document(sigma, s.rank_tol);
        sol.meta = Json{{"kind", "bosonic"}, {"dims", std::vector<std::size_t>(a.particles, 2)},
                        {"N", a.particles}, {"d", 2}, {"p", a.p}};
        emit(io::to_json(sol), s.output);
        if (!a.companion.empty()) {
            const SectorInstance inst(Statistics::bosonic, a.particles, 2, 2, bosonic_maximally_mixed_2());
            io::write_file(a.companion, io::to_json(io::instance_document(inst)));
        }
        return kOk;
    }
    if (a.name == "random-feasible") {
        const auto shape = SystemShape::qubits(a.n);
        const std::size_t rank = a.rank == 0 ? shape.total() : a.rank;
        const auto fi = random_feasible_instance(shape, all_subsets(a.n, a.k), rank, s.seed);
        emit(io::to_json(io::instance_document(fi.instance)), s.output);
        if (!a.companion.empty()) {
            auto sol = io::state_document(fi.witness, s.rank_tol);
            sol.meta = qubit_state_meta(a.n);
            io::write_file(a.companion, io::to_json(sol));
        }
        return kOk;
    }
    if (a.name == "random-channel") {
        const std::size_t n = a.n_given ? a.n : 2;
        // the Haar unitary has side 4^n * count; keep it desk sized
        if (n == 0 || n > 3) throw InvalidInput("random-channel: --n must be 1, 2 or 3");
        const auto shape = SystemShape::qubits(n);
        const std::size_t kc = a.rank == 0 ? shape.total() * shape.total() : a.rank;
        const auto ch = random_channel(shape, shape, kc, s.seed);
        emit(io::to_json(diagonal_local_instance(ch)), s.output);
        if (!a.companion.empty()) io::write_file(a.companion, io::to_json(ch));
        return kOk;
    }
    throw InvalidInput("example: unknown name \"" + a.name + "\"");
}

struct ChannelArgs {
    std::string action;
    std::string file;
    std::vector<std::size_t> in_keep{0};
    std::vector<std::size_t> out_keep{0};
};

int cmd_channel(const ChannelArgs& a, const Settings& s) {
    const auto j = io::read_file(a.file);
    if (a.action == "kraus") {
        const auto ch = io::channel_from_json(j, s.tol);
        const auto ks = kraus_from_choi(ch, s.rank_tol);
        emit(io::to_json(ks, ch.in_shape(), ch.out_shape()), s.output);
        std::cerr << "kraus count " << ks.size() << "\n";
        return kOk;
    }
    if (a.action == "subchannel") {
        const auto ch = io::channel_from_json(j, s.tol);
        const auto sub = sub_channel(ch, SubsystemSet(a.in_keep), SubsystemSet(a.out_keep), s.tol);
        emit(io::to_json(sub), s.output);
        return kOk;
    }
    if (a.action == "reduce") {
        const auto ci = io::channel_instance_from_json(j, s.tol);
        ChannelReductionOptions opts;
        opts.feasibility.max_iters = s.max_iters;
        opts.feasibility.seed = s.seed;
        opts.reduction.rank_tol = s.rank_tol;
        opts.reduction.seed = s.seed;
        opts.tp_tol = s.tol;
        const auto res = reduce_kraus_rank(ci, opts);
        if (!res.ok()) {
            std::cerr << "infeasible: " << res.feasibility.diagnosis << " after " << res.feasibility.iterations
                      << " iterations, best residual " << fmt(res.feasibility.best_residual) << "\n";
            return kMathFailure;
        }
        Json out = io::to_json(*res.channel);
        out["kraus_count"] = res.kraus.size();
        out["bounds"] = {{"local", res.local_bound}, {"tp_augmented", res.tp_bound}, {"achieved", res.kraus.size()}};
        out["subchannel_residuals"] = res.subchannel_residuals;
        out["completeness_error"] = res.kraus.tp_error();
        out["kraus"] = io::to_json(res.kraus, ci.in_shape(), ci.out_shape())["kraus"];
        out["settings"] = s.to_json();
        emit(out, s.output);
        double worst = 0.0;
        for (double r : res.subchannel_residuals) worst = std::max(worst, r);
        std::cerr << "kraus count " << res.kraus.size() << " (local bound " << res.local_bound
                  << ", tp-augmented bound " << res.tp_bound << ")\n";
        std::cerr << "worst sub-channel residual " << fmt(worst) << ", completeness error "
                  << fmt(res.kraus.tp_error()) << "\n";
        return kOk;
    }
    throw InvalidInput("channel: unknown action \"" + a.action + "\"");
}

void add_common(CLI::App* app, Settings& s) {
    app->add_option("--tol", s.tol, "Residual tolerance")->capture_default_str();
    app->add_option("--rank-tol", s.rank_tol, "Relative eigenvalue cutoff for rank")->capture_default_str();
    app->add_option("--max-iters", s.max_iters, "Feasibility iteration cap")->capture_default_str();
    app->add_option("--seed", s.seed, "Random seed")->capture_default_str();
    app->add_option("-o,--output", s.output, "Output file (default stdout)");
    app->add_option("--format", s.format, "Output format")->check(CLI::IsMember({"json"}))->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum marginal consistency and rank reduction"};
    app.require_subcommand(1);
    Settings s;
    std::string instance_file;
    std::string solution_file;
    ExampleArgs ex;
    ChannelArgs ca;

    auto* check = app.add_subcommand("check", "Check a state against an instance");
    check->add_option("instance", instance_file)->required();
    check->add_option("solution", solution_file)->required();
    add_common(check, s);

    auto* solve = app.add_subcommand("solve", "Find a solution and reduce its rank");
    solve->add_option("instance", instance_file)->required();
    solve->add_flag("--no-reduce", s.no_reduce, "Skip rank reduction");
    add_common(solve, s);

    auto* bounds = app.add_subcommand("bounds", "Print the rank bounds of an instance");
    bounds->add_option("instance", instance_file)->required();
    add_common(bounds, s);

    auto* example = app.add_subcommand("example", "Write a gallery instance or state");
    example->add_option("name", ex.name)
        ->required()
        ->check(CLI::IsMember({"ring-graph", "mm-klocal", "boson-sigma", "random-feasible", "random-channel"}));
    example->add_option("--n", ex.n, "Number of qubits (random-channel: 2)")->capture_default_str();
    example->add_option("--k", ex.k, "Marginal size")->capture_default_str();
    example->add_option("--N", ex.particles, "Number of bosons");
    example->add_option("--p", ex.p, "sigma_p index");
    example->add_option("--rank", ex.rank, "Global rank / Kraus count (0 = full)");
    example->add_option("--companion", ex.companion,
                        "Second output: instance (ring-graph, boson-sigma), witness (random-feasible) or full "
                        "channel (random-channel)");
    add_common(example, s);

    auto* channel = app.add_subcommand("channel", "Channel tools");
    channel->add_option("action", ca.action)->required()->check(CLI::IsMember({"reduce", "kraus", "subchannel"}));
    channel->add_option("file", ca.file)->required();
    channel->add_option("--in-keep", ca.in_keep, "Input subsystems kept by subchannel");
    channel->add_option("--out-keep", ca.out_keep, "Output subsystems kept by subchannel");
    add_common(channel, s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInputFailure;
    }

    try {
        if (*check) return cmd_check(instance_file, solution_file, s);
        if (*solve) return cmd_solve(instance_file, s);
        if (*bounds) return cmd_bounds(instance_file, s);
        if (*example) {
            ex.n_given = example->count("--n") > 0;
            return cmd_example(ex, s);
        }
        if (*channel) return cmd_channel(ca, s);
    } catch (const ChannelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMathFailure;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputFailure;
    } catch (const Json::exception& e) {
        std::cerr << "error: malformed document: " << e.what() << "\n";
        return kInputFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMathFailure;
    }
    return kInputFailure;
}
