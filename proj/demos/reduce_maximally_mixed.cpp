// Rank reduction of I/2^n under all 2-local maximally mixed constraints.

#include "qmarginal/gallery.hpp"
#include "qmarginal/reduce.hpp"

#include <cstdio>
#include <cstdlib>

using namespace qmarginal;

int main(int argc, char** argv) {
    const std::size_t n = argc > 1 ? std::size_t(std::atoi(argv[1])) : 4;
    const auto inst = maximally_mixed_klocal_instance(n, 2);
    const auto res = reduce_rank(HermitianMatrix::maximally_mixed(std::size_t(1) << n), inst);
    for (const auto& s : res.trace.steps) std::printf("%3zu -> %3zu  lambda %.4e\n", s.rank_before, s.rank_after, s.lambda);
    std::printf("final rank %zu, bound %zu, residual %.2e\n", res.trace.final_rank, res.trace.bound,
                check_consistency(inst, res.state).worst());
}
