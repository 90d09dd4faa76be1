// Prints the distance of every 2-qubit marginal of the ring graph state from I/4.

#include "qmarginal/gallery.hpp"

#include <cstdio>

using namespace qmarginal;

int main() {
    for (std::size_t n = 4; n <= 8; ++n) {
        const auto rho = ring_graph_state(n);
        double worst = 0.0;
        for (const auto& s : all_subsets(n, 2))
            worst = std::max(worst, (partial_trace(rho, SystemShape::qubits(n), s) - HermitianMatrix::maximally_mixed(4)).norm());
        std::printf("n = %zu  rank %zu  max ||rho_ij - I/4|| = %.3e\n", n, numerical_rank(rho), worst);
    }
}
