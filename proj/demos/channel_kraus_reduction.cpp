// A random 2-qubit channel is replaced by one with the same single-qubit
// sub-channels and few Kraus operators.

#include "qmarginal/gallery.hpp"

#include <cstdio>

using namespace qmarginal;

int main() {
    const auto ch = random_channel(SystemShape::qubits(2), SystemShape::qubits(2), 16, 1);
    const auto res = reduce_kraus_rank(diagonal_local_instance(ch));
    if (!res.ok()) return 1;
    std::printf("Kraus operators: %zu -> %zu (bounds %zu / %zu)\n", kraus_from_choi(ch).size(), res.kraus.size(),
                res.local_bound, res.tp_bound);
    for (std::size_t i = 0; i < res.subchannel_residuals.size(); ++i)
        std::printf("sub-channel %zu residual %.2e\n", i, res.subchannel_residuals[i]);
}
