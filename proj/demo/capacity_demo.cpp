// Capacity of {max_k S_k / sqrt(n) >= 1} under volatility uncertainty,
// next to its Brownian limit.
#include <cstdio>

#include "gexp/gexp.hpp"

int main() {
    using namespace gexp;
    const VolatilityBand band(0.5, 1.0);
    const CapacityPair limit = gcap_onesided_sup(1.0, band).pair;
    std::printf("limit: V = %.6f  v = %.6f\n", limit.upper_cap, limit.lower_cap);
    for (std::size_t n : {64, 256, 1024}) {
        const WalkSpec spec{n, StepFamily(band, 16), Scale::sqrt_n};
        const auto b = walk_capacity(spec, {Statistic::max, 1.0, Direction::above}, 0.1);
        std::printf("n=%5zu  V in [%.6f, %.6f]  v in [%.6f, %.6f]\n", n, b.upper_cap.lo, b.upper_cap.hi,
                    b.lower_cap.lo, b.lower_cap.hi);
    }
}
