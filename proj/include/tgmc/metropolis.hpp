#pragma once

#include <cmath>

#include "tgmc/lattice.hpp"
#include "tgmc/rng.hpp"

namespace tgmc {

/// Single-spin Metropolis. One sweep is N sequential attempts at uniformly random sites.
class MetropolisSampler {
public:
    MetropolisSampler(const Lattice& lat, const CouplingField& coupling) : lat_(&lat), coupling_(coupling) {}

    /// Returns the number of accepted flips.
    std::size_t sweep(SpinConfiguration& s, Rng& rng) const {
        const std::size_t n = lat_->num_sites();
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::size_t acc = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const auto i = pick(rng);
            // change of log weight when flipping i
            const double d = -2.0 * s[i] * local_field(*lat_, coupling_, s, i);
            if (d >= 0.0 || uniform01(rng) < std::exp(d)) {
                s.flip(i);
                ++acc;
            }
        }
        return acc;
    }

private:
    const Lattice* lat_;
    CouplingField coupling_;
};

}  // namespace tgmc
