#pragma once

#include <cstdint>
#include <vector>

#include "tgmc/decomposition.hpp"
#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/rng.hpp"
#include "tgmc/tg_sampler.hpp"

namespace tgmc {

/// Per-plaquette state (1, 2, 3) for the active checkerboard parity; 0 on inactive faces.
struct PlaquetteStateField {
    int parity = 0;
    std::vector<std::uint8_t> states;
};

inline std::size_t plaquette_config(const Plaquette& p, const SpinConfiguration& s) {
    std::size_t cfg = 0;
    for (int c = 0; c < 4; ++c) cfg = (cfg << 1) | (s[p.corners[c]] < 0 ? 1U : 0U);
    return cfg;
}

/// Plaquette cluster sampler for fully frustrated 2D couplings. Active faces of one
/// checkerboard parity are edge-disjoint; bonds not covered by them get FK bonds.
class KbdSampler {
public:
    enum class Flip { all_clusters_half, single_cluster };

    KbdSampler(const Lattice& lat, const CouplingField& coupling, Flip flip = Flip::all_clusters_half)
        : lat_(&lat), coupling_(coupling), flip_(flip) {
        if (lat.dimension() != 2) throw InvalidArgument("plaquette sampler needs a 2D lattice");
        if (lat.boundary() == Boundary::periodic && (lat.extent(0) % 2 || lat.extent(1) % 2))
            throw InvalidArgument("periodic plaquette sampler needs even extents for the checkerboard");
        for (const auto& p : lat.plaquettes()) {
            std::array<double, 4> k{};
            int negatives = 0;
            for (int e = 0; e < 4; ++e) {
                k[e] = coupling.edge_K[p.edges[e]];
                if (k[e] < 0.0) ++negatives;
            }
            const bool zero = k[0] == 0.0 && k[1] == 0.0 && k[2] == 0.0 && k[3] == 0.0;
            if (!zero && negatives % 2 == 0) throw NonFrustratedPlaquette("plaquette has an even number of negative bonds");
            try {
                decs_.push_back(kbd_decompose(kbd_plaquette_tensor(k)));
            } catch (const NonDecomposable& e) {
                throw NonFrustratedPlaquette(e.what());
            }
        }
        covered_.assign(2, std::vector<std::uint8_t>(lat.num_edges(), 0));
        for (const auto& p : lat.plaquettes())
            for (auto e : p.edges) covered_[p.parity][e] = 1;
        for (double k : coupling.edge_K) fk_.push_back(BondDecomposition::swendsen_wang(k));
    }

    int next_parity() const { return parity_; }
    const PlaquetteDecomposition& decomposition(std::size_t p) const { return decs_[p]; }

    PlaquetteStateField sample_plaquettes(const SpinConfiguration& s, int parity, Rng& rng) const {
        PlaquetteStateField f;
        f.parity = parity;
        f.states.assign(lat_->plaquettes().size(), 0);
        for (std::size_t i = 0; i < lat_->plaquettes().size(); ++i) {
            const auto& p = lat_->plaquettes()[i];
            if (p.parity != parity) continue;
            const auto pr = decs_[i].probs(plaquette_config(p, s));
            const double u = uniform01(rng);
            f.states[i] = u < pr[0] ? 1 : (u < pr[0] + pr[1] ? 2 : 3);
        }
        return f;
    }

    /// Locked-edge union-find over active plaquettes plus FK bonds on uncovered edges.
    ClusterPartition clusters(const PlaquetteStateField& f, const SpinConfiguration& s, Rng& rng) const {
        DisjointSets ds(lat_->num_sites());
        for (std::size_t i = 0; i < lat_->plaquettes().size(); ++i) {
            const auto st = f.states[i];
            if (st != 1 && st != 2) continue;
            const auto& p = lat_->plaquettes()[i];
            const auto& pat = st == 1 ? decs_[i].pattern1 : decs_[i].pattern2;
            for (int e : pat.edges) {
                const auto [a, b] = plaquette_edge_corners[e];
                ds.unite(p.corners[a], p.corners[b]);
            }
        }
        for (const auto& e : lat_->edges()) {
            if (covered_[f.parity][e.id]) continue;
            const auto pr = bond_state_probs(fk_[e.id], s[e.u], s[e.v]);
            if (uniform01(rng) < pr[0] + pr[1]) ds.unite(e.u, e.v);
        }
        ClusterPartition part;
        part.cluster_of.assign(lat_->num_sites(), SIZE_MAX);
        std::vector<std::size_t> id(lat_->num_sites(), SIZE_MAX);
        for (std::size_t i = 0; i < lat_->num_sites(); ++i) {
            const auto r = ds.find(i);
            if (id[r] == SIZE_MAX) {
                id[r] = part.members.size();
                part.members.emplace_back();
            }
            part.cluster_of[i] = id[r];
            part.members[id[r]].push_back(i);
        }
        return part;
    }

    /// Product of the selected component weights; invariant under flipping any cluster.
    double component_weight(const PlaquetteStateField& f, const SpinConfiguration& s) const {
        double w = 1.0;
        for (std::size_t i = 0; i < lat_->plaquettes().size(); ++i) {
            const auto st = f.states[i];
            if (st == 0) continue;
            const auto cfg = plaquette_config(lat_->plaquettes()[i], s);
            const auto& d = decs_[i];
            w *= st == 1 ? d.T1[cfg] : (st == 2 ? d.T2[cfg] : d.T3[cfg]);
        }
        return w;
    }

    void step(SpinConfiguration& s, Rng& rng) {
        const auto f = sample_plaquettes(s, parity_, rng);
        const auto part = clusters(f, s, rng);
        parity_ ^= 1;
        if (flip_ == Flip::single_cluster) {
            const auto seed = std::uniform_int_distribution<std::size_t>(0, lat_->num_sites() - 1)(rng);
            for (auto i : part.members[part.cluster_of[seed]]) s.flip(i);
            return;
        }
        for (const auto& m : part.members)
            if (uniform01(rng) < 0.5)
                for (auto i : m) s.flip(i);
    }

private:
    const Lattice* lat_;
    CouplingField coupling_;
    Flip flip_;
    std::vector<PlaquetteDecomposition> decs_;
    std::vector<std::vector<std::uint8_t>> covered_;
    std::vector<BondDecomposition> fk_;
    int parity_ = 0;
};

}  // namespace tgmc
