#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tgmc/decomposition.hpp"
#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/rng.hpp"

namespace tgmc {

/// Union-find with path halving and union by size.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

enum class BondState : std::uint8_t { none = 0, lock_parallel = 1, lock_antiparallel = 2, free = 3 };

struct BondStateField {
    std::vector<BondState> edges;
    std::vector<BondState> ghost_edges;  // empty unless ghost mode is on
};

struct TgState {
    SpinConfiguration spins;
    Spin ghost = 1;
};

enum class FlipRule { gibbs, wolff_deterministic };
enum class ClusterScope { all_clusters, single_random_cluster };

struct TgConfig {
    enum class Bonds { swendsen_wang, niedermayer, explicit_xy } bonds = Bonds::swendsen_wang;
    double W = 1.0;
    double X = 1.0, Y = 1.0;  // written for K >= 0; mirrored on negative bonds

    enum class Ghost { off, swendsen_wang, explicit_ef } ghost = Ghost::off;
    double E = 1.0, F = 1.0;

    FlipRule flip = FlipRule::gibbs;
    ClusterScope scope = ClusterScope::all_clusters;

    static TgConfig swendsen_wang() { return {}; }
    static TgConfig wolff() {
        TgConfig c;
        c.flip = FlipRule::wolff_deterministic;
        c.scope = ClusterScope::single_random_cluster;
        return c;
    }
    static TgConfig niedermayer(double w) {
        TgConfig c;
        c.bonds = Bonds::niedermayer;
        c.W = w;
        return c;
    }
    static TgConfig explicit_xy(double x, double y) {
        TgConfig c;
        c.bonds = Bonds::explicit_xy;
        c.X = x;
        c.Y = y;
        return c;
    }
    static TgConfig ghost_swendsen_wang() {
        TgConfig c;
        c.ghost = Ghost::swendsen_wang;
        return c;
    }

    BondDecomposition bond_for(double K) const {
        switch (bonds) {
            case Bonds::swendsen_wang: return BondDecomposition::swendsen_wang(K);
            case Bonds::niedermayer: return oriented(niedermayer_params(W, std::abs(K)), K);
            default: return oriented(BondDecomposition(std::abs(K), X, Y), K);
        }
    }

    GhostDecomposition ghost_for(double field) const {
        if (ghost == Ghost::swendsen_wang) return GhostDecomposition::swendsen_wang(field);
        if (field >= 0.0) return {field, E, F};
        return {field, F, E};
    }
};

/// Cluster labels plus the boundary statistics of each cluster under the spins it was
/// built from. n/m count free boundary bonds joining parallel/antiparallel pairs;
/// p/q do the same for free ghost edges.
struct ClusterPartition {
    std::vector<std::size_t> cluster_of;  // per site; ghost node (if any) is last
    std::vector<std::vector<std::size_t>> members;
    std::vector<int> n, m, p, q;
    std::size_t ghost_cluster = SIZE_MAX;

    std::size_t num_clusters() const { return members.size(); }
};

struct FlipRatio {
    double log_ratio = 0.0;       // log p(current) / p(flipped)
    bool always_current = false;  // flipped configuration has zero weight
};

/// Tensor-Gibbs cluster sampler over one coupling realization.
class TgSampler {
public:
    TgSampler(const Lattice& lat, const CouplingField& coupling, TgConfig config)
        : lat_(&lat), coupling_(coupling), config_(config) {
        if (coupling_.edge_K.size() != lat.num_edges() || coupling_.site_field.size() != lat.num_sites())
            throw InvalidArgument("coupling field does not match lattice");
        bonds_.reserve(lat.num_edges());
        for (double k : coupling_.edge_K) bonds_.push_back(config_.bond_for(k));
        if (ghost_on()) {
            for (double b : coupling_.site_field) ghosts_.push_back(config_.ghost_for(b));
        }
        field_in_ratio_ = !ghost_on() && coupling_.has_field();
    }

    bool ghost_on() const { return config_.ghost != TgConfig::Ghost::off; }
    const TgConfig& config() const { return config_; }
    const Lattice& lattice() const { return *lat_; }
    const CouplingField& coupling() const { return coupling_; }
    const BondDecomposition& bond(std::size_t e) const { return bonds_[e]; }
    const GhostDecomposition& ghost_bond(std::size_t i) const { return ghosts_[i]; }

    /// Each bond drawn independently given its endpoint spins.
    BondStateField sample_bonds(const TgState& st, Rng& rng) const {
        BondStateField f;
        f.edges.resize(lat_->num_edges());
        for (const auto& e : lat_->edges()) f.edges[e.id] = draw(bond_state_probs(bonds_[e.id], st.spins[e.u], st.spins[e.v]), rng);
        if (ghost_on()) {
            f.ghost_edges.resize(lat_->num_sites());
            for (std::size_t i = 0; i < lat_->num_sites(); ++i)
                f.ghost_edges[i] = draw(ghost_bond_probs(ghosts_[i], st.spins[i], st.ghost), rng);
        }
        return f;
    }

    ClusterPartition find_clusters(const BondStateField& bonds, const TgState& st) const {
        const std::size_t n = lat_->num_sites();
        const bool ghost = !bonds.ghost_edges.empty();
        DisjointSets ds(n + (ghost ? 1 : 0));
        for (const auto& e : lat_->edges())
            if (locked(bonds.edges[e.id])) ds.unite(e.u, e.v);
        if (ghost)
            for (std::size_t i = 0; i < n; ++i)
                if (locked(bonds.ghost_edges[i])) ds.unite(i, n);
        ClusterPartition part;
        const std::size_t nodes = n + (ghost ? 1 : 0);
        part.cluster_of.assign(nodes, SIZE_MAX);
        std::vector<std::size_t> root_id(nodes, SIZE_MAX);
        for (std::size_t i = 0; i < nodes; ++i) {
            const auto r = ds.find(i);
            if (root_id[r] == SIZE_MAX) {
                root_id[r] = part.members.size();
                part.members.emplace_back();
            }
            part.cluster_of[i] = root_id[r];
            part.members[root_id[r]].push_back(i);
        }
        if (ghost) part.ghost_cluster = part.cluster_of[n];
        const std::size_t nc = part.members.size();
        part.n.assign(nc, 0);
        part.m.assign(nc, 0);
        part.p.assign(nc, 0);
        part.q.assign(nc, 0);
        for (const auto& e : lat_->edges()) {
            if (bonds.edges[e.id] != BondState::free) continue;
            const auto cu = part.cluster_of[e.u], cv = part.cluster_of[e.v];
            if (cu == cv) continue;
            auto& cnt = st.spins[e.u] == st.spins[e.v] ? part.n : part.m;
            ++cnt[cu];
            ++cnt[cv];
        }
        if (ghost) {
            const auto cg = part.ghost_cluster;
            for (std::size_t i = 0; i < n; ++i) {
                if (bonds.ghost_edges[i] != BondState::free) continue;
                const auto ci = part.cluster_of[i];
                if (ci == cg) continue;
                auto& cnt = st.spins[i] == st.ghost ? part.p : part.q;
                ++cnt[ci];
                ++cnt[cg];
            }
        }
        return part;
    }

    /// log p(C[σ]) / p(C[σ̄]) for one cluster given the bond states and the current
    /// spins everywhere else.
    FlipRatio flip_ratio(std::size_t cluster, const ClusterPartition& part, const BondStateField& bonds,
                         const TgState& st) const {
        FlipRatio fr;
        const std::size_t n = lat_->num_sites();
        auto add = [&fr](double cur, double flipped) {
            if (flipped == 0.0) {
                fr.always_current = true;
                return;
            }
            fr.log_ratio += std::log(cur) - std::log(flipped);
        };
        const bool has_ghost = !bonds.ghost_edges.empty();
        for (std::size_t node : part.members[cluster]) {
            if (node == n) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (part.cluster_of[j] == cluster || bonds.ghost_edges[j] != BondState::free) continue;
                    const auto& g = ghosts_[j];
                    if (st.spins[j] == st.ghost) add(g.E, g.F);
                    else add(g.F, g.E);
                }
                continue;
            }
            for (const auto& nb : lat_->neighbors(node)) {
                if (part.cluster_of[nb.site] == cluster || bonds.edges[nb.edge] != BondState::free) continue;
                const auto& b = bonds_[nb.edge];
                if (st.spins[node] == st.spins[nb.site]) add(b.X, b.Y);
                else add(b.Y, b.X);
            }
            if (has_ghost && part.cluster_of[n] != cluster && bonds.ghost_edges[node] == BondState::free) {
                const auto& g = ghosts_[node];
                if (st.spins[node] == st.ghost) add(g.E, g.F);
                else add(g.F, g.E);
            }
            if (field_in_ratio_) fr.log_ratio += 2.0 * coupling_.site_field[node] * st.spins[node];
        }
        return fr;
    }

    /// One Tensor-Gibbs step: bond states, then a block update of every cluster (or of
    /// the cluster holding a random seed site).
    void step(TgState& st, Rng& rng) const {
        if (config_.scope == ClusterScope::single_random_cluster && !ghost_on()) {
            single_cluster_step(st, rng);
            return;
        }
        const BondStateField bonds = sample_bonds(st, rng);
        const ClusterPartition part = find_clusters(bonds, st);
        if (config_.scope == ClusterScope::single_random_cluster) {
            const auto seed = std::uniform_int_distribution<std::size_t>(0, lat_->num_sites() - 1)(rng);
            update_cluster(part.cluster_of[seed], part, bonds, st, rng);
            return;
        }
        for (std::size_t c = 0; c < part.num_clusters(); ++c) update_cluster(c, part, bonds, st, rng);
    }

    double flip_probability(const FlipRatio& fr) const {
        if (fr.always_current) return 0.0;
        if (config_.flip == FlipRule::gibbs) return 1.0 / (1.0 + std::exp(fr.log_ratio));
        return std::min(1.0, std::exp(-fr.log_ratio));
    }

private:
    static bool locked(BondState s) { return s == BondState::lock_parallel || s == BondState::lock_antiparallel; }

    static BondState draw(const Probs3& p, Rng& rng) {
        const double u = uniform01(rng);
        if (u < p[0]) return BondState::lock_parallel;
        if (u < p[0] + p[1]) return BondState::lock_antiparallel;
        return BondState::free;
    }

    void update_cluster(std::size_t c, const ClusterPartition& part, const BondStateField& bonds, TgState& st,
                        Rng& rng) const {
        const FlipRatio fr = flip_ratio(c, part, bonds, st);
        if (uniform01(rng) < flip_probability(fr)) {
            const std::size_t n = lat_->num_sites();
            for (std::size_t node : part.members[c]) {
                if (node == n) st.ghost = static_cast<Spin>(-st.ghost);
                else st.spins.flip(node);
            }
        }
    }

    /// Grows the seed's cluster by drawing bond states only where they are needed.
    void single_cluster_step(TgState& st, Rng& rng) const {
        const std::size_t n = lat_->num_sites();
        if (in_cluster_.size() != n) in_cluster_.assign(n, 0);
        const auto seed = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        std::vector<std::size_t> members{seed};
        in_cluster_[seed] = 1;
        struct Boundary {
            std::size_t edge, inside, outside;
        };
        std::vector<Boundary> rejected;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const auto i = members[k];
            for (const auto& nb : lat_->neighbors(i)) {
                if (in_cluster_[nb.site]) continue;
                const BondState s = draw(bond_state_probs(bonds_[nb.edge], st.spins[i], st.spins[nb.site]), rng);
                if (locked(s)) {
                    in_cluster_[nb.site] = 1;
                    members.push_back(nb.site);
                } else {
                    rejected.push_back({nb.edge, i, nb.site});
                }
            }
        }
        FlipRatio fr;
        for (const auto& r : rejected) {
            if (in_cluster_[r.outside]) continue;
            const auto& b = bonds_[r.edge];
            const bool par = st.spins[r.inside] == st.spins[r.outside];
            const double cur = par ? b.X : b.Y, flipped = par ? b.Y : b.X;
            if (flipped == 0.0) fr.always_current = true;
            else fr.log_ratio += std::log(cur) - std::log(flipped);
        }
        if (field_in_ratio_)
            for (auto i : members) fr.log_ratio += 2.0 * coupling_.site_field[i] * st.spins[i];
        const bool flip = uniform01(rng) < flip_probability(fr);
        for (auto i : members) {
            if (flip) st.spins.flip(i);
            in_cluster_[i] = 0;
        }
    }

    const Lattice* lat_;
    CouplingField coupling_;
    TgConfig config_;
    std::vector<BondDecomposition> bonds_;
    std::vector<GhostDecomposition> ghosts_;
    bool field_in_ratio_ = false;
    mutable std::vector<std::uint8_t> in_cluster_;
};

inline void tg_step(TgState& st, const Lattice& lat, const CouplingField& coupling, const TgConfig& config, Rng& rng) {
    TgSampler(lat, coupling, config).step(st, rng);
}

/// Measured configuration of the ghost-augmented chain: σ_ghost · σ.
inline SpinConfiguration ghost_observable_transform(const SpinConfiguration& spins, Spin ghost) {
    SpinConfiguration out = spins;
    if (ghost < 0)
        for (auto& s : out.spins) s = static_cast<Spin>(-s);
    return out;
}

}  // namespace tgmc
