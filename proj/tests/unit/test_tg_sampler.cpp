#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tgmc/rng.hpp"
#include "tgmc/tg_sampler.hpp"

using namespace tgmc;

namespace {

std::uint64_t state_index(const TgState& st, bool with_ghost) {
    std::uint64_t s = st.spins.index();
    if (with_ghost && st.ghost < 0) s |= std::uint64_t{1} << st.spins.size();
    return s;
}

/// Joint target over (σ, ghost): exp(Σ Kσσ + Σ B σ_i g).
std::vector<double> ghost_joint(const Lattice& lat, const CouplingField& c) {
    const std::size_t n = lat.num_sites();
    std::vector<double> p(std::size_t{2} << n);
    CouplingField flipped = c;
    for (auto& b : flipped.site_field) b = -b;
    const auto up = oracle::boltzmann(lat, c), down = oracle::boltzmann(lat, flipped);
    const double zu = std::exp(oracle::log_partition(lat, c)), zd = std::exp(oracle::log_partition(lat, flipped));
    for (std::size_t s = 0; s < up.size(); ++s) {
        p[s] = up[s] * zu / (zu + zd);
        p[s + up.size()] = down[s] * zd / (zu + zd);
    }
    return p;
}

/// Applies one step to iid draws from the target and tests the histogram against it.
double one_step_pvalue(const Lattice& lat, const CouplingField& c, const TgConfig& cfg, std::size_t draws, std::uint64_t seed) {
    const TgSampler sampler(lat, c, cfg);
    const bool ghost = sampler.ghost_on();
    const auto p = ghost ? ghost_joint(lat, c) : oracle::boltzmann(lat, c);
    const std::size_t n = lat.num_sites();
    Rng rng(seed);
    std::discrete_distribution<std::uint64_t> d(p.begin(), p.end());
    std::vector<double> counts(p.size(), 0.0);
    for (std::size_t t = 0; t < draws; ++t) {
        const auto idx = d(rng);
        TgState st{SpinConfiguration::from_index(idx & ((std::uint64_t{1} << n) - 1), n),
                   static_cast<Spin>((idx >> n) & 1U ? -1 : 1)};
        sampler.step(st, rng);
        counts[state_index(st, ghost)] += 1.0;
    }
    return oracle::chi_square_pvalue(p, counts);
}

/// Joint weight of spins and bond states, each bond/ghost edge contributing its component entry.
double log_joint(const TgSampler& s, const BondStateField& bonds, const TgState& st) {
    const auto& lat = s.lattice();
    const auto& c = s.coupling();
    double w = 0.0;
    for (const auto& e : lat.edges()) {
        const auto& b = s.bond(e.id);
        w += std::log(oracle::bond_component(static_cast<int>(bonds.edges[e.id]), b.K, b.X, b.Y, st.spins[e.u], st.spins[e.v]));
    }
    if (s.ghost_on()) {
        for (std::size_t i = 0; i < lat.num_sites(); ++i) {
            const auto& g = s.ghost_bond(i);
            w += std::log(oracle::bond_component(static_cast<int>(bonds.ghost_edges[i]), g.field, g.E, g.F, st.spins[i], st.ghost));
        }
    } else {
        for (std::size_t i = 0; i < lat.num_sites(); ++i) w += c.site_field[i] * st.spins[i];
    }
    return w;
}

CouplingField disordered(const Lattice& lat, Rng& rng, double field_scale, Disorder d = Disorder::pm_j(0.7)) {
    auto c = sample_disorder(lat, d, rng);
    for (auto& b : c.site_field) b = field_scale * (uniform01(rng) - 0.5);
    return c;
}

}  // namespace

TEST(TgSampler, FlipRatioMatchesJointWeights) {
    Rng rng(21);
    const auto lat = build_lattice({3, 3}, Boundary::open);
    const std::vector<TgConfig> configs{TgConfig::swendsen_wang(), TgConfig::niedermayer(0.3), TgConfig::explicit_xy(0.4, 0.2),
                                        TgConfig::ghost_swendsen_wang()};
    for (const auto& cfg : configs) {
        for (int trial = 0; trial < 30; ++trial) {
            const auto c = disordered(lat, rng, 1.0);
            const TgSampler s(lat, c, cfg);
            TgState st{random_spins(lat.num_sites(), rng), uniform01(rng) < 0.5 ? Spin{1} : Spin{-1}};
            const auto bonds = s.sample_bonds(st, rng);
            const auto part = s.find_clusters(bonds, st);
            for (std::size_t k = 0; k < part.num_clusters(); ++k) {
                TgState flipped = st;
                for (auto node : part.members[k]) {
                    if (node == lat.num_sites()) flipped.ghost = static_cast<Spin>(-flipped.ghost);
                    else flipped.spins.flip(node);
                }
                const double cur = log_joint(s, bonds, st), fl = log_joint(s, bonds, flipped);
                const auto fr = s.flip_ratio(k, part, bonds, st);
                if (!std::isfinite(fl)) {
                    EXPECT_TRUE(fr.always_current);
                    continue;
                }
                EXPECT_FALSE(fr.always_current);
                EXPECT_NEAR(fr.log_ratio, cur - fl, 1e-10);
            }
        }
    }
}

TEST(TgSampler, LocksRespectSpins) {
    Rng rng(4);
    const auto lat = build_lattice({6, 6}, Boundary::periodic);
    const auto c = disordered(lat, rng, 0.0);
    for (const auto& cfg : {TgConfig::swendsen_wang(), TgConfig::niedermayer(0.2)}) {
        const TgSampler s(lat, c, cfg);
        for (int t = 0; t < 50; ++t) {
            TgState st{random_spins(lat.num_sites(), rng)};
            const auto bonds = s.sample_bonds(st, rng);
            for (const auto& e : lat.edges()) {
                const auto b = bonds.edges[e.id];
                EXPECT_NE(b, BondState::none);
                const bool par = st.spins[e.u] == st.spins[e.v];
                if (b == BondState::lock_parallel) EXPECT_TRUE(par);
                if (b == BondState::lock_antiparallel) EXPECT_FALSE(par);
                // S-W locks only satisfied bonds
                if (cfg.bonds == TgConfig::Bonds::swendsen_wang && b != BondState::free) EXPECT_GT(c.edge_K[e.id] * st.spins[e.u] * st.spins[e.v], 0.0);
            }
            // locked bonds never cross clusters
            const auto part = s.find_clusters(bonds, st);
            for (const auto& e : lat.edges())
                if (bonds.edges[e.id] != BondState::free) EXPECT_EQ(part.cluster_of[e.u], part.cluster_of[e.v]);
        }
    }
}

TEST(TgSampler, BondDrawFrequencies) {
    const auto lat = build_lattice({2, 2}, Boundary::open);
    const double K = 0.6;
    Rng r0(1);
    const auto c = sample_disorder(lat, Disorder::ferro(K), r0);
    const TgSampler s(lat, c, TgConfig::swendsen_wang());
    TgState st{SpinConfiguration(4)};
    st.spins.flip(3);
    Rng rng(8);
    const int draws = 40000;
    std::vector<double> locks(lat.num_edges(), 0.0);
    for (int t = 0; t < draws; ++t) {
        const auto b = s.sample_bonds(st, rng);
        for (std::size_t e = 0; e < b.edges.size(); ++e) locks[e] += b.edges[e] != BondState::free;
    }
    const double p = 1.0 - std::exp(-2 * K);
    for (const auto& e : lat.edges()) {
        const bool par = st.spins[e.u] == st.spins[e.v];
        if (!par) {
            EXPECT_EQ(locks[e.id], 0.0);
            continue;
        }
        EXPECT_NEAR(locks[e.id] / draws, p, 5.0 * std::sqrt(p * (1 - p) / draws));
    }
}

TEST(TgSampler, ZeroCouplingGivesSingletons) {
    const auto lat = build_lattice({4, 4}, Boundary::open);
    const CouplingField c(lat.num_edges(), lat.num_sites());
    const TgSampler s(lat, c, TgConfig::swendsen_wang());
    Rng rng(2);
    TgState st{random_spins(16, rng)};
    const auto bonds = s.sample_bonds(st, rng);
    const auto part = s.find_clusters(bonds, st);
    EXPECT_EQ(part.num_clusters(), 16u);
    for (std::size_t k = 0; k < 16; ++k) {
        const auto fr = s.flip_ratio(k, part, bonds, st);
        EXPECT_NEAR(s.flip_probability(fr), 0.5, 1e-14);
    }
}

TEST(TgSampler, OneStepPreservesBoltzmann) {
    Rng rng(31);
    const auto lat = build_lattice({3, 3}, Boundary::open);
    const auto c = disordered(lat, rng, 0.0);
    const auto cg = disordered(lat, rng, 0.0, Disorder::gaussian(0.8));
    auto cf = c;
    for (auto& b : cf.site_field) b = 0.3;
    struct Case {
        const char* name;
        TgConfig cfg;
        const CouplingField* c;
    };
    const std::vector<Case> cases{{"sw", TgConfig::swendsen_wang(), &c},
                                  {"sw_gaussian", TgConfig::swendsen_wang(), &cg},
                                  {"wolff_gaussian", TgConfig::wolff(), &cg},
                                  {"wolff", TgConfig::wolff(), &c},
                                  {"niedermayer", TgConfig::niedermayer(0.25), &c},
                                  {"niedermayer_hi", TgConfig::niedermayer(1.5), &c},
                                  {"explicit", TgConfig::explicit_xy(0.3, 0.1), &c},
                                  {"sw_field", TgConfig::swendsen_wang(), &cf},
                                  {"wolff_field", TgConfig::wolff(), &cf},
                                  {"ghost", TgConfig::ghost_swendsen_wang(), &cf}};
    std::uint64_t seed = 100;
    for (const auto& cs : cases) {
        const double pv = one_step_pvalue(lat, *cs.c, cs.cfg, 200000, seed++);
        EXPECT_GT(pv, 1e-4) << cs.name;
    }
}

TEST(TgSampler, WolffWithGibbsFlipAndGhostSingleCluster) {
    Rng rng(5);
    const auto lat = build_lattice({3, 2}, Boundary::periodic);
    auto c = disordered(lat, rng, 0.8);
    TgConfig g = TgConfig::ghost_swendsen_wang();
    g.scope = ClusterScope::single_random_cluster;
    EXPECT_GT(one_step_pvalue(lat, c, g, 100000, 7), 1e-4);
    TgConfig w = TgConfig::niedermayer(0.2);
    w.scope = ClusterScope::single_random_cluster;
    w.flip = FlipRule::wolff_deterministic;
    EXPECT_GT(one_step_pvalue(lat, c, w, 100000, 8), 1e-4);
}

TEST(TgSampler, LongChainVisitsTarget) {
    const auto lat = build_lattice({3, 3}, Boundary::open);
    Rng r0(12);
    const auto c = sample_disorder(lat, Disorder::pm_j(0.5), r0);
    const TgSampler s(lat, c, TgConfig::swendsen_wang());
    const auto p = oracle::boltzmann(lat, c);
    Rng rng(3);
    TgState st{SpinConfiguration(9)};
    std::vector<double> counts(p.size(), 0.0);
    for (int t = 0; t < 200; ++t) s.step(st, rng);
    for (int t = 0; t < 60000; ++t) {
        for (int k = 0; k < 3; ++k) s.step(st, rng);
        counts[st.spins.index()] += 1.0;
    }
    EXPECT_GT(oracle::chi_square_pvalue(p, counts), 1e-4);
}

TEST(TgSampler, GhostTransformAndStepHelper) {
    SpinConfiguration s(3);
    s.flip(1);
    EXPECT_EQ(ghost_observable_transform(s, 1).spins, s.spins);
    const auto t = ghost_observable_transform(s, -1);
    EXPECT_EQ(t[0], -1);
    EXPECT_EQ(t[1], 1);
    const auto lat = build_lattice({2, 2}, Boundary::open);
    Rng rng(1);
    const auto c = sample_disorder(lat, Disorder::ferro(0.2), rng);
    TgState st{SpinConfiguration(4)};
    tg_step(st, lat, c, TgConfig::swendsen_wang(), rng);
    EXPECT_EQ(st.spins.size(), 4u);
    EXPECT_THROW(TgSampler(lat, CouplingField(3, 4), TgConfig::swendsen_wang()), InvalidArgument);
}
