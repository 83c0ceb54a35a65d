#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tgmc/kbd_sampler.hpp"

using namespace tgmc;

namespace {

double one_step_pvalue(const Lattice& lat, const CouplingField& c, KbdSampler::Flip flip, int parity, std::size_t draws,
                       std::uint64_t seed) {
    KbdSampler k(lat, c, flip);
    Rng rng(seed);
    if (parity == 1) {
        SpinConfiguration warm(lat.num_sites());
        k.step(warm, rng);
    }
    const auto p = oracle::boltzmann(lat, c);
    std::discrete_distribution<std::uint64_t> d(p.begin(), p.end());
    std::vector<double> counts(p.size(), 0.0);
    for (std::size_t t = 0; t < draws; ++t) {
        auto s = SpinConfiguration::from_index(d(rng), lat.num_sites());
        KbdSampler copy = k;
        copy.step(s, rng);
        counts[s.index()] += 1.0;
    }
    return oracle::chi_square_pvalue(p, counts);
}

}  // namespace

TEST(KbdSampler, OneStepPreservesBoltzmannBothParities) {
    const auto lat = build_lattice({3, 3}, Boundary::open);
    for (double K : {0.3, 1.0}) {
        const auto c = fully_frustrated(lat, K);
        std::uint64_t seed = 10;
        for (int parity : {0, 1})
            for (auto flip : {KbdSampler::Flip::all_clusters_half, KbdSampler::Flip::single_cluster})
                EXPECT_GT(one_step_pvalue(lat, c, flip, parity, 150000, seed++), 1e-4) << K << " " << parity;
    }
}

TEST(KbdSampler, PeriodicOneStep) {
    const auto lat = build_lattice({4, 4}, Boundary::periodic);
    const auto c = fully_frustrated(lat, 0.5);
    EXPECT_GT(one_step_pvalue(lat, c, KbdSampler::Flip::all_clusters_half, 0, 300000, 3), 1e-4);
    EXPECT_THROW(KbdSampler(build_lattice({4, 3}, Boundary::periodic), fully_frustrated(build_lattice({4, 3}, Boundary::periodic), 0.5)),
                 InvalidArgument);
}

TEST(KbdSampler, ComponentWeightInvariantUnderClusterFlips) {
    const auto lat = build_lattice({6, 6}, Boundary::open);
    const auto c = fully_frustrated(lat, 0.8);
    KbdSampler k(lat, c);
    Rng rng(4);
    for (int t = 0; t < 40; ++t) {
        auto s = random_spins(lat.num_sites(), rng);
        const auto f = k.sample_plaquettes(s, t % 2, rng);
        const double w = k.component_weight(f, s);
        EXPECT_GT(w, 0.0);
        const auto part = k.clusters(f, s, rng);
        for (const auto& m : part.members) {
            auto s2 = s;
            for (auto i : m) s2.flip(i);
            EXPECT_NEAR(k.component_weight(f, s2), w, 1e-10 * w);
        }
    }
}

TEST(KbdSampler, ActiveFacesAreEdgeDisjointAndParityAlternates) {
    const auto lat = build_lattice({6, 4}, Boundary::periodic);
    const auto c = fully_frustrated(lat, 0.8);
    for (int parity : {0, 1}) {
        std::vector<int> use(lat.num_edges(), 0);
        for (const auto& p : lat.plaquettes())
            if (p.parity == parity)
                for (auto e : p.edges) ++use[e];
        for (int u : use) EXPECT_LE(u, 1);
    }
    KbdSampler k(lat, c);
    Rng rng(1);
    auto s = random_spins(lat.num_sites(), rng);
    EXPECT_EQ(k.next_parity(), 0);
    k.step(s, rng);
    EXPECT_EQ(k.next_parity(), 1);
    k.step(s, rng);
    EXPECT_EQ(k.next_parity(), 0);
}

TEST(KbdSampler, LockingProbabilityOnGroundState) {
    const auto lat = build_lattice({2, 2}, Boundary::open);
    const double K = 0.7;
    const auto c = fully_frustrated(lat, K);
    KbdSampler k(lat, c);
    SpinConfiguration s(4);  // all up: three bonds satisfied
    Rng rng(6);
    const int draws = 40000;
    int locked = 0;
    for (int t = 0; t < draws; ++t) locked += k.sample_plaquettes(s, 0, rng).states[0] != 3;
    const double p = 1.0 - std::exp(-4 * K);
    EXPECT_NEAR(static_cast<double>(locked) / draws, p, 5.0 * std::sqrt(p * (1 - p) / draws));
}

TEST(KbdSampler, LongChainMatchesTarget) {
    const auto lat = build_lattice({3, 4}, Boundary::open);
    const auto c = fully_frustrated(lat, 1.2);
    KbdSampler k(lat, c);
    const auto p = oracle::boltzmann(lat, c);
    Rng rng(9);
    SpinConfiguration s(lat.num_sites());
    for (int t = 0; t < 100; ++t) k.step(s, rng);
    std::vector<double> counts(p.size(), 0.0);
    for (int t = 0; t < 100000; ++t) {
        k.step(s, rng);
        k.step(s, rng);
        counts[s.index()] += 1.0;
    }
    EXPECT_GT(oracle::chi_square_pvalue(p, counts), 1e-4);
}

TEST(KbdSampler, RejectsUnfrustratedCouplings) {
    const auto lat = build_lattice({4, 4}, Boundary::open);
    Rng rng(1);
    EXPECT_THROW(KbdSampler(lat, sample_disorder(lat, Disorder::ferro(0.5), rng)), NonFrustratedPlaquette);
    EXPECT_NO_THROW(KbdSampler(lat, CouplingField(lat.num_edges(), lat.num_sites())));
    EXPECT_THROW(KbdSampler(build_lattice({3, 3, 3}, Boundary::open), CouplingField(54, 27)), InvalidArgument);
}
