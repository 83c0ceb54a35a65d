#include <gtest/gtest.h>

#include <set>

#include "tgmc/lattice.hpp"
#include "tgmc/rng.hpp"

using namespace tgmc;

TEST(Lattice, SmallestSquare) {
    const auto lat = build_lattice({2, 2}, Boundary::open);
    EXPECT_EQ(lat.num_sites(), 4u);
    EXPECT_EQ(lat.num_edges(), 4u);
    EXPECT_EQ(lat.plaquettes().size(), 1u);
}

TEST(Lattice, EdgeCounts) {
    EXPECT_EQ(build_lattice({4, 4}, Boundary::open).num_edges(), 24u);
    for (std::size_t L : {3, 5, 8}) {
        EXPECT_EQ(build_lattice({L, L}, Boundary::open).num_edges(), 2 * L * (L - 1));
        EXPECT_EQ(build_lattice({L, L}, Boundary::periodic).num_edges(), 2 * L * L);
    }
    const auto cube = build_lattice({3, 3, 3}, Boundary::periodic);
    EXPECT_EQ(cube.num_sites(), 27u);
    EXPECT_EQ(cube.num_edges(), 81u);
}

TEST(Lattice, RejectsBadDims) {
    EXPECT_THROW(build_lattice({4}, Boundary::open), InvalidArgument);
    EXPECT_THROW(build_lattice({2, 2, 2, 2}, Boundary::open), InvalidArgument);
    EXPECT_THROW(build_lattice({1, 4}, Boundary::open), InvalidArgument);
}

TEST(Lattice, EdgesUniqueAndCornerDegree) {
    for (auto b : {Boundary::open, Boundary::periodic}) {
        const auto lat = build_lattice({5, 4}, b);
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& e : lat.edges()) {
            auto key = std::minmax(e.u, e.v);
            EXPECT_TRUE(seen.insert(key).second);
        }
    }
    const auto lat = build_lattice({4, 4}, Boundary::open);
    EXPECT_EQ(lat.neighbors(lat.site(0, 0)).size(), 2u);
    EXPECT_EQ(lat.neighbors(lat.site(3, 3)).size(), 2u);
    const auto cube = build_lattice({3, 3, 3}, Boundary::open);
    EXPECT_EQ(cube.neighbors(0).size(), 3u);
}

TEST(Lattice, PlaquettesCoverFacesWithAlternatingParity) {
    for (auto b : {Boundary::open, Boundary::periodic}) {
        const auto lat = build_lattice({4, 4}, b);
        const std::size_t faces = b == Boundary::open ? 9 : 16;
        ASSERT_EQ(lat.plaquettes().size(), faces);
        std::set<std::array<std::size_t, 4>> distinct;
        for (const auto& p : lat.plaquettes()) {
            auto c = p.corners;
            std::sort(c.begin(), c.end());
            EXPECT_TRUE(distinct.insert(c).second);
            const auto xy = lat.coords(p.corners[0]);
            EXPECT_EQ(p.parity, static_cast<int>((xy[0] + xy[1]) % 2));
            for (int k = 0; k < 4; ++k) {
                const auto& e = lat.edge(p.edges[k]);
                const auto a = p.corners[k], bb = p.corners[(k + 1) % 4];
                EXPECT_TRUE((e.u == a && e.v == bb) || (e.u == bb && e.v == a));
            }
        }
    }
}

TEST(Lattice, SiteIdsRowMajor) {
    const auto lat = build_lattice({3, 4, 5}, Boundary::open);
    for (std::size_t s = 0; s < lat.num_sites(); ++s) EXPECT_EQ(lat.site(lat.coords(s)), s);
    EXPECT_EQ(lat.site(1, 0, 0), 1u);
    EXPECT_EQ(lat.site(0, 1, 0), 3u);
    EXPECT_EQ(lat.site(0, 0, 1), 12u);
}

TEST(Disorder, FerroConstant) {
    const auto lat = build_lattice({4, 4}, Boundary::open);
    Rng rng(1);
    const auto c = sample_disorder(lat, Disorder::ferro(0.5), rng);
    ASSERT_EQ(c.edge_K.size(), 24u);
    for (double k : c.edge_K) EXPECT_EQ(k, 0.5);
    for (double b : c.site_field) EXPECT_EQ(b, 0.0);
}

TEST(Disorder, PmJReproducibleAndBalanced) {
    const auto lat = build_lattice({8, 8}, Boundary::open);
    Rng a(42), b(42);
    EXPECT_EQ(sample_disorder(lat, Disorder::pm_j(1.0), a).edge_K, sample_disorder(lat, Disorder::pm_j(1.0), b).edge_K);
    const auto big = build_lattice({71, 71}, Boundary::periodic);  // 10082 edges
    Rng r(7);
    const auto c = sample_disorder(big, Disorder::pm_j(1.0), r);
    std::size_t plus = 0;
    for (double k : c.edge_K) {
        EXPECT_EQ(std::abs(k), 1.0);
        plus += k > 0;
    }
    EXPECT_NEAR(static_cast<double>(plus) / static_cast<double>(c.edge_K.size()), 0.5, 0.02);
}

TEST(Disorder, RejectsNonPositiveStrength) {
    const auto lat = build_lattice({2, 2}, Boundary::open);
    Rng r(1);
    EXPECT_THROW(sample_disorder(lat, Disorder::pm_j(0.0), r), InvalidArgument);
}

TEST(Energy, HandValues) {
    const auto lat = build_lattice({2, 2}, Boundary::open);
    Rng r(1);
    const auto c = sample_disorder(lat, Disorder::ferro(0.5), r);
    SpinConfiguration s(4);
    EXPECT_DOUBLE_EQ(energy(lat, c, s), -2.0);
    s.flip(0);
    EXPECT_DOUBLE_EQ(energy(lat, c, s), 0.0);
    const CouplingField zero(lat.num_edges(), lat.num_sites());
    for (std::uint64_t i = 0; i < 16; ++i) EXPECT_EQ(energy(lat, zero, SpinConfiguration::from_index(i, 4)), 0.0);
}

TEST(Energy, GlobalFlipSymmetryAndLocalUpdate) {
    Rng rng(3);
    for (auto b : {Boundary::open, Boundary::periodic}) {
        const auto lat = build_lattice({5, 4}, b);
        auto c = sample_disorder(lat, Disorder::gaussian(0.8), rng);
        for (int trial = 0; trial < 20; ++trial) {
            auto s = random_spins(lat.num_sites(), rng);
            auto f = s;
            for (auto& v : f.spins) v = static_cast<Spin>(-v);
            EXPECT_NEAR(energy(lat, c, s), energy(lat, c, f), 1e-12);
        }
        set_uniform_field(c, 0.3);
        for (int trial = 0; trial < 20; ++trial) {
            auto s = random_spins(lat.num_sites(), rng);
            for (std::size_t i = 0; i < lat.num_sites(); ++i) {
                auto t = s;
                t.flip(i);
                EXPECT_NEAR(energy(lat, c, s) - energy(lat, c, t), -2.0 * s[i] * local_field(lat, c, s, i), 1e-12);
            }
        }
    }
}

TEST(FullyFrustrated, EveryFaceHasOddNegativeBonds) {
    for (auto b : {Boundary::open, Boundary::periodic}) {
        const auto lat = build_lattice({4, 6}, b);
        const auto c = fully_frustrated(lat, 0.7);
        for (const auto& p : lat.plaquettes()) {
            int neg = 0;
            for (auto e : p.edges) neg += c.edge_K[e] < 0;
            EXPECT_EQ(neg % 2, 1);
        }
    }
    EXPECT_THROW(fully_frustrated(build_lattice({3, 4}, Boundary::periodic), 1.0), InvalidArgument);
}

TEST(SpinConfiguration, IndexRoundTrip) {
    for (std::uint64_t i = 0; i < 512; i += 7) EXPECT_EQ(SpinConfiguration::from_index(i, 9).index(), i);
}
