#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "tgmc/boundary_mps.hpp"
#include "tgmc/decomposition.hpp"
#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/tensor.hpp"

namespace tgmc {

/// Symmetric square root of a symmetric positive semi-definite 2x2 matrix.
/// Throws IndefiniteFactor when an eigenvalue is negative (antiferromagnetic bonds).
inline Eigen::Matrix2d sqrt_boltzmann(const Eigen::Matrix2d& b) {
    if (std::abs(b(0, 1) - b(1, 0)) > 1e-14 * b.cwiseAbs().maxCoeff()) throw InvalidArgument("matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(b);
    Eigen::Vector2d lam = eig.eigenvalues();
    const double tol = 1e-14 * lam.cwiseAbs().maxCoeff();
    for (int i = 0; i < 2; ++i) {
        if (lam(i) < -tol) throw IndefiniteFactor("Boltzmann matrix is indefinite");
        lam(i) = std::sqrt(std::max(lam(i), 0.0));
    }
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

/// Factors B = F Gᵀ for one bond. F attaches to the edge's u endpoint, G to v.
/// Ferromagnetic bonds use F = G = √B; antiferromagnetic bonds put the whole matrix on u.
struct BondSplit {
    Eigen::Matrix2d u_factor;
    Eigen::Matrix2d v_factor;
};

inline BondSplit split_bond(double K) {
    const Eigen::Matrix2d b = boltzmann_matrix(K);
    try {
        const Eigen::Matrix2d s = sqrt_boltzmann(b);
        return {s, s};
    } catch (const IndefiniteFactor&) {
        return {b, Eigen::Matrix2d::Identity()};
    }
}

enum class SiteRole { corner, edge, bulk, observed, sampling };

/// Network for p(σ_site | observed spins) on an open 2D lattice. Unobserved sites are
/// summed delta cores dressed with bond factors (T^(2), T^(3), T^(4) by degree); observed
/// sites are outer products of their field vectors; the sampling site keeps index u.
struct SiteTensorSet {
    TensorGrid grid;                   // rows bottom to top, x left to right
    std::vector<SiteRole> roles;       // per site
    std::vector<BondSplit> splits;     // per edge
    std::map<std::size_t, std::vector<Eigen::Vector2d>> field_vectors;  // observed site -> one per leg
};

/// Field vector of an observed spin on one leg: row σ of the bond factor.
inline Eigen::Vector2d field_vector(const Eigen::Matrix2d& factor, Spin s) {
    return factor.row(s > 0 ? 0 : 1).transpose();
}

inline SiteTensorSet build_site_tensors(const CouplingField& coupling, const Lattice& lat,
                                        const std::map<std::size_t, Spin>& observed,
                                        std::optional<std::size_t> sampling_site) {
    if (lat.dimension() != 2 || lat.boundary() != Boundary::open)
        throw UnsupportedCluster("site tensor networks are built for open 2D lattices");
    if (sampling_site && observed.count(*sampling_site)) throw InvalidArgument("sampling site is listed as observed");
    const std::size_t lx = lat.dims()[0], ly = lat.dims()[1];
    SiteTensorSet set;
    set.splits.reserve(lat.num_edges());
    for (const auto& e : lat.edges()) set.splits.push_back(split_bond(coupling.edge_K[e.id]));

    set.roles.resize(lat.num_sites());
    set.grid.assign(ly, std::vector<DenseTensor>(lx));
    for (std::size_t y = 0; y < ly; ++y) {
        for (std::size_t x = 0; x < lx; ++x) {
            const std::size_t s = lat.site(x, y);
            struct Leg {
                Axis axis;
                Eigen::Matrix2d factor;
            };
            std::vector<Leg> legs;
            for (const auto& nb : lat.neighbors(s)) {
                const Edge& e = lat.edge(nb.edge);
                const bool is_u = e.u == s;
                const auto nc = lat.coords(nb.site);
                Axis a;
                if (e.axis == 0) a = nc[0] < x ? Axis::left : Axis::right;
                else a = nc[1] < y ? Axis::down : Axis::up;
                legs.push_back({a, is_u ? set.splits[e.id].u_factor : set.splits[e.id].v_factor});
            }
            static const Axis order[4] = {Axis::left, Axis::right, Axis::down, Axis::up};
            std::vector<Leg> sorted;
            for (Axis a : order)
                for (const auto& l : legs)
                    if (l.axis == a) sorted.push_back(l);

            const bool is_sampling = sampling_site && *sampling_site == s;
            const auto obs = observed.find(s);
            std::vector<std::size_t> shape(sorted.size(), 2);
            std::vector<Axis> axes;
            for (const auto& l : sorted) axes.push_back(l.axis);
            if (is_sampling) {
                shape.push_back(2);
                axes.push_back(Axis::sampling);
            }
            DenseTensor t(shape, axes);
            const double field = coupling.site_field[s];
            const std::size_t n_legs = sorted.size();
            for (std::size_t f = 0; f < t.size(); ++f) {
                // decode leg indices
                std::vector<std::size_t> idx(shape.size());
                std::size_t rem = f;
                for (std::size_t a = shape.size(); a-- > 0;) {
                    idx[a] = rem % shape[a];
                    rem /= shape[a];
                }
                double sum = 0.0;
                for (std::size_t k = 0; k < 2; ++k) {
                    const Spin spin = k == 0 ? Spin{1} : Spin{-1};
                    if (obs != observed.end() && obs->second != spin) continue;
                    if (is_sampling && idx[n_legs] != k) continue;
                    double w = std::exp(field * spin);
                    for (std::size_t l = 0; l < n_legs; ++l) w *= sorted[l].factor(k, idx[l]);
                    sum += w;
                }
                t[f] = sum;
            }
            set.grid[y][x] = std::move(t);
            if (is_sampling) {
                set.roles[s] = SiteRole::sampling;
            } else if (obs != observed.end()) {
                set.roles[s] = SiteRole::observed;
                auto& fv = set.field_vectors[s];
                for (const auto& l : sorted) fv.push_back(field_vector(l.factor, obs->second));
            } else {
                set.roles[s] = n_legs <= 2 ? SiteRole::corner : (n_legs == 3 ? SiteRole::edge : SiteRole::bulk);
            }
        }
    }
    return set;
}

}  // namespace tgmc
