#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/tensor.hpp"

namespace tgmc {

using Probs3 = std::array<double, 3>;

/// [[e^K, e^-K], [e^-K, e^K]], index 0 = spin up.
inline Eigen::Matrix2d boltzmann_matrix(double K) {
    Eigen::Matrix2d b;
    b << std::exp(K), std::exp(-K), std::exp(-K), std::exp(K);
    return b;
}

/// The ghost-edge matrix has the same form with the site field in place of K.
inline Eigen::Matrix2d ghost_matrix(double field) { return boltzmann_matrix(field); }

namespace detail {

constexpr double range_slack = 1e-12;

inline void check_range(double v, double hi, const char* name) {
    if (!(v >= 0.0) || v > hi * (1.0 + range_slack))
        throw InvalidArgument(std::string(name) + " outside its legal range [0, " + std::to_string(hi) + "]");
}

/// Multinomial over (lock-parallel, lock-antiparallel, free) for a matrix split
/// into diag(e^a - P), offdiag(e^-a - Q), [[P, Q], [Q, P]].
inline Probs3 split_probs(double a, double p, double q, Spin si, Spin sj) {
    if (si == sj) {
        const double free = std::min(1.0, p * std::exp(-a));
        return {1.0 - free, 0.0, free};
    }
    const double free = std::min(1.0, q * std::exp(a));
    return {0.0, 1.0 - free, free};
}

}  // namespace detail

/// Three-way split of the bond Boltzmann matrix: B = B¹ + B² + B³.
struct BondDecomposition {
    double K = 0.0;
    double X = 1.0;
    double Y = 1.0;

    BondDecomposition() = default;
    BondDecomposition(double k, double x, double y) : K(k), X(x), Y(y) {
        detail::check_range(X, std::exp(K), "X");
        detail::check_range(Y, std::exp(-K), "Y");
    }

    /// X = Y = e^{-|K|}: Fortuin-Kasteleyn bonds for either coupling sign.
    static BondDecomposition swendsen_wang(double k) { return {k, std::exp(-std::abs(k)), std::exp(-std::abs(k))}; }

    /// No locked bonds at all: single-spin heat bath.
    static BondDecomposition free(double k) { return {k, std::exp(k), std::exp(-k)}; }

    Eigen::Matrix2d B1() const {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 0) = m(1, 1) = std::exp(K) - X;
        return m;
    }
    Eigen::Matrix2d B2() const {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 1) = m(1, 0) = std::exp(-K) - Y;
        return m;
    }
    Eigen::Matrix2d B3() const {
        Eigen::Matrix2d m;
        m << X, Y, Y, X;
        return m;
    }
    Eigen::Matrix2d component(int state) const { return state == 1 ? B1() : (state == 2 ? B2() : B3()); }
};

/// Same construction for the ghost edge of a site with field B̃.
struct GhostDecomposition {
    double field = 0.0;
    double E = 1.0;
    double F = 1.0;

    GhostDecomposition() = default;
    GhostDecomposition(double b, double e, double f) : field(b), E(e), F(f) {
        detail::check_range(E, std::exp(field), "E");
        detail::check_range(F, std::exp(-field), "F");
    }

    static GhostDecomposition swendsen_wang(double b) {
        return {b, std::exp(-std::abs(b)), std::exp(-std::abs(b))};
    }

    Eigen::Matrix2d C1() const {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 0) = m(1, 1) = std::exp(field) - E;
        return m;
    }
    Eigen::Matrix2d C2() const {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 1) = m(1, 0) = std::exp(-field) - F;
        return m;
    }
    Eigen::Matrix2d C3() const {
        Eigen::Matrix2d m;
        m << E, F, F, E;
        return m;
    }
    Eigen::Matrix2d component(int state) const { return state == 1 ? C1() : (state == 2 ? C2() : C3()); }
};

inline Probs3 bond_state_probs(const BondDecomposition& d, Spin si, Spin sj) {
    detail::check_range(d.X, std::exp(d.K), "X");
    detail::check_range(d.Y, std::exp(-d.K), "Y");
    return detail::split_probs(d.K, d.X, d.Y, si, sj);
}

inline Probs3 ghost_bond_probs(const GhostDecomposition& d, Spin si, Spin s_ghost) {
    detail::check_range(d.E, std::exp(d.field), "E");
    detail::check_range(d.F, std::exp(-d.field), "F");
    return detail::split_probs(d.field, d.E, d.F, si, s_ghost);
}

/// Niedermayer's inclusion parameter W in terms of (X, Y) for a bond of strength K >= 0.
inline BondDecomposition niedermayer_params(double W, double K) {
    if (!(W >= 0.0) || W > std::exp(K) * (1.0 + detail::range_slack)) throw InvalidArgument("W outside [0, e^K]");
    if (W < std::exp(-K)) return {K, W, W};
    return {K, W, std::exp(-K)};
}

/// Maps a decomposition written for coupling |K| onto a bond of coupling K. A negative
/// bond is the gauge image of the positive one with parallel/antiparallel swapped.
inline BondDecomposition oriented(const BondDecomposition& for_abs, double K) {
    if (K >= 0.0) return {K, for_abs.X, for_abs.Y};
    return {K, for_abs.Y, for_abs.X};
}

// ---------------------------------------------------------------------------
// KBD plaquette tensors

/// Corner spins of one plaquette in (m, n, o, p) order, index 0 = up.
inline Spin corner_spin(std::size_t config, int corner) { return ((config >> (3 - corner)) & 1U) ? Spin{-1} : Spin{1}; }

/// Corner pairs of the four plaquette edges: mn, no, op, pm.
inline constexpr std::array<std::array<int, 2>, 4> plaquette_edge_corners{{{0, 1}, {1, 2}, {2, 3}, {3, 0}}};

/// T_mnop = exp(Σ_edges K_e σ σ) as a 2x2x2x2 tensor. Couplings ordered mn, no, op, pm.
inline DenseTensor kbd_plaquette_tensor(const std::array<double, 4>& K) {
    DenseTensor t({2, 2, 2, 2}, {Axis::other, Axis::other, Axis::other, Axis::other});
    for (std::size_t cfg = 0; cfg < 16; ++cfg) {
        double e = 0.0;
        for (int k = 0; k < 4; ++k) {
            const auto [a, b] = plaquette_edge_corners[k];
            e += K[k] * corner_spin(cfg, a) * corner_spin(cfg, b);
        }
        t[cfg] = std::exp(e);
    }
    return t;
}

/// One locking pattern: two opposite plaquette edges whose endpoints are tied by
/// σ_a = sign · σ_b.
struct LockPattern {
    std::array<int, 2> edges{};
    std::array<int, 2> signs{1, 1};

    bool compatible(std::size_t cfg) const {
        for (int i = 0; i < 2; ++i) {
            const auto [a, b] = plaquette_edge_corners[edges[i]];
            if (corner_spin(cfg, a) != signs[i] * corner_spin(cfg, b)) return false;
        }
        return true;
    }
};

struct PlaquetteDecomposition {
    DenseTensor T, T1, T2, T3;
    double c1 = 0.0, c2 = 0.0, uniform = 0.0;
    LockPattern pattern1;  // edges mn & op
    LockPattern pattern2;  // edges no & pm

    /// (p1, p2, p3) for corner configuration cfg.
    Probs3 probs(std::size_t cfg) const {
        const double t = T[cfg];
        return {T1[cfg] / t, T2[cfg] / t, T3[cfg] / t};
    }
};

/// Splits a frustrated plaquette tensor into two locking components plus a uniform one.
/// The locking coefficients come from the exact-sum constraint, c = e^{2K} - e^{-2K}.
inline PlaquetteDecomposition kbd_decompose(const DenseTensor& T) {
    if (T.shape() != std::vector<std::size_t>{2, 2, 2, 2}) throw InvalidArgument("plaquette tensor must be 2x2x2x2");
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (double v : T.data()) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    if (!(lo > 0.0)) throw NonDecomposable("plaquette tensor must be positive");
    const double tol = 1e-12 * hi;
    PlaquetteDecomposition d;
    d.T = T;
    d.uniform = lo;
    d.pattern1.edges = {0, 2};
    d.pattern2.edges = {1, 3};
    if (hi - lo <= tol) {
        // infinite temperature: nothing to lock; patterns chosen disjoint
        d.pattern2.signs = {1, -1};
    } else {
        auto is_hi = [&](std::size_t cfg) { return std::abs(T[cfg] - hi) <= tol; };
        for (std::size_t cfg = 0; cfg < 16; ++cfg)
            if (!is_hi(cfg) && std::abs(T[cfg] - lo) > tol)
                throw NonDecomposable("plaquette tensor takes more than two values (unfrustrated plaquette?)");
        auto find_pattern = [&](LockPattern& p) {
            for (int s0 : {1, -1})
                for (int s1 : {1, -1}) {
                    p.signs = {s0, s1};
                    bool ok = true;
                    for (std::size_t cfg = 0; cfg < 16 && ok; ++cfg)
                        if (p.compatible(cfg) && !is_hi(cfg)) ok = false;
                    if (ok) return true;
                }
            return false;
        };
        if (!find_pattern(d.pattern1) || !find_pattern(d.pattern2))
            throw NonDecomposable("no locking pattern matches the plaquette tensor");
        for (std::size_t cfg = 0; cfg < 16; ++cfg) {
            const bool in1 = d.pattern1.compatible(cfg), in2 = d.pattern2.compatible(cfg);
            if (in1 && in2) throw NonDecomposable("locking patterns overlap");
            if (is_hi(cfg) != (in1 || in2)) throw NonDecomposable("locking patterns do not cover the maximal entries");
        }
    }
    d.c1 = d.c2 = hi - lo;
    d.T1 = DenseTensor(T.shape(), T.axes());
    d.T2 = DenseTensor(T.shape(), T.axes());
    d.T3 = DenseTensor(T.shape(), T.axes(), lo);
    for (std::size_t cfg = 0; cfg < 16; ++cfg) {
        if (d.pattern1.compatible(cfg)) d.T1[cfg] = d.c1;
        if (d.pattern2.compatible(cfg)) d.T2[cfg] = d.c2;
    }
    return d;
}

}  // namespace tgmc
