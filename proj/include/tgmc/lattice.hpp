#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tgmc/error.hpp"

namespace tgmc {

enum class Boundary { open, periodic };

inline std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    std::size_t id = 0;
    int axis = 0;  // lattice direction u -> v
};

/// Unit face of a 2D lattice. Corners m, n, o, p run counter-clockwise from (x, y);
/// edges are mn, no, op, pm.
struct Plaquette {
    std::array<std::size_t, 4> corners{};
    std::array<std::size_t, 4> edges{};
    int parity = 0;
};

struct Neighbor {
    std::size_t site = 0;
    std::size_t edge = 0;
};

/// Square (2D) or cubic (3D) lattice. Site ids are row-major with x fastest:
/// id = x + Lx * (y + Ly * z). Edges are enumerated by (site, axis).
class Lattice {
public:
    Lattice(std::vector<std::size_t> dims, Boundary boundary) : dims_(std::move(dims)), boundary_(boundary) {
        if (dims_.size() < 2 || dims_.size() > 3) throw InvalidArgument("lattice must be 2D or 3D");
        for (auto d : dims_)
            if (d < 2) throw InvalidArgument("every lattice side must be >= 2");
        n_sites_ = 1;
        for (auto d : dims_) n_sites_ *= d;
        neighbors_.resize(n_sites_);
        for (std::size_t s = 0; s < n_sites_; ++s) {
            auto c = coords(s);
            for (int a = 0; a < dimension(); ++a) {
                auto nc = c;
                if (c[a] + 1 < dims_[a]) {
                    nc[a] = c[a] + 1;
                } else if (boundary_ == Boundary::periodic) {
                    nc[a] = 0;
                } else {
                    continue;
                }
                Edge e{s, site(nc), edges_.size(), a};
                neighbors_[e.u].push_back({e.v, e.id});
                neighbors_[e.v].push_back({e.u, e.id});
                edges_.push_back(e);
            }
        }
        if (dimension() == 2) build_plaquettes();
    }

    int dimension() const { return static_cast<int>(dims_.size()); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t extent(int axis) const { return axis < dimension() ? dims_[axis] : 1; }
    Boundary boundary() const { return boundary_; }
    std::size_t num_sites() const { return n_sites_; }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(std::size_t id) const { return edges_[id]; }
    const std::vector<Neighbor>& neighbors(std::size_t s) const { return neighbors_[s]; }
    const std::vector<Plaquette>& plaquettes() const { return plaquettes_; }

    std::array<std::size_t, 3> coords(std::size_t s) const {
        std::array<std::size_t, 3> c{0, 0, 0};
        for (int a = 0; a < dimension(); ++a) {
            c[a] = s % dims_[a];
            s /= dims_[a];
        }
        return c;
    }

    std::size_t site(const std::array<std::size_t, 3>& c) const {
        std::size_t s = 0;
        for (int a = dimension() - 1; a >= 0; --a) s = s * dims_[a] + c[a];
        return s;
    }

    std::size_t site(std::size_t x, std::size_t y, std::size_t z = 0) const { return site({x, y, z}); }

private:
    void build_plaquettes() {
        const auto lx = dims_[0], ly = dims_[1];
        const bool per = boundary_ == Boundary::periodic;
        // edge id of (site, axis)
        std::vector<std::array<std::size_t, 2>> by_dir(n_sites_, {SIZE_MAX, SIZE_MAX});
        for (const auto& e : edges_) by_dir[e.u][e.axis] = e.id;
        const std::size_t nx = per ? lx : lx - 1, ny = per ? ly : ly - 1;
        for (std::size_t y = 0; y < ny; ++y) {
            for (std::size_t x = 0; x < nx; ++x) {
                Plaquette p;
                const auto x1 = (x + 1) % lx, y1 = (y + 1) % ly;
                p.corners = {site(x, y), site(x1, y), site(x1, y1), site(x, y1)};
                p.edges = {by_dir[p.corners[0]][0], by_dir[p.corners[1]][1], by_dir[p.corners[3]][0],
                           by_dir[p.corners[0]][1]};
                p.parity = static_cast<int>((x + y) % 2);
                plaquettes_.push_back(p);
            }
        }
    }

    std::vector<std::size_t> dims_;
    Boundary boundary_;
    std::size_t n_sites_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<Neighbor>> neighbors_;
    std::vector<Plaquette> plaquettes_;
};

inline Lattice build_lattice(std::vector<std::size_t> dims, Boundary boundary) {
    return Lattice(std::move(dims), boundary);
}

using Spin = std::int8_t;

struct SpinConfiguration {
    std::vector<Spin> spins;

    SpinConfiguration() = default;
    explicit SpinConfiguration(std::size_t n, Spin value = 1) : spins(n, value) {}

    std::size_t size() const { return spins.size(); }
    Spin operator[](std::size_t i) const { return spins[i]; }
    Spin& operator[](std::size_t i) { return spins[i]; }
    void flip(std::size_t i) { spins[i] = static_cast<Spin>(-spins[i]); }
    bool operator==(const SpinConfiguration&) const = default;

    /// Bit i set means spin i is down. Only meaningful for small lattices.
    std::uint64_t index() const {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < spins.size(); ++i)
            if (spins[i] < 0) idx |= std::uint64_t{1} << i;
        return idx;
    }

    static SpinConfiguration from_index(std::uint64_t idx, std::size_t n) {
        SpinConfiguration s(n);
        for (std::size_t i = 0; i < n; ++i)
            if ((idx >> i) & 1U) s.spins[i] = -1;
        return s;
    }
};

template <class Rng>
SpinConfiguration random_spins(std::size_t n, Rng& rng) {
    SpinConfiguration s(n);
    std::bernoulli_distribution coin(0.5);
    for (auto& v : s.spins) v = coin(rng) ? Spin{1} : Spin{-1};
    return s;
}

/// Dimensionless couplings K = βJ per edge and fields B̃ = βB per site.
struct CouplingField {
    std::vector<double> edge_K;
    std::vector<double> site_field;

    CouplingField() = default;
    CouplingField(std::size_t n_edges, std::size_t n_sites) : edge_K(n_edges, 0.0), site_field(n_sites, 0.0) {}

    CouplingField scaled(double beta) const {
        CouplingField c = *this;
        for (auto& k : c.edge_K) k *= beta;
        for (auto& b : c.site_field) b *= beta;
        return c;
    }

    bool has_field() const {
        for (double b : site_field)
            if (b != 0.0) return true;
        return false;
    }
};

struct Disorder {
    enum class Kind { ferro, pm_j, gaussian } kind = Kind::ferro;
    double K = 1.0;

    static Disorder ferro(double k) { return {Kind::ferro, k}; }
    static Disorder pm_j(double k) { return {Kind::pm_j, k}; }
    static Disorder gaussian(double scale) { return {Kind::gaussian, scale}; }
};

template <class Rng>
CouplingField sample_disorder(const Lattice& lat, Disorder d, Rng& rng) {
    if (d.kind != Disorder::Kind::gaussian && !(d.K > 0.0)) throw InvalidArgument("coupling strength must be positive");
    CouplingField c(lat.num_edges(), lat.num_sites());
    switch (d.kind) {
        case Disorder::Kind::ferro:
            for (auto& k : c.edge_K) k = d.K;
            break;
        case Disorder::Kind::pm_j: {
            std::bernoulli_distribution coin(0.5);
            for (auto& k : c.edge_K) k = coin(rng) ? d.K : -d.K;
            break;
        }
        case Disorder::Kind::gaussian: {
            std::normal_distribution<double> normal(0.0, d.K);
            for (auto& k : c.edge_K) k = normal(rng);
            break;
        }
    }
    return c;
}

/// Fully frustrated gauge: ferro x-bonds, y-bonds with sign (-1)^x. Every unit face has
/// exactly one antiferromagnetic bond (for periodic lattices Lx must be even).
inline CouplingField fully_frustrated(const Lattice& lat, double K) {
    if (lat.dimension() != 2) throw InvalidArgument("fully frustrated preset is 2D only");
    if (lat.boundary() == Boundary::periodic && lat.dims()[0] % 2 != 0)
        throw InvalidArgument("periodic fully frustrated lattice needs even Lx");
    CouplingField c(lat.num_edges(), lat.num_sites());
    for (const auto& e : lat.edges()) {
        const auto x = lat.coords(e.u)[0];
        c.edge_K[e.id] = (e.axis == 1 && x % 2 == 1) ? -K : K;
    }
    return c;
}

inline void set_uniform_field(CouplingField& c, double field) {
    for (auto& b : c.site_field) b = field;
}

/// βH = -Σ K_ij σ_i σ_j - Σ B̃_i σ_i.
inline double energy(const Lattice& lat, const CouplingField& c, const SpinConfiguration& s) {
    double e = 0.0;
    for (const auto& ed : lat.edges()) e -= c.edge_K[ed.id] * s[ed.u] * s[ed.v];
    for (std::size_t i = 0; i < lat.num_sites(); ++i) e -= c.site_field[i] * s[i];
    return e;
}

/// Local field Σ_j K_ij σ_j + B̃_i seen by site i.
inline double local_field(const Lattice& lat, const CouplingField& c, const SpinConfiguration& s, std::size_t i) {
    double h = c.site_field[i];
    for (const auto& nb : lat.neighbors(i)) h += c.edge_K[nb.edge] * s[nb.site];
    return h;
}

inline double magnetization(const SpinConfiguration& s) {
    double m = 0.0;
    for (auto v : s.spins) m += v;
    return m / static_cast<double>(s.size());
}

}  // namespace tgmc
