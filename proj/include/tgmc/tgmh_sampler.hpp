#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tgmc/boundary_mps.hpp"
#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/mps.hpp"
#include "tgmc/rng.hpp"
#include "tgmc/site_tensors.hpp"

namespace tgmc {

struct ClusterScheme {
    enum class Kind { full_lattice, tiles, slabs } kind = Kind::full_lattice;
    std::size_t tile_w = 0, tile_h = 0, tile_d = 1;
    int slab_axis = 2;
    std::size_t thickness = 1;

    static ClusterScheme full_lattice() { return {}; }
    static ClusterScheme tiles(std::size_t w, std::size_t h, std::size_t d = 1) {
        ClusterScheme s;
        s.kind = Kind::tiles;
        s.tile_w = w;
        s.tile_h = h;
        s.tile_d = d;
        return s;
    }
    static ClusterScheme slabs(int axis, std::size_t thickness) {
        ClusterScheme s;
        s.kind = Kind::slabs;
        s.slab_axis = axis;
        s.thickness = thickness;
        return s;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::full_lattice: return "full_lattice";
            case Kind::tiles:
                return "tiles(" + std::to_string(tile_w) + "," + std::to_string(tile_h) + "," + std::to_string(tile_d) + ")";
            default: return "slabs(axis=" + std::to_string(slab_axis) + ",thickness=" + std::to_string(thickness) + ")";
        }
    }
};

/// Bond dimension for the boundary MPS. `exact` keeps every singular value above the
/// relative cutoff.
struct ChiSchedule {
    std::size_t chi = 16;
    bool exact = false;

    static ChiSchedule exact_contraction() { return {0, true}; }
    static ChiSchedule bounded(std::size_t chi) {
        if (chi < 1) throw InvalidArgument("chi must be >= 1");
        return {chi, false};
    }
    std::size_t mps_chi() const { return exact ? 0 : chi; }
};

/// A cluster laid out as a width x height grid of cells; each cell stacks `thickness`
/// sites. Cell states use bit k for stack position k, bit set = spin down.
struct GridCluster {
    std::size_t width = 1, height = 1, thickness = 1;
    std::vector<std::size_t> sites;  // ((row * width + col) * thickness + k), i.e. raster order

    std::size_t num_cells() const { return width * height; }
    std::size_t site(std::size_t row, std::size_t col, std::size_t k) const {
        return sites[(row * width + col) * thickness + k];
    }
};

namespace detail {

inline GridCluster box_cluster(const Lattice& lat, const std::array<std::size_t, 3>& lo, const std::array<std::size_t, 3>& hi,
                               const std::array<int, 3>& roles) {
    GridCluster g;
    g.width = hi[roles[0]] - lo[roles[0]];
    g.height = hi[roles[1]] - lo[roles[1]];
    g.thickness = hi[roles[2]] - lo[roles[2]];
    if (g.thickness > 20) throw UnsupportedCluster("cell stack too deep");
    for (std::size_t r = 0; r < g.height; ++r)
        for (std::size_t c = 0; c < g.width; ++c)
            for (std::size_t k = 0; k < g.thickness; ++k) {
                std::array<std::size_t, 3> x{};
                x[roles[0]] = lo[roles[0]] + c;
                x[roles[1]] = lo[roles[1]] + r;
                x[roles[2]] = lo[roles[2]] + k;
                g.sites.push_back(lat.site(x));
            }
    return g;
}

/// Block boundaries [0, b, 2b, ..., n].
inline std::vector<std::size_t> blocks(std::size_t n, std::size_t b) {
    if (b == 0) throw InvalidArgument("block size must be positive");
    std::vector<std::size_t> cuts;
    for (std::size_t x = 0; x < n; x += b) cuts.push_back(x);
    cuts.push_back(n);
    return cuts;
}

inline std::vector<std::size_t> halves(std::size_t n, bool split) {
    if (!split) return {0, n};
    return {0, n / 2, n};
}

}  // namespace detail

inline std::vector<GridCluster> build_clusters(const Lattice& lat, const ClusterScheme& scheme) {
    const int dim = lat.dimension();
    const std::array<std::size_t, 3> ext{lat.extent(0), lat.extent(1), lat.extent(2)};
    const bool per = lat.boundary() == Boundary::periodic;
    std::vector<GridCluster> out;
    auto emit = [&](const std::vector<std::size_t>& cx, const std::vector<std::size_t>& cy, const std::vector<std::size_t>& cz,
                    std::array<int, 3> roles, const std::array<int, 3>& axis_of) {
        for (std::size_t iz = 0; iz + 1 < cz.size(); ++iz)
            for (std::size_t iy = 0; iy + 1 < cy.size(); ++iy)
                for (std::size_t ix = 0; ix + 1 < cx.size(); ++ix) {
                    std::array<std::size_t, 3> lo{}, hi{};
                    lo[axis_of[0]] = cx[ix];
                    hi[axis_of[0]] = cx[ix + 1];
                    lo[axis_of[1]] = cy[iy];
                    hi[axis_of[1]] = cy[iy + 1];
                    lo[axis_of[2]] = cz[iz];
                    hi[axis_of[2]] = cz[iz + 1];
                    out.push_back(detail::box_cluster(lat, lo, hi, roles));
                }
    };
    switch (scheme.kind) {
        case ClusterScheme::Kind::full_lattice:
            emit({0, ext[0]}, {0, ext[1]}, {0, ext[2]}, {0, 1, 2}, {0, 1, 2});
            break;
        case ClusterScheme::Kind::tiles:
            emit(detail::blocks(ext[0], scheme.tile_w), detail::blocks(ext[1], scheme.tile_h),
                 detail::blocks(ext[2], dim == 3 ? scheme.tile_d : 1), {0, 1, 2}, {0, 1, 2});
            break;
        case ClusterScheme::Kind::slabs: {
            const int a = scheme.slab_axis;
            if (a < 0 || a >= dim) throw InvalidArgument("slab axis outside lattice dimension");
            if (scheme.thickness < 1) throw InvalidArgument("slab thickness must be >= 1");
            if (dim == 3) {
                std::array<int, 2> plane{};
                int k = 0;
                for (int b = 0; b < 3; ++b)
                    if (b != a) plane[k++] = b;
                // columns follow the first in-plane axis, rows the second, cells stack along the slab axis
                emit(detail::halves(ext[plane[0]], per), detail::halves(ext[plane[1]], per), detail::blocks(ext[a], scheme.thickness),
                     {plane[0], plane[1], a}, {plane[0], plane[1], a});
            } else {
                const int other = 1 - a;
                // strips of `thickness` lines across the slab axis, split in halves along a periodic direction
                std::vector<std::size_t> along = detail::halves(ext[other], per);
                std::vector<std::size_t> across = detail::blocks(ext[a], scheme.thickness);
                if (a == 1) emit(along, across, {0, 1}, {0, 1, 2}, {0, 1, 2});
                else emit(across, along, {0, 1}, {0, 1, 2}, {0, 1, 2});
            }
            break;
        }
    }
    return out;
}

struct Proposal {
    std::size_t cluster = 0;
    std::vector<Spin> spins;  // cluster sites in raster order
    double log_q_fwd = 0.0;
    double log_q_rev = 0.0;
};

struct TgmhDiagnostics {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    std::size_t floored = 0;     // conditional entries clamped to the probability floor
    std::size_t env_builds = 0;
    double truncation_error = 0.0;  // of the most recently used environment
    std::size_t max_bond = 1;
};

struct SweepStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    double truncation_error = 0.0;  // max over the clusters of the sweep
    double acceptance() const { return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0; }
};

inline constexpr double probability_floor = 1e-300;

/// Sequential-conditional cluster proposals contracted with a boundary MPS, corrected
/// by a Metropolis-Hastings test. The full-lattice scheme gives TNMH.
class TgmhSampler {
public:
    TgmhSampler(const Lattice& lat, const CouplingField& coupling, ClusterScheme scheme, ChiSchedule chi)
        : lat_(&lat), coupling_(coupling), scheme_(scheme), chi_(chi) {
        if (coupling_.edge_K.size() != lat.num_edges() || coupling_.site_field.size() != lat.num_sites())
            throw InvalidArgument("coupling field does not match lattice");
        const auto grids = build_clusters(lat, scheme);
        owner_.assign(lat.num_sites(), SIZE_MAX);
        for (std::size_t k = 0; k < grids.size(); ++k)
            for (auto s : grids[k].sites) {
                if (owner_[s] != SIZE_MAX) throw InvalidArgument("clusters overlap");
                owner_[s] = k;
            }
        for (auto o : owner_)
            if (o == SIZE_MAX) throw InvalidArgument("clusters do not cover the lattice");
        for (std::size_t k = 0; k < grids.size(); ++k) models_.push_back(build_model(grids[k], k));
    }

    std::size_t num_clusters() const { return models_.size(); }
    const GridCluster& cluster(std::size_t k) const { return models_[k].grid; }
    const ClusterScheme& scheme() const { return scheme_; }
    const ChiSchedule& chi() const { return chi_; }
    const TgmhDiagnostics& diagnostics() const { return diag_; }

    /// Draws the cluster in raster order and scores both directions.
    Proposal propose(std::size_t k, const SpinConfiguration& s, Rng& rng) {
        auto& m = models_[k];
        prepare(m, s);
        Proposal p;
        p.cluster = k;
        std::vector<std::uint32_t> cells(m.grid.num_cells());
        p.log_q_fwd = walk(m, cells, &rng);
        p.spins.resize(m.grid.sites.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            for (std::size_t t = 0; t < m.grid.thickness; ++t) p.spins[c * m.grid.thickness + t] = bit_spin(cells[c], t);
        std::vector<std::uint32_t> cur = current_cells(m, s);
        p.log_q_rev = walk(m, cur, nullptr);
        ++diag_.proposals;
        return p;
    }

    /// log q of a given cluster configuration (raster order spins) with the rest of `s` fixed.
    double log_proposal_probability(std::size_t k, const SpinConfiguration& s, const std::vector<Spin>& cluster_spins) {
        auto& m = models_[k];
        prepare(m, s);
        std::vector<std::uint32_t> cells(m.grid.num_cells(), 0);
        for (std::size_t i = 0; i < cluster_spins.size(); ++i)
            if (cluster_spins[i] < 0) cells[i / m.grid.thickness] |= 1U << (i % m.grid.thickness);
        return walk(m, cells, nullptr);
    }

    /// log weight of everything that touches cluster k: internal and boundary bonds plus fields.
    double subsystem_log_weight(std::size_t k, const SpinConfiguration& s) const {
        const auto& m = models_[k];
        double w = 0.0;
        for (auto e : m.incident) {
            const auto& ed = lat_->edge(e);
            w += coupling_.edge_K[e] * s[ed.u] * s[ed.v];
        }
        for (auto i : m.grid.sites) w += coupling_.site_field[i] * s[i];
        return w;
    }

    double log_acceptance(const Proposal& p, const SpinConfiguration& s) const {
        const auto& m = models_[p.cluster];
        SpinConfiguration prop = s;
        for (std::size_t i = 0; i < m.grid.sites.size(); ++i) prop[m.grid.sites[i]] = p.spins[i];
        const double d = subsystem_log_weight(p.cluster, prop) - subsystem_log_weight(p.cluster, s);
        return d + p.log_q_rev - p.log_q_fwd;
    }

    bool accept(const Proposal& p, SpinConfiguration& s, Rng& rng) {
        const double la = log_acceptance(p, s);
        const bool ok = la >= 0.0 || uniform01(rng) < std::exp(la);
        if (ok) {
            const auto& m = models_[p.cluster];
            for (std::size_t i = 0; i < m.grid.sites.size(); ++i) s[m.grid.sites[i]] = p.spins[i];
            ++diag_.accepted;
        }
        return ok;
    }

    SweepStats sweep(SpinConfiguration& s, Rng& rng) {
        SweepStats st;
        for (std::size_t k = 0; k < models_.size(); ++k) {
            const Proposal p = propose(k, s, rng);
            st.truncation_error = std::max(st.truncation_error, models_[k].env_error);
            ++st.proposals;
            if (accept(p, s, rng)) ++st.accepted;
        }
        return st;
    }

    /// Per-cell conditional distributions met while scoring `cluster_spins`; for tests.
    std::vector<std::vector<double>> conditionals(std::size_t k, const SpinConfiguration& s, const std::vector<Spin>& cluster_spins) {
        auto& m = models_[k];
        prepare(m, s);
        std::vector<std::uint32_t> cells(m.grid.num_cells(), 0);
        for (std::size_t i = 0; i < cluster_spins.size(); ++i)
            if (cluster_spins[i] < 0) cells[i / m.grid.thickness] |= 1U << (i % m.grid.thickness);
        std::vector<std::vector<double>> out;
        walk(m, cells, nullptr, &out);
        return out;
    }

private:
    struct CellTerm {
        std::size_t k, outside;
        std::size_t edge;
    };
    struct IntraTerm {
        std::size_t k1, k2, edge;
    };
    struct Model {
        GridCluster grid;
        std::size_t d = 2;
        std::vector<std::vector<IntraTerm>> intra;  // per cell
        std::vector<std::vector<CellTerm>> outside;  // per cell
        std::vector<RowMatrix> hor;                  // (row, col) -> cell (row, col+1), index row * width + col
        std::vector<RowMatrix> ver;                  // (row, col) -> cell (row+1, col)
        std::vector<std::size_t> incident;
        std::vector<std::size_t> outside_sites;
        // per visit
        std::vector<std::vector<double>> local;
        std::optional<std::vector<Spin>> env_key;
        std::vector<Mps> env;  // env[r]: rows above r, physical index = state of row r
        double env_error = 0.0;
    };

    static Spin bit_spin(std::uint32_t a, std::size_t k) { return ((a >> k) & 1U) ? Spin{-1} : Spin{1}; }

    Model build_model(const GridCluster& g, std::size_t k) const {
        Model m;
        m.grid = g;
        m.d = std::size_t{1} << g.thickness;
        const std::size_t nc = g.num_cells();
        m.intra.resize(nc);
        m.outside.resize(nc);
        m.hor.assign(nc, RowMatrix::Zero(m.d, m.d));
        m.ver.assign(nc, RowMatrix::Zero(m.d, m.d));
        struct Pos {
            std::size_t row, col, k;
        };
        std::map<std::size_t, Pos> pos;
        for (std::size_t r = 0; r < g.height; ++r)
            for (std::size_t c = 0; c < g.width; ++c)
                for (std::size_t t = 0; t < g.thickness; ++t) pos[g.site(r, c, t)] = {r, c, t};
        std::vector<std::uint8_t> seen(lat_->num_edges(), 0), out_seen(lat_->num_sites(), 0);
        for (auto s : g.sites)
            for (const auto& nb : lat_->neighbors(s)) {
                if (seen[nb.edge]) continue;
                seen[nb.edge] = 1;
                m.incident.push_back(nb.edge);
                const double K = coupling_.edge_K[nb.edge];
                const Pos a = pos.at(s);
                const std::size_t ca = a.row * g.width + a.col;
                if (owner_[nb.site] != k) {
                    m.outside[ca].push_back({a.k, nb.site, nb.edge});
                    if (!out_seen[nb.site]) {
                        out_seen[nb.site] = 1;
                        m.outside_sites.push_back(nb.site);
                    }
                    continue;
                }
                Pos b = pos.at(nb.site);
                Pos lo = a, hi = b;
                if (b.row < a.row || (b.row == a.row && b.col < a.col)) std::swap(lo, hi);
                const std::size_t cl = lo.row * g.width + lo.col;
                if (lo.row == hi.row && lo.col == hi.col) {
                    m.intra[cl].push_back({lo.k, hi.k, nb.edge});
                    continue;
                }
                RowMatrix* target = nullptr;
                if (lo.row == hi.row && hi.col == lo.col + 1) target = &m.hor[cl];
                else if (lo.col == hi.col && hi.row == lo.row + 1) target = &m.ver[cl];
                else throw UnsupportedCluster("cluster has a bond between cells that are not grid neighbours");
                for (std::size_t x = 0; x < m.d; ++x)
                    for (std::size_t y = 0; y < m.d; ++y)
                        (*target)(x, y) += K * bit_spin(static_cast<std::uint32_t>(x), lo.k) * bit_spin(static_cast<std::uint32_t>(y), hi.k);
            }
        std::sort(m.outside_sites.begin(), m.outside_sites.end());
        for (auto* mats : {&m.hor, &m.ver})
            for (auto& mat : *mats) {
                const double mx = mat.maxCoeff();
                mat = (mat.array() - mx).exp().matrix();
            }
        return m;
    }

    std::vector<std::uint32_t> current_cells(const Model& m, const SpinConfiguration& s) const {
        std::vector<std::uint32_t> cells(m.grid.num_cells(), 0);
        for (std::size_t i = 0; i < m.grid.sites.size(); ++i)
            if (s[m.grid.sites[i]] < 0) cells[i / m.grid.thickness] |= 1U << (i % m.grid.thickness);
        return cells;
    }

    /// Local cell weights for the current outside spins; rebuilds the environments when
    /// those spins changed since the last visit.
    void prepare(Model& m, const SpinConfiguration& s) {
        std::vector<Spin> key;
        key.reserve(m.outside_sites.size());
        for (auto o : m.outside_sites) key.push_back(s[o]);
        if (m.env_key && *m.env_key == key) return;
        m.env_key = std::move(key);
        const auto& g = m.grid;
        m.local.assign(g.num_cells(), std::vector<double>(m.d));
        for (std::size_t c = 0; c < g.num_cells(); ++c) {
            std::vector<double> h(g.thickness, 0.0);
            for (std::size_t t = 0; t < g.thickness; ++t) h[t] = coupling_.site_field[g.sites[c * g.thickness + t]];
            for (const auto& o : m.outside[c]) h[o.k] += coupling_.edge_K[o.edge] * s[o.outside];
            double mx = -std::numeric_limits<double>::infinity();
            for (std::uint32_t a = 0; a < m.d; ++a) {
                double lw = 0.0;
                for (std::size_t t = 0; t < g.thickness; ++t) lw += h[t] * bit_spin(a, t);
                for (const auto& in : m.intra[c]) lw += coupling_.edge_K[in.edge] * bit_spin(a, in.k1) * bit_spin(a, in.k2);
                m.local[c][a] = lw;
                mx = std::max(mx, lw);
            }
            for (auto& v : m.local[c]) v = std::exp(v - mx);
        }
        build_env(m);
    }

    void build_env(Model& m) {
        const auto& g = m.grid;
        const std::size_t W = g.width, H = g.height, d = m.d;
        m.env.assign(H, Mps{});
        m.env[H - 1] = Mps::ones(W, d);
        double err2 = 0.0;
        std::size_t max_bond = 1;
        for (std::size_t r = H - 1; r >= 1; --r) {
            const Mps& above = m.env[r];
            Mps next;
            for (std::size_t c = 0; c < W; ++c) {
                const DenseTensor& A = above.sites[c];
                const std::size_t Dl = A.extent(0), Dr = A.extent(2);
                const std::size_t hl = c > 0 ? d : 1, hr = c + 1 < W ? d : 1;
                const auto& loc = m.local[r * W + c];
                const RowMatrix& V = m.ver[(r - 1) * W + c];
                DenseTensor N({Dl * hl, d, Dr * hr}, {Axis::left, Axis::physical, Axis::right});
                for (std::size_t b = 0; b < Dl; ++b)
                    for (std::size_t l = 0; l < hl; ++l)
                        for (std::size_t a = 0; a < d; ++a) {
                            const double w = loc[a] * (c > 0 ? m.hor[r * W + c - 1](l, a) : 1.0);
                            if (w == 0.0) continue;
                            for (std::size_t out = 0; out < d; ++out) {
                                const double wv = w * V(out, a);
                                for (std::size_t bp = 0; bp < Dr; ++bp) {
                                    const std::size_t rr = hr == 1 ? 0 : a;
                                    N[((b * hl + l) * d + out) * (Dr * hr) + bp * hr + rr] += A[(b * d + a) * Dr + bp] * wv;
                                }
                            }
                        }
                next.sites.push_back(std::move(N));
            }
            const auto st = compress(next, chi_.mps_chi());
            err2 += st.truncation_error * st.truncation_error;
            max_bond = std::max(max_bond, st.max_bond);
            m.env[r - 1] = std::move(next);
        }
        m.env_error = std::sqrt(err2);
        ++diag_.env_builds;
        diag_.truncation_error = m.env_error;
        diag_.max_bond = std::max(diag_.max_bond, max_bond);
    }

    /// Raster walk through the cluster. With `rng`, cells are drawn and written into
    /// `cells`; without, the given states are scored. Returns log q.
    double walk(Model& m, std::vector<std::uint32_t>& cells, Rng* rng, std::vector<std::vector<double>>* record = nullptr) {
        const auto& g = m.grid;
        const std::size_t W = g.width, d = m.d;
        double logq = 0.0;
        std::vector<double> loc(d), w(d);
        std::vector<std::vector<double>> Z(W);  // Z[c][beta * d + a]
        std::vector<std::vector<double>> R(W);  // R[c][beta * d + a], beta = right bond of env site c
        for (std::size_t r = 0; r < g.height; ++r) {
            const Mps& env = m.env[r];
            std::vector<std::vector<double>> locp(W, std::vector<double>(d));
            for (std::size_t c = 0; c < W; ++c)
                for (std::size_t a = 0; a < d; ++a)
                    locp[c][a] = m.local[r * W + c][a] * (r > 0 ? m.ver[(r - 1) * W + c](cells[(r - 1) * W + c], a) : 1.0);
            // right environments
            for (std::size_t c = W; c-- > 0;) {
                const DenseTensor& A = env.sites[c];
                const std::size_t Dl = A.extent(0), Dr = A.extent(2);
                auto& z = Z[c];
                z.assign(Dl * d, 0.0);
                for (std::size_t b = 0; b < Dl; ++b)
                    for (std::size_t a = 0; a < d; ++a) {
                        double acc = 0.0;
                        if (c + 1 == W) {
                            for (std::size_t bp = 0; bp < Dr; ++bp) acc += A[(b * d + a) * Dr + bp];
                        } else {
                            const auto& rn = R[c];
                            for (std::size_t bp = 0; bp < Dr; ++bp) acc += A[(b * d + a) * Dr + bp] * rn[bp * d + a];
                        }
                        z[b * d + a] = acc * locp[c][a];
                    }
                if (c == 0) break;
                // R[c-1][b, a'] = sum_a z[b, a] hor(a', a)
                const RowMatrix& Hm = m.hor[r * W + c - 1];
                auto& rp = R[c - 1];
                rp.assign(Dl * d, 0.0);
                double mx = 0.0;
                for (std::size_t b = 0; b < Dl; ++b)
                    for (std::size_t ap = 0; ap < d; ++ap) {
                        double acc = 0.0;
                        for (std::size_t a = 0; a < d; ++a) acc += z[b * d + a] * Hm(ap, a);
                        rp[b * d + ap] = acc;
                        mx = std::max(mx, std::abs(acc));
                    }
                if (mx > 0.0)
                    for (auto& v : rp) v /= mx;
            }
            // left to right
            std::vector<double> L{1.0};
            for (std::size_t c = 0; c < W; ++c) {
                const DenseTensor& A = env.sites[c];
                const std::size_t Dl = A.extent(0), Dr = A.extent(2);
                const auto& z = Z[c];
                for (std::size_t a = 0; a < d; ++a) {
                    double acc = 0.0;
                    for (std::size_t b = 0; b < Dl; ++b) acc += L[b] * z[b * d + a];
                    if (c > 0) acc *= m.hor[r * W + c - 1](cells[r * W + c - 1], a);
                    w[a] = acc;
                }
                double total = 0.0;
                for (auto& v : w) {
                    if (!(v > probability_floor) || !std::isfinite(v)) {
                        v = probability_floor;
                        ++diag_.floored;
                    }
                    total += v;
                }
                for (auto& v : w) v /= total;
                std::uint32_t a = 0;
                if (rng) {
                    double u = uniform01(*rng), acc = 0.0;
                    a = static_cast<std::uint32_t>(d - 1);
                    for (std::size_t x = 0; x < d; ++x) {
                        acc += w[x];
                        if (u < acc) {
                            a = static_cast<std::uint32_t>(x);
                            break;
                        }
                    }
                    cells[r * W + c] = a;
                } else {
                    a = cells[r * W + c];
                }
                if (record) record->push_back(w);
                logq += std::log(w[a]);
                // advance the left vector
                std::vector<double> Ln(Dr, 0.0);
                double f = locp[c][a] * (c > 0 ? m.hor[r * W + c - 1](cells[r * W + c - 1], a) : 1.0);
                double mx = 0.0;
                for (std::size_t b = 0; b < Dl; ++b) {
                    if (L[b] == 0.0) continue;
                    for (std::size_t bp = 0; bp < Dr; ++bp) Ln[bp] += L[b] * A[(b * d + a) * Dr + bp] * f;
                }
                for (auto v : Ln) mx = std::max(mx, std::abs(v));
                if (mx > 0.0)
                    for (auto& v : Ln) v /= mx;
                L = std::move(Ln);
            }
        }
        return logq;
    }

    const Lattice* lat_;
    CouplingField coupling_;
    ClusterScheme scheme_;
    ChiSchedule chi_;
    std::vector<std::size_t> owner_;
    std::vector<Model> models_;
    TgmhDiagnostics diag_;
};

inline SweepStats tgmh_sweep(TgmhSampler& sampler, SpinConfiguration& s, Rng& rng) { return sampler.sweep(s, rng); }

// ---------------------------------------------------------------------------
// Site-tensor route: one boundary-MPS contraction of the whole lattice per conditional.

/// p̃(σ_site | observed) on an open 2D lattice, normalized in L1.
inline std::array<double, 2> conditional_vector(const CouplingField& coupling, const Lattice& lat,
                                                const std::map<std::size_t, Spin>& observed, std::size_t site,
                                                std::size_t chi, std::size_t* floored = nullptr) {
    const SiteTensorSet set = build_site_tensors(coupling, lat, observed, site);
    const ContractionResult res = boundary_mps_contract(set.grid, chi);
    std::array<double, 2> p{res.value[0], res.value[1]};
    for (auto& v : p)
        if (!(v > probability_floor) || !std::isfinite(v)) {
            v = probability_floor;
            if (floored) ++*floored;
        }
    const double t = p[0] + p[1];
    return {p[0] / t, p[1] / t};
}

/// Same proposal as TgmhSampler::propose for a single-thickness cluster, computed site by
/// site with conditional_vector.
inline Proposal reference_proposal(const Lattice& lat, const CouplingField& coupling, const GridCluster& cluster,
                                   const SpinConfiguration& s, std::size_t chi, Rng& rng) {
    if (cluster.thickness != 1) throw UnsupportedCluster("reference proposals need single-site cells");
    std::map<std::size_t, Spin> outside;
    std::vector<std::uint8_t> in(lat.num_sites(), 0);
    for (auto i : cluster.sites) in[i] = 1;
    for (std::size_t i = 0; i < lat.num_sites(); ++i)
        if (!in[i]) outside[i] = s[i];
    Proposal p;
    auto obs = outside;
    for (auto i : cluster.sites) {
        const auto w = conditional_vector(coupling, lat, obs, i, chi);
        const Spin v = uniform01(rng) < w[0] ? Spin{1} : Spin{-1};
        p.log_q_fwd += std::log(w[v > 0 ? 0 : 1]);
        p.spins.push_back(v);
        obs[i] = v;
    }
    obs = outside;
    for (auto i : cluster.sites) {
        const auto w = conditional_vector(coupling, lat, obs, i, chi);
        p.log_q_rev += std::log(w[s[i] > 0 ? 0 : 1]);
        obs[i] = s[i];
    }
    return p;
}

}  // namespace tgmc
