#pragma once

#include <memory>
#include <string>

#include "tgmc/harness/config.hpp"
#include "tgmc/kbd_sampler.hpp"
#include "tgmc/lattice.hpp"
#include "tgmc/metropolis.hpp"
#include "tgmc/rng.hpp"
#include "tgmc/tg_sampler.hpp"
#include "tgmc/tgmh_sampler.hpp"

namespace tgmc::harness {

struct SweepResult {
    double accept = 1.0;
    double truncation_error = 0.0;
};

/// One Markov chain with a uniform sweep interface.
class Chain {
public:
    virtual ~Chain() = default;
    virtual SweepResult sweep(Rng& rng) = 0;
    /// Configuration on which observables are measured.
    virtual const SpinConfiguration& measured() const = 0;
};

inline Lattice make_lattice(const ModelSpec& m, std::size_t L) {
    std::vector<std::size_t> dims(static_cast<std::size_t>(m.dimension()), L);
    return Lattice(dims, m.boundary);
}

/// Couplings at J (β = 1) for one disorder realization.
inline CouplingField make_coupling(const ModelSpec& m, const Lattice& lat, std::uint64_t disorder_seed) {
    Rng rng(disorder_seed);
    if (m.kind == "ffi2d") return fully_frustrated(lat, m.coupling);
    if (m.kind == "ea2d_pmJ") return sample_disorder(lat, Disorder::pm_j(m.coupling), rng);
    CouplingField c = sample_disorder(lat, Disorder::ferro(m.coupling), rng);
    if (m.kind == "ising2d_field") set_uniform_field(c, m.field);
    return c;
}

inline TgConfig tg_config(const SamplerSpec& s) {
    TgConfig c;
    if (s.preset == "wolff") c = TgConfig::wolff();
    else if (s.preset == "niedermayer") c = TgConfig::niedermayer(s.W);
    else if (s.preset == "explicit") c = TgConfig::explicit_xy(s.X, s.Y);
    if (s.flip_rule == "gibbs") {
        c.flip = FlipRule::gibbs;
        c.scope = ClusterScope::all_clusters;
    } else if (s.flip_rule == "wolff") {
        c.flip = FlipRule::wolff_deterministic;
        c.scope = ClusterScope::single_random_cluster;
    }
    return c;
}

inline ClusterScheme cluster_scheme(const SamplerSpec& s) {
    if (s.scheme == "tiles") return ClusterScheme::tiles(s.tile_w, s.tile_h, s.tile_d);
    if (s.scheme == "slabs") return ClusterScheme::slabs(s.slab_axis, s.thickness);
    return ClusterScheme::full_lattice();
}

inline ChiSchedule chi_schedule(const SamplerSpec& s) {
    return s.chi_exact ? ChiSchedule::exact_contraction() : ChiSchedule::bounded(s.chi);
}

namespace detail {

class MetropolisChain final : public Chain {
public:
    MetropolisChain(const Lattice& lat, const CouplingField& c, SpinConfiguration s) : sampler_(lat, c), s_(std::move(s)) {}
    SweepResult sweep(Rng& rng) override {
        const auto acc = sampler_.sweep(s_, rng);
        return {static_cast<double>(acc) / static_cast<double>(s_.size()), 0.0};
    }
    const SpinConfiguration& measured() const override { return s_; }

private:
    MetropolisSampler sampler_;
    SpinConfiguration s_;
};

class TgChain final : public Chain {
public:
    TgChain(const Lattice& lat, const CouplingField& c, const TgConfig& cfg, SpinConfiguration s) : sampler_(lat, c, cfg) {
        st_.spins = std::move(s);
    }
    SweepResult sweep(Rng& rng) override {
        sampler_.step(st_, rng);
        if (sampler_.ghost_on()) view_ = ghost_observable_transform(st_.spins, st_.ghost);
        return {1.0, 0.0};
    }
    const SpinConfiguration& measured() const override { return sampler_.ghost_on() && !view_.spins.empty() ? view_ : st_.spins; }

private:
    TgSampler sampler_;
    TgState st_;
    SpinConfiguration view_;
};

class KbdChain final : public Chain {
public:
    KbdChain(const Lattice& lat, const CouplingField& c, KbdSampler::Flip f, SpinConfiguration s) : sampler_(lat, c, f), s_(std::move(s)) {}
    SweepResult sweep(Rng& rng) override {
        sampler_.step(s_, rng);
        return {1.0, 0.0};
    }
    const SpinConfiguration& measured() const override { return s_; }

private:
    KbdSampler sampler_;
    SpinConfiguration s_;
};

class TgmhChain final : public Chain {
public:
    TgmhChain(const Lattice& lat, const CouplingField& c, ClusterScheme scheme, ChiSchedule chi, SpinConfiguration s)
        : sampler_(lat, c, scheme, chi), s_(std::move(s)) {}
    SweepResult sweep(Rng& rng) override {
        const auto st = sampler_.sweep(s_, rng);
        return {st.acceptance(), st.truncation_error};
    }
    const SpinConfiguration& measured() const override { return s_; }

private:
    TgmhSampler sampler_;
    SpinConfiguration s_;
};

}  // namespace detail

/// `coupling` is already scaled by β. The initial state is drawn from `rng`.
inline std::unique_ptr<Chain> make_chain(const SamplerSpec& s, const Lattice& lat, const CouplingField& coupling, Rng& rng) {
    SpinConfiguration init = random_spins(lat.num_sites(), rng);
    if (s.kind == "metropolis") return std::make_unique<detail::MetropolisChain>(lat, coupling, std::move(init));
    if (s.kind == "tg") return std::make_unique<detail::TgChain>(lat, coupling, tg_config(s), std::move(init));
    if (s.kind == "ghost_tg") {
        TgConfig c;
        c.ghost = s.ghost == "explicit" ? TgConfig::Ghost::explicit_ef : TgConfig::Ghost::swendsen_wang;
        c.E = s.E;
        c.F = s.F;
        return std::make_unique<detail::TgChain>(lat, coupling, c, std::move(init));
    }
    if (s.kind == "kbd")
        return std::make_unique<detail::KbdChain>(lat, coupling,
                                                  s.kbd_flip == "single" ? KbdSampler::Flip::single_cluster : KbdSampler::Flip::all_clusters_half,
                                                  std::move(init));
    if (s.kind == "tgmh")
        return std::make_unique<detail::TgmhChain>(lat, coupling, cluster_scheme(s), chi_schedule(s), std::move(init));
    throw ConfigError("unknown sampler kind '" + s.kind + "'");
}

}  // namespace tgmc::harness
