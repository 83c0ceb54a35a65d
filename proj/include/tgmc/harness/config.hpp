#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tgmc/error.hpp"
#include "tgmc/lattice.hpp"

namespace tgmc::harness {

struct ModelSpec {
    std::string kind = "ising2d";  // ising2d | ising3d | ea2d_pmJ | ffi2d | ising2d_field
    std::size_t L = 8;
    Boundary boundary = Boundary::periodic;
    bool boundary_given = false;
    double coupling = 1.0;  // J
    double field = 0.0;     // B, ising2d_field only

    int dimension() const { return kind == "ising3d" ? 3 : 2; }
};

struct SamplerSpec {
    std::string kind = "tg";  // metropolis | tg | ghost_tg | kbd | tgmh
    // tg
    std::string preset = "sw";  // sw | wolff | niedermayer | explicit
    double W = 1.0, X = 1.0, Y = 1.0;
    std::string flip_rule;  // gibbs | wolff; empty = preset default
    // ghost_tg
    std::string ghost = "sw";  // sw | explicit
    double E = 1.0, F = 1.0;
    // kbd
    std::string kbd_flip = "half";  // half | single
    // tgmh
    std::string scheme = "full_lattice";  // full_lattice | tiles | slabs
    std::size_t tile_w = 4, tile_h = 4, tile_d = 1;
    int slab_axis = 2;
    std::size_t thickness = 1;
    bool chi_exact = true;
    std::size_t chi = 0;

    std::string describe() const {
        std::ostringstream o;
        o << kind;
        if (kind == "tg") {
            o << "(preset=" << preset;
            if (preset == "niedermayer") o << ",W=" << W;
            if (preset == "explicit") o << ",X=" << X << ",Y=" << Y;
            if (!flip_rule.empty()) o << ",flip=" << flip_rule;
            o << ")";
        } else if (kind == "ghost_tg") {
            o << "(ghost=" << ghost;
            if (ghost == "explicit") o << ",E=" << E << ",F=" << F;
            o << ")";
        } else if (kind == "kbd") {
            o << "(flip=" << kbd_flip << ")";
        } else if (kind == "tgmh") {
            o << "(scheme=" << scheme;
            if (scheme == "tiles") o << "," << tile_w << "x" << tile_h << "x" << tile_d;
            if (scheme == "slabs") o << ",axis=" << slab_axis << ",thickness=" << thickness;
            o << ",chi=" << (chi_exact ? std::string("exact") : std::to_string(chi)) << ")";
        }
        return o.str();
    }

    /// What one recorded sweep means for this sampler.
    std::string sweep_unit() const {
        if (kind == "metropolis") return "N single-site Metropolis attempts";
        if (kind == "tgmh") return "one proposal per cluster, all clusters visited once";
        if (kind == "tg" && (preset == "wolff" || flip_rule == "wolff")) return "one single-cluster update";
        if (kind == "kbd" && kbd_flip == "single") return "one plaquette pass with a single-cluster flip";
        return "one full auxiliary-variable pass with every cluster resampled";
    }
};

struct RunSpec {
    std::vector<double> betas{0.44};
    std::size_t n_disorder = 1;
    std::size_t n_replicas = 1;
    std::size_t burn_in = 10;
    std::size_t sweeps = 100;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::size_t threads = 1;
};

struct BenchSpec {
    std::vector<std::size_t> sizes{4, 8, 16};
    double beta = 0.44;
    std::optional<SamplerSpec> baseline;
};

struct AnalysisSpec {
    double eta = 0.2;
    double alpha = 0.1;
};

struct ExperimentConfig {
    ModelSpec model;
    SamplerSpec sampler;
    RunSpec run;
    BenchSpec bench;
    AnalysisSpec analysis;
    std::vector<std::pair<std::string, std::string>> echo;  // every key as read, "section.key"

    void validate() const;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        std::istringstream is(item);
        T v{};
        is >> v;
        if (is.fail() || !is.eof()) throw ConfigError("cannot parse '" + item + "' in " + key);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key + " is empty");
    return out;
}

template <class T>
T get(const boost::property_tree::ptree& pt, const std::string& path, const T& fallback) {
    const auto node = pt.get_optional<std::string>(path);
    if (!node) return fallback;
    const std::string s = trim(*node);
    if constexpr (std::is_same_v<T, std::string>) {
        return s;
    } else {
        std::istringstream is(s);
        T v{};
        is >> v;
        if (is.fail() || !is.eof()) throw ConfigError("cannot parse value '" + s + "' for " + path);
        return v;
    }
}

inline Boundary parse_boundary(const std::string& s) {
    if (s == "open") return Boundary::open;
    if (s == "periodic") return Boundary::periodic;
    throw ConfigError("boundary must be open or periodic, got '" + s + "'");
}

inline SamplerSpec parse_sampler(const boost::property_tree::ptree& pt, const std::string& sec) {
    SamplerSpec s;
    s.kind = get<std::string>(pt, sec + ".kind", s.kind);
    s.preset = get<std::string>(pt, sec + ".preset", s.preset);
    s.W = get<double>(pt, sec + ".W", s.W);
    s.X = get<double>(pt, sec + ".X", s.X);
    s.Y = get<double>(pt, sec + ".Y", s.Y);
    s.flip_rule = get<std::string>(pt, sec + ".flip_rule", s.flip_rule);
    s.ghost = get<std::string>(pt, sec + ".ghost", s.ghost);
    s.E = get<double>(pt, sec + ".E", s.E);
    s.F = get<double>(pt, sec + ".F", s.F);
    s.kbd_flip = get<std::string>(pt, sec + ".kbd_flip", s.kbd_flip);
    s.scheme = get<std::string>(pt, sec + ".scheme", s.scheme);
    s.tile_w = get<std::size_t>(pt, sec + ".tile_w", s.tile_w);
    s.tile_h = get<std::size_t>(pt, sec + ".tile_h", s.tile_h);
    s.tile_d = get<std::size_t>(pt, sec + ".tile_d", s.tile_d);
    s.slab_axis = get<int>(pt, sec + ".slab_axis", s.slab_axis);
    s.thickness = get<std::size_t>(pt, sec + ".thickness", s.thickness);
    const std::string chi = get<std::string>(pt, sec + ".chi", "exact");
    if (chi == "exact" || chi == "0") {
        s.chi_exact = true;
        s.chi = 0;
    } else {
        s.chi_exact = false;
        s.chi = get<std::size_t>(pt, sec + ".chi", 0);
    }
    return s;
}

inline void validate_sampler(const SamplerSpec& s, const ModelSpec& m) {
    static const std::vector<std::string> kinds{"metropolis", "tg", "ghost_tg", "kbd", "tgmh"};
    if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) throw ConfigError("unknown sampler kind '" + s.kind + "'");
    if (s.kind == "tg") {
        if (s.preset != "sw" && s.preset != "wolff" && s.preset != "niedermayer" && s.preset != "explicit")
            throw ConfigError("unknown tg preset '" + s.preset + "'");
        if (!s.flip_rule.empty() && s.flip_rule != "gibbs" && s.flip_rule != "wolff")
            throw ConfigError("flip_rule must be gibbs or wolff");
    }
    if (s.kind == "ghost_tg") {
        if (m.kind != "ising2d_field") throw ConfigError("ghost_tg needs the ising2d_field model");
        if (s.ghost != "sw" && s.ghost != "explicit") throw ConfigError("ghost must be sw or explicit");
    }
    if (s.kind == "kbd") {
        if (m.kind != "ffi2d") throw ConfigError("kbd needs the ffi2d model");
        if (s.kbd_flip != "half" && s.kbd_flip != "single") throw ConfigError("kbd_flip must be half or single");
    }
    if (s.kind == "tgmh") {
        if (s.scheme != "full_lattice" && s.scheme != "tiles" && s.scheme != "slabs")
            throw ConfigError("unknown tgmh scheme '" + s.scheme + "'");
        if (!s.chi_exact && s.chi < 1) throw ConfigError("chi must be >= 1 or exact");
        if (s.scheme == "full_lattice" && m.boundary == Boundary::periodic && m.L > 2)
            throw ConfigError("full_lattice tgmh needs open boundaries; use slabs or tiles on periodic lattices");
        if (s.scheme == "tiles" && (s.tile_w < 1 || s.tile_h < 1 || s.tile_d < 1)) throw ConfigError("tile sizes must be >= 1");
        if (s.scheme == "slabs" && (s.slab_axis < 0 || s.slab_axis >= m.dimension()))
            throw ConfigError("slab_axis outside lattice dimension");
        if (s.scheme == "slabs" && s.thickness < 1) throw ConfigError("thickness must be >= 1");
    }
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
    static const std::vector<std::string> models{"ising2d", "ising3d", "ea2d_pmJ", "ffi2d", "ising2d_field"};
    if (std::find(models.begin(), models.end(), model.kind) == models.end())
        throw ConfigError("unknown model kind '" + model.kind + "'");
    if (model.L < 2) throw ConfigError("L must be >= 2");
    if (!(model.coupling > 0.0)) throw ConfigError("coupling must be positive");
    if (model.kind == "ising2d_field" && model.field == 0.0) throw ConfigError("ising2d_field needs a nonzero field");
    if (model.kind != "ising2d_field" && model.field != 0.0) throw ConfigError("field is only used by ising2d_field");
    if (model.kind == "ffi2d" && model.boundary == Boundary::periodic && model.L % 2 != 0)
        throw ConfigError("periodic ffi2d needs even L");
    if (run.betas.empty()) throw ConfigError("betas is empty");
    for (double b : run.betas)
        if (!(b > 0.0)) throw ConfigError("betas must be positive");
    if (run.n_disorder < 1 || run.n_replicas < 1 || run.sweeps < 1 || run.threads < 1)
        throw ConfigError("n_disorder, n_replicas, sweeps and threads must be >= 1");
    if (!(analysis.alpha > 0.0 && analysis.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    detail::validate_sampler(sampler, model);
    if (bench.baseline) detail::validate_sampler(*bench.baseline, model);
    for (auto L : bench.sizes)
        if (L < 2) throw ConfigError("bench sizes must be >= 2");
}

inline ExperimentConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    for (const auto& [sec, body] : tree)
        for (const auto& [key, val] : body) c.echo.emplace_back(sec + "." + key, detail::trim(val.data()));

    using detail::get;
    c.model.kind = get<std::string>(tree, "model.kind", c.model.kind);
    c.model.L = get<std::size_t>(tree, "model.L", c.model.L);
    c.model.coupling = get<double>(tree, "model.coupling", c.model.coupling);
    c.model.field = get<double>(tree, "model.field", c.model.field);
    if (auto b = tree.get_optional<std::string>("model.boundary")) {
        c.model.boundary = detail::parse_boundary(detail::trim(*b));
        c.model.boundary_given = true;
    } else {
        // EA and frustrated presets run open; ferro presets wrap around
        c.model.boundary = (c.model.kind == "ea2d_pmJ" || c.model.kind == "ffi2d") ? Boundary::open : Boundary::periodic;
    }

    c.sampler = detail::parse_sampler(tree, "sampler");
    if (tree.get_child_optional("baseline")) c.bench.baseline = detail::parse_sampler(tree, "baseline");

    if (auto b = tree.get_optional<std::string>("run.betas")) c.run.betas = detail::parse_list<double>(*b, "run.betas");
    c.run.n_disorder = get<std::size_t>(tree, "run.n_disorder", c.run.n_disorder);
    c.run.n_replicas = get<std::size_t>(tree, "run.n_replicas", c.run.n_replicas);
    c.run.burn_in = get<std::size_t>(tree, "run.burn_in", c.run.burn_in);
    c.run.sweeps = get<std::size_t>(tree, "run.sweeps", c.run.sweeps);
    c.run.seed = get<std::uint64_t>(tree, "run.seed", c.run.seed);
    c.run.out_dir = get<std::string>(tree, "run.out_dir", c.run.out_dir);
    c.run.threads = get<std::size_t>(tree, "run.threads", c.run.threads);

    if (auto s = tree.get_optional<std::string>("bench.sizes")) c.bench.sizes = detail::parse_list<std::size_t>(*s, "bench.sizes");
    c.bench.beta = get<double>(tree, "bench.beta", c.bench.beta);

    c.analysis.eta = get<double>(tree, "analysis.eta", c.analysis.eta);
    c.analysis.alpha = get<double>(tree, "analysis.alpha", c.analysis.alpha);
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

}  // namespace tgmc::harness
