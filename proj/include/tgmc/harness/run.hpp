#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tgmc/harness/chain.hpp"
#include "tgmc/harness/config.hpp"
#include "tgmc/observables.hpp"

namespace tgmc::harness {

inline constexpr const char* code_version = "tgmc 1.0.0";
inline constexpr int chain_schema_version = 1;
inline constexpr int summary_schema_version = 1;
inline constexpr std::uint64_t disorder_stream = 0x646973;  // "dis"

inline std::uint64_t chain_seed(std::uint64_t master, std::size_t beta_index, std::size_t realization, std::size_t replica) {
    return stable_hash({master, beta_index, realization, replica});
}

/// Depends on the realization only, so every β sees the same couplings.
inline std::uint64_t disorder_seed(std::uint64_t master, std::size_t realization) {
    return stable_hash({master, disorder_stream, realization});
}

inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_beta(double b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", b);
    return buf;
}

struct ChainRecord {
    std::size_t beta_index = 0, realization = 0, replica = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> beta_H, mag, q, accept, t0_ms, trunc_err;
};

struct SummaryRow {
    std::size_t L = 0;
    double beta = 0.0;
    std::string observable;
    double value = 0.0, ci_lo = 0.0, ci_hi = 0.0, tau = 0.0;
};

struct ExperimentResult {
    std::vector<ChainRecord> chains;  // sorted by (beta index, realization, replica)
    std::vector<SummaryRow> summary;
    std::vector<std::string> files;
};

namespace detail {

inline double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

/// Runs all replicas of one (β, realization) in lockstep so overlaps can be taken per sweep.
inline std::vector<ChainRecord> run_task(const ExperimentConfig& cfg, const SamplerSpec& spec, const Lattice& lat, std::size_t bi,
                                         double beta, std::size_t j, std::size_t n_burn, std::size_t n_sweeps) {
    const CouplingField base = make_coupling(cfg.model, lat, disorder_seed(cfg.run.seed, j));
    const CouplingField coupling = base.scaled(beta);
    const std::size_t R = cfg.run.n_replicas;
    std::vector<Rng> rngs;
    std::vector<std::unique_ptr<Chain>> chains;
    std::vector<ChainRecord> recs(R);
    for (std::size_t r = 0; r < R; ++r) {
        recs[r].beta_index = bi;
        recs[r].realization = j;
        recs[r].replica = r;
        recs[r].beta = beta;
        recs[r].seed = chain_seed(cfg.run.seed, bi, j, r);
        rngs.emplace_back(recs[r].seed);
        chains.push_back(make_chain(spec, lat, coupling, rngs.back()));
    }
    for (std::size_t t = 0; t < n_burn; ++t)
        for (std::size_t r = 0; r < R; ++r) chains[r]->sweep(rngs[r]);
    for (std::size_t t = 0; t < n_sweeps; ++t) {
        for (std::size_t r = 0; r < R; ++r) {
            const double t0 = now_ms();
            const SweepResult sr = chains[r]->sweep(rngs[r]);
            const double t1 = now_ms();
            const auto& s = chains[r]->measured();
            recs[r].beta_H.push_back(energy(lat, coupling, s));
            recs[r].mag.push_back(magnetization(s));
            recs[r].accept.push_back(sr.accept);
            recs[r].t0_ms.push_back(t1 - t0);
            recs[r].trunc_err.push_back(sr.truncation_error);
        }
        for (std::size_t r = 0; r < R; ++r) {
            const std::size_t partner = r ^ 1U;
            recs[r].q.push_back(partner < R ? spin_overlap(chains[r]->measured(), chains[partner]->measured())
                                            : std::numeric_limits<double>::quiet_NaN());
        }
    }
    return recs;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean_tau(const Ensemble& e) {
    if (e.empty() || e.front().size() < 10) return std::numeric_limits<double>::quiet_NaN();
    double t = 0.0;
    for (const auto& s : e) t += integrated_autocorrelation(s).tau;
    return t / static_cast<double>(e.size());
}

inline void ci_or_nan(const Ensemble& e, double alpha, double& lo, double& hi) {
    lo = hi = std::numeric_limits<double>::quiet_NaN();
    if (e.size() < 2 || e.front().size() < 2) return;
    try {
        const auto ci = confidence_interval(e, alpha);
        lo = ci.lo;
        hi = ci.hi;
    } catch (const Error&) {
    }
}

}  // namespace detail

/// Aggregates one β: chains of every realization and replica.
inline std::vector<SummaryRow> summarize_beta(const std::vector<const ChainRecord*>& chains, std::size_t L, std::size_t n_sites,
                                              double beta, std::size_t n_replicas, const AnalysisSpec& an) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double N = static_cast<double>(n_sites);
    std::vector<SummaryRow> rows;
    auto add = [&](const std::string& name, double value, const Ensemble* ci_series, double tau) {
        SummaryRow r{L, beta, name, value, nan, nan, tau};
        if (ci_series) detail::ci_or_nan(*ci_series, an.alpha, r.ci_lo, r.ci_hi);
        rows.push_back(r);
    };
    auto grand_mean = [](const Ensemble& e) {
        double s = 0.0;
        std::size_t c = 0;
        for (const auto& x : e)
            for (double v : x) {
                s += v;
                ++c;
            }
        return s / static_cast<double>(c);
    };

    Ensemble e_site, e_raw, c_lin, absm, m2, g_lin, acc;
    std::vector<double> t0;
    bool m_ok = true;
    for (const auto* c : chains) {
        Series es, am, mm;
        for (double v : c->beta_H) es.push_back(v / N);
        for (double v : c->mag) {
            am.push_back(std::abs(v));
            mm.push_back(N * v * v);
        }
        e_site.push_back(es);
        e_raw.push_back(c->beta_H);
        c_lin.push_back(linearized_specific_heat(c->beta_H, n_sites));
        absm.push_back(am);
        m2.push_back(mm);
        acc.push_back(c->accept);
        if (thermal_moments(c->mag).m2 > 0.0) g_lin.push_back(linearized_binder(c->mag));
        else m_ok = false;
        t0.insert(t0.end(), c->t0_ms.begin(), c->t0_ms.end());
    }
    const double tau_e = detail::mean_tau(e_raw);
    add("energy", grand_mean(e_site), &e_site, tau_e);
    add("c_e", e_raw.front().size() >= 2 ? specific_heat(e_raw, n_sites) : nan, &c_lin, tau_e);
    add("mag_abs", grand_mean(absm), &absm, detail::mean_tau(absm));
    const double tau_m2 = detail::mean_tau(m2);
    Ensemble mags;
    for (const auto* c : chains) mags.push_back(c->mag);
    add("g_m", m_ok ? binder_ratio(mags) : nan, m_ok ? &g_lin : nullptr, tau_m2);
    const double chi_m = grand_mean(m2);
    add("chi_m", chi_m, &m2, tau_m2);

    // overlap series: pairs (0,1), (2,3), ... concatenated per realization
    const std::size_t pairs = n_replicas / 2;
    double chi_q = nan;
    Ensemble q2s;
    if (pairs > 0) {
        Ensemble qs, gq_lin;
        bool q_ok = true;
        for (std::size_t i = 0; i < chains.size(); ++i) {
            const auto* c = chains[i];
            if (c->replica % 2 != 0 || c->replica + 1 >= n_replicas) continue;
            if (c->replica == 0) qs.emplace_back();
            qs.back().insert(qs.back().end(), c->q.begin(), c->q.end());
        }
        for (const auto& q : qs) {
            Series s;
            for (double v : q) s.push_back(N * v * v);
            q2s.push_back(s);
            if (thermal_moments(q).m2 > 0.0) gq_lin.push_back(linearized_binder(q));
            else q_ok = false;
        }
        const double tau_q2 = detail::mean_tau(q2s);
        add("g_q", q_ok ? binder_ratio(qs) : nan, q_ok ? &gq_lin : nullptr, tau_q2);
        chi_q = grand_mean(q2s);
        add("chi_q", chi_q, &q2s, tau_q2);
    }
    const double Lf = static_cast<double>(L);
    add("x_rescaled", rescale_for_collapse(ScalingPoint{Lf, beta, 0.0}, ScalingParams{an.eta}).x, nullptr, nan);
    auto rescaled = [&](const std::string& name, double value, const Ensemble& series) {
        const double f = std::pow(Lf, -(2.0 - an.eta));
        SummaryRow r{L, beta, name, rescale_for_collapse(ScalingPoint{Lf, beta, value}, ScalingParams{an.eta}).chi, nan, nan, nan};
        detail::ci_or_nan(series, an.alpha, r.ci_lo, r.ci_hi);
        r.ci_lo *= f;
        r.ci_hi *= f;
        rows.push_back(r);
    };
    rescaled("chi_m_rescaled", chi_m, m2);
    if (pairs > 0) rescaled("chi_q_rescaled", chi_q, q2s);
    add("acceptance", grand_mean(acc), &acc, nan);
    const double t0m = detail::median(t0);
    add("t0_ms", t0m, nullptr, nan);
    add("tau_energy", tau_e, nullptr, tau_e);
    add("t0_tau_ms", t0m * tau_e, nullptr, tau_e);
    return rows;
}

inline std::string chain_file_name(const ChainRecord& c) {
    return "chain_" + fmt_beta(c.beta) + "_" + std::to_string(c.realization) + "_" + std::to_string(c.replica) + ".csv";
}

inline void write_chain_csv(const std::string& path, const ExperimentConfig& cfg, const ChainRecord& c, std::size_t n_sites) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "# schema_version: " << chain_schema_version << "\n";
    out << "# code_version: " << code_version << "\n";
    out << "# model: " << cfg.model.kind << " L=" << cfg.model.L << " dim=" << cfg.model.dimension() << "\n";
    out << "# boundary: " << to_string(cfg.model.boundary) << (cfg.model.boundary_given ? " (configured)" : " (model default)") << "\n";
    out << "# n_sites: " << n_sites << "\n";
    out << "# sampler: " << cfg.sampler.describe() << "\n";
    out << "# sweep_unit: " << cfg.sampler.sweep_unit() << "\n";
    if (cfg.sampler.kind == "tgmh" && cfg.sampler.scheme == "slabs")
        out << "# slab_note: slab clusters, out-of-slab neighbours enter as fields; periodic in-plane directions split in halves\n";
    out << "# beta: " << fmt17(c.beta) << "\n";
    out << "# beta_index: " << c.beta_index << "\n";
    out << "# realization: " << c.realization << "\n";
    out << "# replica: " << c.replica << "\n";
    out << "# master_seed: " << cfg.run.seed << "\n";
    out << "# chain_seed: " << c.seed << "\n";
    out << "# seed_derivation: chain = stable_hash(master_seed, beta_index, realization, replica); "
           "disorder = stable_hash(master_seed, "
        << disorder_stream << ", realization)\n";
    out << "# burn_in: " << cfg.run.burn_in << "\n";
    out << "# n_replicas: " << cfg.run.n_replicas << "\n";
    out << "# q_pairs: replicas (0,1), (2,3), ...; nan when unpaired\n";
    for (const auto& [k, v] : cfg.echo) out << "# config." << k << " = " << v << "\n";
    out << "sweep,beta_H,mag,q,accept,t0_ms,trunc_err\n";
    for (std::size_t t = 0; t < c.beta_H.size(); ++t)
        out << t << "," << fmt17(c.beta_H[t]) << "," << fmt17(c.mag[t]) << "," << fmt17(c.q[t]) << "," << fmt17(c.accept[t]) << ","
            << fmt17(c.t0_ms[t]) << "," << fmt17(c.trunc_err[t]) << "\n";
}

inline void write_summary_csv(const std::string& path, const ExperimentConfig& cfg, const std::vector<SummaryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "# schema_version: " << summary_schema_version << "\n";
    out << "# code_version: " << code_version << "\n";
    out << "# sampler: " << cfg.sampler.describe() << "\n";
    out << "# alpha: " << fmt17(cfg.analysis.alpha) << "\n";
    out << "# eta: " << fmt17(cfg.analysis.eta) << "\n";
    out << "L,beta,observable,value,ci_lo,ci_hi,tau\n";
    for (const auto& r : rows)
        out << r.L << "," << fmt17(r.beta) << "," << r.observable << "," << fmt17(r.value) << "," << fmt17(r.ci_lo) << ","
            << fmt17(r.ci_hi) << "," << fmt17(r.tau) << "\n";
}

/// Builds every chain once without sampling; catches incompatible settings early.
inline void dry_run(const ExperimentConfig& cfg) {
    cfg.validate();
    const Lattice lat = make_lattice(cfg.model, cfg.model.L);
    const CouplingField c = make_coupling(cfg.model, lat, disorder_seed(cfg.run.seed, 0)).scaled(cfg.run.betas.front());
    Rng rng(0);
    make_chain(cfg.sampler, lat, c, rng);
    if (cfg.bench.baseline) make_chain(*cfg.bench.baseline, lat, c, rng);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true) {
    cfg.validate();
    const Lattice lat = make_lattice(cfg.model, cfg.model.L);
    if (write_files) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.run.out_dir, ec);
        if (ec || !std::filesystem::is_directory(cfg.run.out_dir)) throw Error("cannot create output directory " + cfg.run.out_dir);
    }
    struct Task {
        std::size_t bi, j;
    };
    std::vector<Task> tasks;
    for (std::size_t bi = 0; bi < cfg.run.betas.size(); ++bi)
        for (std::size_t j = 0; j < cfg.run.n_disorder; ++j) tasks.push_back({bi, j});
    std::vector<std::vector<ChainRecord>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            try {
                results[k] = detail::run_task(cfg, cfg.sampler, lat, tasks[k].bi, cfg.run.betas[tasks[k].bi], tasks[k].j, cfg.run.burn_in,
                                              cfg.run.sweeps);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        }
    };
    const std::size_t nt = std::min(cfg.run.threads, tasks.size());
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);

    ExperimentResult res;
    for (auto& r : results)
        for (auto& c : r) res.chains.push_back(std::move(c));
    for (std::size_t bi = 0; bi < cfg.run.betas.size(); ++bi) {
        std::vector<const ChainRecord*> group;
        for (const auto& c : res.chains)
            if (c.beta_index == bi) group.push_back(&c);
        auto rows = summarize_beta(group, cfg.model.L, lat.num_sites(), cfg.run.betas[bi], cfg.run.n_replicas, cfg.analysis);
        res.summary.insert(res.summary.end(), rows.begin(), rows.end());
    }
    if (write_files) {
        for (const auto& c : res.chains) {
            const auto path = (std::filesystem::path(cfg.run.out_dir) / chain_file_name(c)).string();
            write_chain_csv(path, cfg, c, lat.num_sites());
            res.files.push_back(path);
        }
        const auto path = (std::filesystem::path(cfg.run.out_dir) / "summary.csv").string();
        write_summary_csv(path, cfg, res.summary);
        res.files.push_back(path);
    }
    return res;
}

// ---------------------------------------------------------------------------
// τ·t₀ benchmark

struct BenchEntry {
    double tau = 0.0;
    double t0_ms = 0.0;
    double tau_t0_ms = 0.0;
    double acceptance = 0.0;
};

struct BenchRow {
    std::size_t L = 0;
    BenchEntry candidate, baseline;
    double ratio = 0.0;  // candidate τ·t₀ over baseline τ·t₀
};

inline BenchEntry bench_one(const ExperimentConfig& cfg, const SamplerSpec& spec, std::size_t L) {
    const Lattice lat = make_lattice(cfg.model, L);
    const CouplingField c = make_coupling(cfg.model, lat, disorder_seed(cfg.run.seed, 0)).scaled(cfg.bench.beta);
    Rng rng(chain_seed(cfg.run.seed, L, 0, 0));
    auto chain = make_chain(spec, lat, c, rng);
    chain->sweep(rng);  // warm-up, excluded from timing
    for (std::size_t t = 0; t < cfg.run.burn_in; ++t) chain->sweep(rng);
    Series e, t0, acc;
    for (std::size_t t = 0; t < cfg.run.sweeps; ++t) {
        const double a = detail::now_ms();
        const auto sr = chain->sweep(rng);
        const double b = detail::now_ms();
        e.push_back(energy(lat, c, chain->measured()));
        t0.push_back(b - a);
        acc.push_back(sr.accept);
    }
    BenchEntry be;
    be.tau = e.size() >= 10 ? integrated_autocorrelation(e).tau : std::numeric_limits<double>::quiet_NaN();
    be.t0_ms = detail::median(t0);
    be.tau_t0_ms = be.tau * be.t0_ms;
    be.acceptance = mean(acc);
    return be;
}

inline std::vector<BenchRow> benchmark_tau_t0(const ExperimentConfig& cfg) {
    if (!cfg.bench.baseline) throw ConfigError("bench needs a [baseline] sampler section");
    std::vector<BenchRow> rows;
    for (auto L : cfg.bench.sizes) {
        BenchRow r;
        r.L = L;
        r.candidate = bench_one(cfg, cfg.sampler, L);
        r.baseline = bench_one(cfg, *cfg.bench.baseline, L);
        r.ratio = r.candidate.tau_t0_ms / r.baseline.tau_t0_ms;
        rows.push_back(r);
    }
    return rows;
}

inline void write_bench_table(std::ostream& out, const ExperimentConfig& cfg, const std::vector<BenchRow>& rows) {
    out << "# code_version: " << code_version << "\n";
    out << "# beta: " << fmt17(cfg.bench.beta) << "\n";
    out << "# candidate: " << cfg.sampler.describe() << "; one sweep = " << cfg.sampler.sweep_unit() << "\n";
    out << "# baseline: " << cfg.bench.baseline->describe() << "; one sweep = " << cfg.bench.baseline->sweep_unit() << "\n";
    out << "# tau from the energy series in sweeps of each sampler; t0 is the median wall time of one sweep (monotonic clock)\n";
    out << "L,tau_candidate,t0_candidate_ms,tau_t0_candidate_ms,acc_candidate,tau_baseline,t0_baseline_ms,tau_t0_baseline_ms,acc_baseline,"
           "ratio_tau_t0\n";
    for (const auto& r : rows)
        out << r.L << "," << fmt17(r.candidate.tau) << "," << fmt17(r.candidate.t0_ms) << "," << fmt17(r.candidate.tau_t0_ms) << ","
            << fmt17(r.candidate.acceptance) << "," << fmt17(r.baseline.tau) << "," << fmt17(r.baseline.t0_ms) << ","
            << fmt17(r.baseline.tau_t0_ms) << "," << fmt17(r.baseline.acceptance) << "," << fmt17(r.ratio) << "\n";
}

}  // namespace tgmc::harness
