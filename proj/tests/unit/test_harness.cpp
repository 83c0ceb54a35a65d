#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tgmc/harness/run.hpp"

using namespace tgmc;
using namespace tgmc::harness;

namespace {

const std::string smoke_path = std::string(TGMC_SOURCE_DIR) + "/configs/ea2d_smoke.ini";

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// CSV body with the t0_ms column blanked; wall times are the only non-deterministic field.
std::string body_without_timing(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    int t0_col = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (t0_col < 0) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                if (cells[i] == "t0_ms") t0_col = static_cast<int>(i);
        } else {
            cells[static_cast<std::size_t>(t0_col)] = "";
        }
        for (const auto& c : cells) out += c + ",";
        out += "\n";
    }
    return out;
}

std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("tgmc_test_" + name);
    std::filesystem::remove_all(p);
    return p.string();
}

}  // namespace

TEST(Config, ParsesSmokePreset) {
    const auto cfg = load_config(smoke_path);
    EXPECT_EQ(cfg.model.kind, "ea2d_pmJ");
    EXPECT_EQ(cfg.model.L, 4u);
    EXPECT_EQ(cfg.model.boundary, Boundary::open);
    EXPECT_FALSE(cfg.model.boundary_given);
    EXPECT_EQ(cfg.sampler.kind, "tgmh");
    EXPECT_TRUE(cfg.sampler.chi_exact);
    EXPECT_EQ(cfg.run.betas, std::vector<double>{0.5});
    EXPECT_EQ(cfg.run.n_disorder, 2u);
    EXPECT_EQ(cfg.run.n_replicas, 2u);
    EXPECT_EQ(cfg.run.burn_in, 5u);
    EXPECT_EQ(cfg.run.sweeps, 10u);
}

TEST(Config, AllShippedPresetsValidate) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(std::string(TGMC_SOURCE_DIR) + "/configs")) {
        if (entry.path().extension() != ".ini") continue;
        SCOPED_TRACE(entry.path().string());
        const auto cfg = load_config(entry.path().string());
        EXPECT_NO_THROW(dry_run(cfg));
    }
}

TEST(Config, ListsTypesAndDefaults) {
    const auto cfg = parse_config(std::string("[model]\nkind = ising3d\nL = 4\n[sampler]\nkind = tgmh\nscheme = slabs\nslab_axis = 2\n"
                                              "thickness = 2\nchi = 8\n[run]\nbetas = 0.2, 0.25 ,0.3\n"));
    EXPECT_EQ(cfg.run.betas.size(), 3u);
    EXPECT_DOUBLE_EQ(cfg.run.betas[1], 0.25);
    EXPECT_EQ(cfg.model.boundary, Boundary::periodic);
    EXPECT_FALSE(cfg.sampler.chi_exact);
    EXPECT_EQ(cfg.sampler.chi, 8u);
    EXPECT_EQ(cfg.model.dimension(), 3);
}

TEST(Config, RejectsInvalidCombinations) {
    const std::string run = "[run]\nbetas = 0.5\n";
    auto bad = [&](const std::string& text) { EXPECT_THROW(parse_config(text + run), ConfigError) << text; };
    bad("[model]\nkind = ising2d\nL = 4\n[sampler]\nkind = kbd\n");
    bad("[model]\nkind = ising2d\nL = 4\n[sampler]\nkind = ghost_tg\n");
    bad("[model]\nkind = ising2d_field\nL = 4\n[sampler]\nkind = tg\n");
    bad("[model]\nkind = potts\nL = 4\n[sampler]\nkind = tg\n");
    bad("[model]\nkind = ising2d\nL = 1\n[sampler]\nkind = tg\n");
    bad("[model]\nkind = ising2d\nL = 4\n[sampler]\nkind = tgmh\nscheme = full_lattice\n");
    bad("[model]\nkind = ising2d\nL = 4\n[sampler]\nkind = tgmh\nchi = -3\n");
    bad("[model]\nkind = ising2d\nL = 4\n[sampler]\nkind = tg\npreset = bogus\n");
    bad("[model]\nkind = ising2d\nL = four\n[sampler]\nkind = tg\n");
    EXPECT_THROW(parse_config(std::string("[model]\nkind = ising2d\nL = 4\n[run]\nbetas = 0.5, -1\n")), ConfigError);
    EXPECT_THROW(parse_config(std::string("[model]\nkind = ising2d\nL = 4\n[run]\nn_replicas = 0\n")), ConfigError);
    EXPECT_THROW(parse_config(std::string("[model\nkind = ising2d\n")), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Seeds, PureDerivation) {
    EXPECT_EQ(chain_seed(1, 0, 0, 0), chain_seed(1, 0, 0, 0));
    EXPECT_NE(chain_seed(1, 0, 0, 0), chain_seed(1, 0, 0, 1));
    EXPECT_NE(chain_seed(1, 0, 1, 0), chain_seed(1, 1, 0, 0));
    EXPECT_NE(chain_seed(1, 0, 0, 0), chain_seed(2, 0, 0, 0));
    EXPECT_EQ(disorder_seed(3, 4), stable_hash({3, disorder_stream, 4}));
    // realizations share their couplings across β
    const auto cfg = load_config(smoke_path);
    const auto lat = make_lattice(cfg.model, 4);
    EXPECT_EQ(make_coupling(cfg.model, lat, disorder_seed(7, 1)).edge_K, make_coupling(cfg.model, lat, disorder_seed(7, 1)).edge_K);
    EXPECT_NE(make_coupling(cfg.model, lat, disorder_seed(7, 1)).edge_K, make_coupling(cfg.model, lat, disorder_seed(7, 2)).edge_K);
}

TEST(RunExperiment, FileCountAndSchema) {
    auto cfg = load_config(smoke_path);
    cfg.run.out_dir = temp_dir("files");
    const auto res = run_experiment(cfg);
    EXPECT_EQ(res.files.size(), 5u);
    EXPECT_EQ(res.chains.size(), 4u);
    std::size_t chains = 0;
    for (const auto& e : std::filesystem::directory_iterator(cfg.run.out_dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("chain_", 0) == 0) ++chains;
    }
    EXPECT_EQ(chains, 4u);
    const auto chain = slurp(cfg.run.out_dir + "/chain_0.5_1_0.csv");
    EXPECT_NE(chain.find("\nsweep,beta_H,mag,q,accept,t0_ms,trunc_err\n"), std::string::npos);
    EXPECT_NE(chain.find("# chain_seed: " + std::to_string(chain_seed(cfg.run.seed, 0, 1, 0))), std::string::npos);
    EXPECT_NE(chain.find("# config.model.kind = ea2d_pmJ"), std::string::npos);
    std::istringstream in(chain);
    std::string line;
    std::size_t data = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line.rfind("sweep", 0) != 0) ++data;
    EXPECT_EQ(data, 10u);
    for (const auto& c : res.chains)
        for (double t : c.t0_ms) EXPECT_GT(t, 0.0);
    const auto summary = slurp(cfg.run.out_dir + "/summary.csv");
    EXPECT_NE(summary.find("\nL,beta,observable,value,ci_lo,ci_hi,tau\n"), std::string::npos);
    for (const char* obs : {",energy,", ",c_e,", ",g_q,", ",chi_q,", ",g_m,", ",chi_m,", ",x_rescaled,", ",chi_q_rescaled,", ",t0_tau_ms,"})
        EXPECT_NE(summary.find(obs), std::string::npos) << obs;
}

TEST(RunExperiment, DeterministicExceptTiming) {
    auto cfg = load_config(smoke_path);
    cfg.run.out_dir = temp_dir("det_a");
    run_experiment(cfg);
    auto cfg2 = cfg;
    cfg2.run.out_dir = temp_dir("det_b");
    cfg2.run.threads = 3;
    run_experiment(cfg2);
    for (const auto& e : std::filesystem::directory_iterator(cfg.run.out_dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("chain_", 0) != 0) continue;
        EXPECT_EQ(body_without_timing(slurp(e.path().string())), body_without_timing(slurp(cfg2.run.out_dir + "/" + name))) << name;
    }
}

TEST(RunExperiment, OverlapPairsAndUnpairedReplica) {
    auto cfg = load_config(smoke_path);
    cfg.run.n_replicas = 3;
    const auto res = run_experiment(cfg, false);
    ASSERT_EQ(res.chains.size(), 6u);
    for (const auto& c : res.chains) {
        if (c.replica == 2) {
            for (double q : c.q) EXPECT_TRUE(std::isnan(q));
        } else {
            for (double q : c.q) {
                EXPECT_GE(q, 0.0);
                EXPECT_LE(q, 1.0);
            }
        }
    }
    const auto& a = res.chains[0];
    const auto& b = res.chains[1];
    EXPECT_EQ(a.q, b.q);
}

TEST(Summary, MatchesHandAggregation) {
    std::vector<ChainRecord> recs(2);
    for (std::size_t r = 0; r < 2; ++r) {
        recs[r].replica = r;
        recs[r].beta = 0.5;
        for (int t = 0; t < 12; ++t) {
            recs[r].beta_H.push_back(-10.0 + (t * 7 + r * 3) % 5);
            recs[r].mag.push_back(0.25 * ((t + r) % 3) - 0.2);
            recs[r].q.push_back(0.1 * ((t * 3) % 4) + 0.05);
            recs[r].accept.push_back(1.0);
            recs[r].t0_ms.push_back(1.0 + t);
            recs[r].trunc_err.push_back(0.0);
        }
    }
    recs[1].q = recs[0].q;
    const std::vector<const ChainRecord*> ptrs{&recs[0], &recs[1]};
    const auto rows = summarize_beta(ptrs, 4, 16, 0.5, 2, AnalysisSpec{});
    auto get = [&](const std::string& name) {
        for (const auto& r : rows)
            if (r.observable == name) return r;
        ADD_FAILURE() << name;
        return SummaryRow{};
    };
    double e = 0.0, ce = 0.0, chi = 0.0;
    for (const auto& c : recs) {
        e += mean(c.beta_H) / 16.0 / 2.0;
        ce += population_variance(c.beta_H) / 16.0 / 2.0;
        double m2 = 0.0;
        for (double m : c.mag) m2 += 16.0 * m * m / 12.0;
        chi += m2 / 2.0;
    }
    EXPECT_NEAR(get("energy").value, e, 1e-12);
    EXPECT_NEAR(get("c_e").value, ce, 1e-12);
    EXPECT_NEAR(get("chi_m").value, chi, 1e-12);
    EXPECT_NEAR(get("chi_m_rescaled").value, chi * std::pow(4.0, -1.8), 1e-12);
    EXPECT_NEAR(get("x_rescaled").value, 0.5 - 0.5 * std::log(4.0), 1e-15);
    EXPECT_NEAR(get("t0_ms").value, 6.5, 1e-15);
    EXPECT_NEAR(get("g_q").value, binder_ratio(Ensemble{recs[0].q}), 1e-12);
    const auto en = get("energy");
    EXPECT_LT(en.ci_lo, en.value);
    EXPECT_GT(en.ci_hi, en.value);
    EXPECT_NEAR(get("t0_tau_ms").value, 6.5 * get("tau_energy").value, 1e-12);
}

TEST(Bench, TableFormat) {
    auto cfg = parse_config(std::string("[model]\nkind = ising2d\nboundary = open\nL = 4\n[sampler]\nkind = tgmh\nchi = exact\n"
                                        "[baseline]\nkind = metropolis\n[run]\nbetas = 0.44\nburn_in = 10\nsweeps = 200\n"
                                        "[bench]\nsizes = 4, 6\nbeta = 0.44\n"));
    const auto rows = benchmark_tau_t0(cfg);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_GT(r.candidate.t0_ms, 0.0);
        EXPECT_GT(r.baseline.t0_ms, 0.0);
        EXPECT_NEAR(r.ratio, r.candidate.tau_t0_ms / r.baseline.tau_t0_ms, 1e-12);
        EXPECT_EQ(r.candidate.acceptance, 1.0);
    }
    std::ostringstream out;
    write_bench_table(out, cfg, rows);
    const auto text = out.str();
    EXPECT_NE(text.find("L,tau_candidate,t0_candidate_ms,tau_t0_candidate_ms,acc_candidate,tau_baseline,t0_baseline_ms,"
                        "tau_t0_baseline_ms,acc_baseline,ratio_tau_t0\n"),
              std::string::npos);
    EXPECT_NE(text.find("one sweep = N single-site Metropolis attempts"), std::string::npos);
    EXPECT_NE(text.find("\n4,"), std::string::npos);
    EXPECT_NE(text.find("\n6,"), std::string::npos);
    cfg.bench.baseline.reset();
    EXPECT_THROW(benchmark_tau_t0(cfg), ConfigError);
}
