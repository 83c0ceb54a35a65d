#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tgmc/harness/run.hpp"

namespace {

using tgmc::harness::ExperimentConfig;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> threads;
};

void set_echo(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (auto& [k, v] : cfg.echo)
        if (k == key) {
            v = value;
            return;
        }
    cfg.echo.emplace_back(key, value);
}

ExperimentConfig load(const std::string& path, const Overrides& o) {
    ExperimentConfig cfg = tgmc::harness::load_config(path);
    if (o.seed) {
        cfg.run.seed = *o.seed;
        set_echo(cfg, "run.seed", std::to_string(*o.seed));
    }
    if (o.out_dir) {
        cfg.run.out_dir = *o.out_dir;
        set_echo(cfg, "run.out_dir", *o.out_dir);
    }
    if (o.threads) {
        cfg.run.threads = *o.threads;
        set_echo(cfg, "run.threads", std::to_string(*o.threads));
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-Gibbs cluster Monte Carlo experiments"};
    app.require_subcommand(1);
    Overrides o;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "master seed override");
    auto* out_opt = app.add_option("--out-dir", out_dir, "output directory override");
    auto* thr_opt = app.add_option("--threads", threads, "worker thread override")->check(CLI::PositiveNumber);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run all chains and write chain and summary CSVs");
    run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
    auto* bench = app.add_subcommand("bench", "tau * t0 comparison of [sampler] against [baseline]");
    bench->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
    auto* validate = app.add_subcommand("validate", "parse the config and build every sampler without sampling");
    validate->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) o.seed = seed;
    if (*out_opt) o.out_dir = out_dir;
    if (*thr_opt) o.threads = threads;

    try {
        ExperimentConfig cfg = load(config_path, o);
        if (*validate) {
            tgmc::harness::dry_run(cfg);
            std::cout << "ok: " << cfg.model.kind << " L=" << cfg.model.L << " " << cfg.sampler.describe() << ", "
                      << cfg.run.betas.size() * cfg.run.n_disorder * cfg.run.n_replicas << " chains\n";
            return 0;
        }
        if (*run) {
            const auto res = tgmc::harness::run_experiment(cfg);
            std::cout << "wrote " << res.files.size() << " files to " << cfg.run.out_dir << "\n";
            return 0;
        }
        if (*bench) {
            const auto rows = tgmc::harness::benchmark_tau_t0(cfg);
            std::filesystem::create_directories(cfg.run.out_dir);
            const auto path = (std::filesystem::path(cfg.run.out_dir) / "bench.csv").string();
            std::ofstream out(path);
            if (!out) throw tgmc::Error("cannot write " + path);
            tgmc::harness::write_bench_table(out, cfg, rows);
            tgmc::harness::write_bench_table(std::cout, cfg, rows);
            return 0;
        }
    } catch (const tgmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
