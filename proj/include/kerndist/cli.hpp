#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kerndist/csv.hpp"
#include "kerndist/datagen.hpp"
#include "kerndist/kernels.hpp"
#include "kerndist/testing.hpp"

namespace kerndist {

struct RunConfig {
    enum class Cmd { TwoSample, Independence, Benchmark, Gen } cmd = Cmd::TwoSample;

    // kernels: single tests use `kernel` (and `kernel_y` for the second
    // block of an independence test); benchmark sweeps use `kernels`.
    std::string kernel = "dist:q=1";
    std::string kernel_y;
    std::vector<std::string> kernels{"dist:q=1"};

    std::vector<std::string> nulls{"spectral"};
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    std::size_t num_perms = 1000;
    std::size_t num_draws = 10000;
    std::size_t max_products = 2500;

    std::vector<std::string> inputs;
    std::size_t split = 0;
    std::string out_path;
    std::string out2_path;

    std::string scenario;
    std::vector<double> deltas{0.0};
    std::vector<double> var_ratios{1.0};
    std::vector<double> freqs{1.0};
    std::vector<double> angles{0.0};
    std::vector<unsigned> ells{1};
    std::size_t dim = 1;
    std::size_t extra_dims = 0;
    std::string marginal = "uniform";
    std::size_t m = 100;
    std::size_t trials = 100;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

namespace detail {

inline RngSpec derive_stream(std::uint64_t seed, std::uint64_t role, std::uint64_t a,
                             std::uint64_t b) {
    return {seed, mix64(mix64(mix64(role) + a) + b)};
}

inline NullSpec make_null_spec(const std::string& method, const RunConfig& cfg) {
    if (method == "spectral")
        return spectral_null_spec(cfg.alpha, cfg.num_draws, 1e-10, cfg.max_products);
    if (method == "permutation") return permutation_null_spec(cfg.alpha, cfg.num_perms);
    if (method == "qform") return qform_null_spec(cfg.alpha);
    throw std::invalid_argument("unknown null method '" + method +
                                "' (expected spectral, permutation or qform)");
}

inline void validate_config(const RunConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
    for (const auto& null : cfg.nulls) {
        if (null == "qform" && cfg.alpha > 0.215)
            throw std::invalid_argument(
                "alpha " + format_double(cfg.alpha) +
                " is outside the quadratic-form bound's validity range (0, 0.215]");
        make_null_spec(null, cfg);  // rejects unknown methods
    }
    if (cfg.cmd == RunConfig::Cmd::TwoSample || cfg.cmd == RunConfig::Cmd::Independence) {
        parse_kernel_spec(cfg.kernel);
        if (!cfg.kernel_y.empty()) parse_kernel_spec(cfg.kernel_y);
        if (cfg.nulls.size() != 1)
            throw std::invalid_argument("single tests take exactly one null method");
    }
    if (cfg.cmd == RunConfig::Cmd::Benchmark) {
        if (cfg.kernels.empty()) throw std::invalid_argument("no kernels given");
        for (const auto& k : cfg.kernels) parse_kernel_spec(k);
        if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
    }
    if (cfg.cmd == RunConfig::Cmd::Benchmark || cfg.cmd == RunConfig::Cmd::Gen) {
        if (cfg.scenario != "mean-shift" && cfg.scenario != "var-shift" &&
            cfg.scenario != "sine-perturb" && cfg.scenario != "rotated-pair" &&
            cfg.scenario != "sine-dep")
            throw std::invalid_argument(
                "unknown scenario '" + cfg.scenario +
                "' (expected mean-shift, var-shift, sine-perturb, rotated-pair or sine-dep)");
        if (cfg.marginal != "uniform" && cfg.marginal != "exp")
            throw std::invalid_argument("marginal must be 'uniform' or 'exp'");
    }
}

inline bool scenario_is_two_sample(const std::string& name) {
    return name == "mean-shift" || name == "var-shift" || name == "sine-perturb";
}

// The scenario's difficulty values, as named in the report's param column.
inline std::vector<double> difficulty_values(const RunConfig& cfg) {
    if (cfg.scenario == "mean-shift") return cfg.deltas;
    if (cfg.scenario == "var-shift") return cfg.var_ratios;
    if (cfg.scenario == "sine-perturb") return cfg.freqs;
    if (cfg.scenario == "rotated-pair") return cfg.angles;
    std::vector<double> out;
    for (unsigned l : cfg.ells) out.push_back(double(l));
    return out;
}

inline ScenarioSpec make_scenario(const RunConfig& cfg, double param) {
    const RotMarginal marginal =
        cfg.marginal == "exp" ? RotMarginal::ExpSymmetric : RotMarginal::Uniform;
    if (cfg.scenario == "mean-shift") return {MeanShift{cfg.dim, param}, cfg.m};
    if (cfg.scenario == "var-shift") return {VarShift{cfg.dim, param}, cfg.m};
    if (cfg.scenario == "sine-perturb") return {SinePerturb{param}, cfg.m};
    if (cfg.scenario == "rotated-pair")
        return {RotatedPair{param, cfg.extra_dims, marginal}, cfg.m};
    return {SineDependence{unsigned(param)}, cfg.m};
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

inline std::ostream& output_stream(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot open output file " + path);
    return file;
}

inline nlohmann::json result_to_json(const TestResult& res, const std::string& method,
                                     const std::string& kernel, std::size_t m,
                                     std::size_t n) {
    nlohmann::json j;
    j["statistic"] = res.statistic;
    j["threshold"] = res.threshold;
    if (res.p_value.has_value()) j["p_value"] = *res.p_value;
    j["reject"] = res.reject;
    j["method"] = method;
    j["kernel"] = kernel;
    j["seed"] = res.seed.seed;
    j["m"] = m;
    j["n"] = n;
    return j;
}

}  // namespace detail

// Builds the CLI grammar over a RunConfig. The config is only valid after a
// successful parse.
inline void build_cli(CLI::App& app, RunConfig& cfg) {
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--alpha", cfg.alpha, "significance level")->capture_default_str();
        cmd->add_option("--seed", cfg.seed, "rng seed (generated and echoed when absent)");
        cmd->add_option("--perms", cfg.num_perms, "permutation count")
            ->capture_default_str();
        cmd->add_option("--draws", cfg.num_draws, "spectral null draws")
            ->capture_default_str();
        cmd->add_option("--max-products", cfg.max_products,
                        "eigenvalue products kept by the independence spectral null")
            ->capture_default_str();
        cmd->add_option("--out", cfg.out_path, "output path (default stdout)");
    };

    auto* two = app.add_subcommand("twosample", "two-sample test on two CSV files");
    two->add_option("--kernel", cfg.kernel, "kernel spec, e.g. dist:q=1 or gauss:median")
        ->capture_default_str();
    two->add_option("--null", cfg.nulls, "spectral, permutation or qform")
        ->delimiter(',')
        ->capture_default_str();
    two->add_option("files", cfg.inputs, "CSV files with samples z and w")
        ->expected(2)
        ->required();
    add_common(two);

    auto* indep = app.add_subcommand("independence", "independence test on a paired CSV");
    indep->add_option("--kernel", cfg.kernel, "kernel spec for both blocks")
        ->capture_default_str();
    indep->add_option("--kernel-y", cfg.kernel_y, "kernel spec for the y block");
    indep->add_option("--null", cfg.nulls, "spectral, permutation or qform")
        ->delimiter(',')
        ->capture_default_str();
    indep->add_option("--split", cfg.split, "first column of the y block")->required();
    indep->add_option("file", cfg.inputs, "CSV file with paired rows")
        ->expected(1)
        ->required();
    add_common(indep);

    auto add_scenario = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", cfg.scenario,
                        "mean-shift, var-shift, sine-perturb, rotated-pair or sine-dep")
            ->required();
        cmd->add_option("--m", cfg.m, "sample size")->capture_default_str();
        cmd->add_option("--d", cfg.dim, "dimension (mean-shift, var-shift)")
            ->capture_default_str();
        cmd->add_option("--delta", cfg.deltas, "mean shifts")->delimiter(',');
        cmd->add_option("--var-ratio", cfg.var_ratios, "variance ratios")->delimiter(',');
        cmd->add_option("--nu", cfg.freqs, "sine perturbation frequencies")->delimiter(',');
        cmd->add_option("--theta", cfg.angles, "rotation angles in [0, pi/4]")
            ->delimiter(',');
        cmd->add_option("--l", cfg.ells, "sine dependence frequencies")->delimiter(',');
        cmd->add_option("--extra-dims", cfg.extra_dims, "noise dimensions per block")
            ->capture_default_str();
        cmd->add_option("--marginal", cfg.marginal, "rotated-pair source: uniform or exp")
            ->capture_default_str();
    };

    auto* bench = app.add_subcommand("benchmark", "rejection-rate sweep over a scenario");
    add_scenario(bench);
    bench->add_option("--kernel", cfg.kernels, "comma-separated kernel specs")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--null", cfg.nulls, "comma-separated null methods")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--trials", cfg.trials, "trials per cell")->capture_default_str();
    bench->add_option("--threads", cfg.threads, "worker threads (0 = hardware)")
        ->capture_default_str();
    add_common(bench);

    auto* gen = app.add_subcommand("gen", "write synthetic data as CSV");
    add_scenario(gen);
    gen->add_option("--seed", cfg.seed, "rng seed (generated and echoed when absent)");
    gen->add_option("--out", cfg.out_path, "output CSV (paired data; first sample)");
    gen->add_option("--out2", cfg.out2_path, "second sample CSV (two-sample scenarios)");

    app.parse_complete_callback([two, indep, bench, gen, &cfg] {
        if (two->parsed()) cfg.cmd = RunConfig::Cmd::TwoSample;
        if (indep->parsed()) cfg.cmd = RunConfig::Cmd::Independence;
        if (bench->parsed()) cfg.cmd = RunConfig::Cmd::Benchmark;
        if (gen->parsed()) cfg.cmd = RunConfig::Cmd::Gen;
    });
}

// Parse argv (without the program name) into a validated RunConfig; throws
// std::invalid_argument on any usage error.
inline RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;
    CLI::App app{"kerndist"};
    build_cli(app, cfg);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw std::invalid_argument(e.what());
    }
    detail::validate_config(cfg);
    return cfg;
}

namespace detail {

inline std::uint64_t ensure_seed(const RunConfig& cfg, std::ostream& diag) {
    if (cfg.seed.has_value()) return *cfg.seed;
    std::random_device rd;
    const std::uint64_t seed = (std::uint64_t(rd()) << 32) ^ rd();
    diag << "seed: " << seed << "\n";
    return seed;
}

inline int run_two_sample(const RunConfig& cfg) {
    const Matrix z = load_csv(cfg.inputs[0]);
    const Matrix w = load_csv(cfg.inputs[1]);
    const KernelSpec k = parse_kernel_spec(cfg.kernel);
    const NullSpec spec = make_null_spec(cfg.nulls[0], cfg);
    const std::uint64_t seed = ensure_seed(cfg, std::cerr);

    const TestResult res = two_sample_test(k, z, w, spec, {seed, 0});
    std::ofstream file;
    output_stream(cfg.out_path, file)
        << result_to_json(res, cfg.nulls[0], cfg.kernel, z.rows(), w.rows()).dump(2)
        << "\n";
    return res.reject ? 2 : 0;
}

inline int run_independence(const RunConfig& cfg) {
    const PairedSample s = load_csv_paired(cfg.inputs[0], cfg.split);
    const KernelSpec kx = parse_kernel_spec(cfg.kernel);
    const std::string ky_text = cfg.kernel_y.empty() ? cfg.kernel : cfg.kernel_y;
    const KernelSpec ky = parse_kernel_spec(ky_text);
    const NullSpec spec = make_null_spec(cfg.nulls[0], cfg);
    const std::uint64_t seed = ensure_seed(cfg, std::cerr);

    const TestResult res = independence_test(kx, ky, s, spec, {seed, 0});
    const std::string kernel_text =
        ky_text == cfg.kernel ? cfg.kernel : cfg.kernel + "|" + ky_text;
    std::ofstream file;
    output_stream(cfg.out_path, file)
        << result_to_json(res, cfg.nulls[0], kernel_text, s.x.rows(), s.y.rows()).dump(2)
        << "\n";
    return res.reject ? 2 : 0;
}

inline int run_gen(const RunConfig& cfg) {
    const auto params = difficulty_values(cfg);
    if (params.size() != 1)
        throw std::invalid_argument("gen takes exactly one difficulty value");
    const ScenarioSpec scenario = make_scenario(cfg, params[0]);
    const std::uint64_t seed = ensure_seed(cfg, std::cerr);

    if (scenario_is_two_sample(cfg.scenario)) {
        if (cfg.out_path.empty() || cfg.out2_path.empty())
            throw std::invalid_argument(
                "two-sample scenarios need --out and --out2 output paths");
        auto [z, w] = gen_two_sample(scenario, {seed, 0});
        save_csv(z, std::filesystem::path(cfg.out_path));
        save_csv(w, std::filesystem::path(cfg.out2_path));
        return 0;
    }
    const PairedSample s = gen_dependence(scenario, {seed, 0});
    Matrix joined(s.x.rows(), s.x.cols() + s.y.cols());
    for (std::size_t i = 0; i < s.x.rows(); ++i) {
        for (std::size_t j = 0; j < s.x.cols(); ++j) joined(i, j) = s.x(i, j);
        for (std::size_t j = 0; j < s.y.cols(); ++j) joined(i, s.x.cols() + j) = s.y(i, j);
    }
    std::ofstream file;
    std::ostream& out = output_stream(cfg.out_path, file);
    save_csv(joined, out);
    return 0;
}

struct BenchmarkCell {
    std::size_t rejections = 0;
    double stat_sum = 0.0;
    double seconds = 0.0;
};

inline int run_benchmark(const RunConfig& cfg) {
    const auto params = difficulty_values(cfg);
    const std::uint64_t seed = ensure_seed(cfg, std::cerr);
    const bool two_sample = scenario_is_two_sample(cfg.scenario);

    std::vector<KernelSpec> kernels;
    for (const auto& text : cfg.kernels) kernels.push_back(parse_kernel_spec(text));
    std::vector<NullSpec> nulls;
    for (const auto& text : cfg.nulls) nulls.push_back(make_null_spec(text, cfg));

    const std::size_t cells_per_param = kernels.size() * nulls.size();
    std::vector<BenchmarkCell> cells(params.size() * cells_per_param);

    for (std::size_t p = 0; p < params.size(); ++p) {
        const ScenarioSpec scenario = make_scenario(cfg, params[p]);
        std::vector<std::vector<std::pair<bool, double>>> trial_results(cfg.trials);
        std::vector<std::vector<double>> trial_seconds(cfg.trials);

        parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
            auto& results = trial_results[t];
            auto& seconds = trial_seconds[t];
            results.resize(cells_per_param);
            seconds.resize(cells_per_param);
            const RngSpec data_rng = derive_stream(seed, 1, p, t);

            std::optional<std::pair<Matrix, Matrix>> samples;
            std::optional<PairedSample> paired;
            if (two_sample)
                samples = gen_two_sample(scenario, data_rng);
            else
                paired = gen_dependence(scenario, data_rng);

            for (std::size_t k = 0; k < kernels.size(); ++k) {
                for (std::size_t n = 0; n < nulls.size(); ++n) {
                    const RngSpec test_rng =
                        derive_stream(seed, 2 + k * nulls.size() + n, p, t);
                    const auto t0 = std::chrono::steady_clock::now();
                    TestResult res;
                    if (two_sample)
                        res = two_sample_test(kernels[k], samples->first, samples->second,
                                              nulls[n], test_rng);
                    else
                        res = independence_test(kernels[k], kernels[k], *paired, nulls[n],
                                                test_rng);
                    const auto t1 = std::chrono::steady_clock::now();
                    results[k * nulls.size() + n] = {res.reject, res.statistic};
                    seconds[k * nulls.size() + n] =
                        std::chrono::duration<double>(t1 - t0).count();
                }
            }
        });

        for (std::size_t t = 0; t < cfg.trials; ++t) {
            for (std::size_t c = 0; c < cells_per_param; ++c) {
                auto& cell = cells[p * cells_per_param + c];
                cell.rejections += trial_results[t][c].first ? 1 : 0;
                cell.stat_sum += trial_results[t][c].second;
                cell.seconds += trial_seconds[t][c];
            }
        }
    }

    std::ofstream file;
    std::ostream& out = output_stream(cfg.out_path, file);
    out << "scenario,param,kernel,null,trials,rejections,rejection_rate,mean_statistic,"
           "wall_time_s\n";
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t k = 0; k < kernels.size(); ++k) {
            for (std::size_t n = 0; n < nulls.size(); ++n) {
                const auto& cell = cells[p * cells_per_param + k * nulls.size() + n];
                out << cfg.scenario << ',' << format_double(params[p]) << ','
                    << cfg.kernels[k] << ',' << cfg.nulls[n] << ',' << cfg.trials << ','
                    << cell.rejections << ','
                    << format_double(double(cell.rejections) / double(cfg.trials)) << ','
                    << format_double(cell.stat_sum / double(cfg.trials)) << ','
                    << format_double(cell.seconds) << "\n";
            }
        }
    }
    return 0;
}

}  // namespace detail

inline int run(const RunConfig& cfg) {
    detail::validate_config(cfg);
    switch (cfg.cmd) {
        case RunConfig::Cmd::TwoSample:
            return detail::run_two_sample(cfg);
        case RunConfig::Cmd::Independence:
            return detail::run_independence(cfg);
        case RunConfig::Cmd::Benchmark:
            return detail::run_benchmark(cfg);
        case RunConfig::Cmd::Gen:
            return detail::run_gen(cfg);
    }
    return 1;
}

inline int cli_main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"energy-distance / MMD two-sample and independence testing"};
    build_cli(app, cfg);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace kerndist
