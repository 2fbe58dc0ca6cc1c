// Command-line front end: pntk <subcommand> [--config PATH] [--out DIR]
// [--workers N] [--seed U64]. Errors go to stderr as "error: <Kind>: ..."
// with a nonzero exit code.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pntk/commands.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::size_t workers = 0;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOptions& opts, bool config_required) {
    auto* c = sub->add_option("--config", opts.config, "Experiment config (INI)");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "Output directory (overrides [output] dir)");
    sub->add_option("--workers", opts.workers, "Worker threads (0 = library default)");
    sub->add_option("--seed", opts.seed, "Seed overriding [net] seed and [data] seed");
}

pntk::ExperimentConfig resolve(const CommonOptions& opts) {
    pntk::ExperimentConfig cfg = opts.config.empty() ? pntk::ExperimentConfig{} : pntk::load_config(opts.config);
    if (!opts.out.empty()) cfg.output.dir = opts.out;
    if (opts.seed) {
        cfg.net.seed = *opts.seed;
        cfg.data.seed = *opts.seed;
    }
#ifdef _OPENMP
    if (opts.workers > 0) omp_set_num_threads(static_cast<int>(opts.workers));
#endif
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Empirical and pseudo neural tangent kernels for fully-connected networks"};
    app.set_version_flag("--version", pntk::tool_version());
    app.require_subcommand(1);

    CommonOptions opts;
    auto* kernel = app.add_subcommand("kernel", "Build and persist eNTK/pNTK Grams at checkpoint epochs");
    auto* sweep = app.add_subcommand("sweep", "Width sweep of kernel differences with log-log slope fits");
    auto* regress = app.add_subcommand("regress", "Kernel regression with both kernels; diffs and accuracies");
    auto* bench = app.add_subcommand("bench", "Paired wall-clock timing of eNTK vs pNTK assembly");
    auto* active = app.add_subcommand("active", "Look-ahead active-learning simulation");
    auto* train = app.add_subcommand("train", "Train a network and store weights and data splits");
    auto* estimate = app.add_subcommand("estimate", "Memory and Jacobian-vector-product counts for N, O, bytes");
    for (auto* sub : {kernel, sweep, regress, active, train}) add_common(sub, opts, true);
    add_common(bench, opts, false);

    std::vector<std::uint64_t> estimate_args;
    estimate->add_option("values", estimate_args, "N O bytes-per-element")->expected(0, 3);
    estimate->add_option("--config", opts.config, "Experiment config (INI) providing [estimate]")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (estimate->parsed()) {
            auto cfg = resolve(opts);
            if (!estimate_args.empty() && estimate_args.size() != 3) {
                std::cerr << "error: InvalidArgument: estimate takes exactly N O bytes\n";
                return 2;
            }
            if (estimate_args.size() == 3) {
                cfg.estimate = {estimate_args[0], estimate_args[1], estimate_args[2]};
            }
            pntk::cmd_estimate(cfg.estimate.n, cfg.estimate.o, cfg.estimate.bytes, std::cout);
            return 0;
        }
        const auto cfg = resolve(opts);
        if (kernel->parsed()) pntk::cmd_kernel(cfg, std::cout);
        if (sweep->parsed()) pntk::cmd_sweep(cfg, std::cout);
        if (regress->parsed()) pntk::cmd_regress(cfg, std::cout);
        if (bench->parsed()) pntk::cmd_bench(cfg, std::cout);
        if (active->parsed()) pntk::cmd_active(cfg, std::cout);
        if (train->parsed()) pntk::cmd_train(cfg, std::cout);
        std::cout << "artifacts: " << cfg.output.dir << "\n";
    } catch (const pntk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
