#include "pntk/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "pntk/regress.hpp"

namespace pntk {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string tool_version() { return PNTK_VERSION; }

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    return out;
}

std::uint64_t file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return binio::fnv1a(buf.str());
}

std::vector<fs::path> input_files(const DataSection& d) {
    switch (d.source) {
        case DataSource::idx: return {d.images, d.labels};
        case DataSource::cifar: return {d.cifar_batches.begin(), d.cifar_batches.end()};
        case DataSource::ntkd: return {d.path};
        case DataSource::synthetic: return {};
    }
    return {};
}

std::string hex(std::uint64_t h) {
    std::ostringstream o;
    o << std::hex;
    o.width(16);
    o.fill('0');
    o << h;
    return o.str();
}

// Resolved config plus manifest.json. Only `created` and fields the caller
// marks as timing vary between identical reruns.
fs::path prepare_dir(const ExperimentConfig& cfg, const std::string& command, const json& extra = json::object()) {
    const fs::path dir = cfg.output.dir;
    fs::create_directories(dir);
    const std::string resolved = to_ini(cfg);
    open_out(dir / "config.resolved.ini") << resolved;

    json m;
    m["tool"] = "pntk";
    m["version"] = tool_version();
    m["command"] = command;
    m["config_hash"] = hex(binio::fnv1a(resolved));
    json inputs = json::object();
    if (command != "estimate" && command != "bench") {
        for (const auto& p : input_files(cfg.data)) inputs[p.string()] = hex(file_hash(p));
    }
    m["inputs"] = inputs;
    m["training_loss"] = kTrainingLoss;
    m["checkpoint_mapping"] = "desk-scale epochs; the reference schedule 0/50/100/150/200 maps to the configured list";
    for (const auto& [k, v] : extra.items()) m[k] = v;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["created"] = stamp;
    open_out(dir / "manifest.json") << m.dump(2) << "\n";
    return dir;
}

void write_rows(const fs::path& path, const std::vector<MetricRow>& rows) {
    auto out = open_out(path);
    out << "width,seed,epoch,metric,value\n";
    for (const auto& r : rows) out << r.width << ',' << r.seed << ',' << r.epoch << ',' << r.metric << ',' << num(r.value) << '\n';
}

void write_fits(const fs::path& path, const std::vector<SlopeFit>& fits) {
    auto out = open_out(path);
    out << "epoch,metric,slope,intercept,r2\n";
    for (const auto& f : fits) {
        out << f.epoch << ',' << f.metric << ',' << num(f.fit.fitted_slope) << ',' << num(f.fit.intercept) << ','
            << num(f.fit.fit_r2) << '\n';
    }
}

std::vector<std::size_t> sorted_checkpoints(const ExperimentConfig& cfg) {
    auto cps = cfg.sweep.checkpoints;
    if (cps.empty()) cps.push_back(0);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    return cps;
}

// Networks at every checkpoint epoch for one (width, seed).
std::vector<Snapshot> checkpoint_networks(const ExperimentConfig& cfg, const LabeledSet& train, std::size_t width,
                                          std::uint64_t seed) {
    auto spec = network_spec(cfg, static_cast<std::size_t>(train.dim()), train.num_classes, width);
    spec.seed = seed;
    const Network net = init_network(spec);
    const auto cps = sorted_checkpoints(cfg);
    if (cps.back() == 0) return {{0, net}};
    TrainConfig tc = train_config(cfg);
    tc.seed = seed;
    tc.epochs = cps.back();
    tc.checkpoints = cps;
    return sgd_train(net, train, tc).snapshots;
}

void fit_metrics(SweepReport& report, const ExperimentConfig& cfg, const std::vector<std::string>& metrics) {
    std::vector<double> widths(cfg.sweep.widths.begin(), cfg.sweep.widths.end());
    for (auto epoch : sorted_checkpoints(cfg)) {
        for (const auto& m : metrics) {
            const auto means = report.mean_by_width(m, epoch);
            try {
                report.fits.push_back({epoch, m, loglog_slope(widths, means)});
            } catch (const Error&) {
                // Non-positive or missing values: nothing to fit for this metric.
            }
        }
    }
}

}  // namespace

std::vector<double> SweepReport::mean_by_width(const std::string& metric, std::size_t epoch) const {
    std::vector<std::size_t> order;
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
        if (r.metric != metric || r.epoch != epoch) continue;
        if (!acc.contains(r.width)) order.push_back(r.width);
        auto& [sum, count] = acc[r.width];
        sum += r.value;
        ++count;
    }
    std::vector<double> out;
    for (auto w : order) out.push_back(acc[w].first / static_cast<double>(acc[w].second));
    return out;
}

const SlopeFit* SweepReport::find_fit(const std::string& metric, std::size_t epoch) const {
    for (const auto& f : fits) {
        if (f.metric == metric && f.epoch == epoch) return &f;
    }
    return nullptr;
}

std::pair<LabeledSet, LabeledSet> prepare_data(const ExperimentConfig& cfg) {
    const auto& d = cfg.data;
    LabeledSet all;
    switch (d.source) {
        case DataSource::synthetic:
            all = synth_clusters(d.classes, d.per_class, d.dim, d.separation, d.seed);
            break;
        case DataSource::idx:
            if (d.images.empty() || d.labels.empty()) {
                throw Error(ErrorKind::ConfigError, "[data] idx source needs images and labels paths");
            }
            all = load_idx(d.images, d.labels);
            break;
        case DataSource::cifar: {
            if (d.cifar_batches.empty()) throw Error(ErrorKind::ConfigError, "[data] cifar source needs cifar_batches");
            std::vector<fs::path> paths(d.cifar_batches.begin(), d.cifar_batches.end());
            all = load_cifar_binary(paths);
            break;
        }
        case DataSource::ntkd:
            if (d.path.empty()) throw Error(ErrorKind::ConfigError, "[data] ntkd source needs a path");
            all = load_set(d.path);
            break;
    }
    auto [train, test] = split(all, {d.train_n, d.test_n, d.seed, d.stratified});
    if (d.standardize) {
        const auto stats = fit_standardizer(train);
        train = apply_standardizer(train, stats);
        test = apply_standardizer(test, stats);
    }
    return {std::move(train), std::move(test)};
}

SweepReport cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    const auto [train, test] = prepare_data(cfg);
    const auto opts = kernel_options(cfg);
    const fs::path dir = prepare_dir(cfg, "sweep", {{"data", train.provenance}, {"points", train.size()}});
    SweepReport report;
    for (auto width : cfg.sweep.widths) {
        for (auto seed : cfg.sweep.seeds) {
            for (const auto& snap : checkpoint_networks(cfg, train, width, seed)) {
                const auto t0 = std::chrono::steady_clock::now();
                const auto e = entk_matrix(snap.net, train.inputs, train.inputs, opts);
                const auto p = pntk_matrix(snap.net, train.inputs, train.inputs, cfg.kernel.mode, opts);
                const auto add = [&](const std::string& metric, double value) {
                    report.rows.push_back({width, seed, snap.epoch, metric, value});
                };
                const double frob = rel_frobenius_diff(e, p);
                add("rel_frobenius_diff", frob);
                const auto mass = diag_offdiag_mass(e);
                add("diag_mass", mass.diag);
                add("offdiag_mass", mass.offdiag);
                add("diag_mass_signed", mass.diag_signed);
                add("offdiag_mass_signed", mass.offdiag_signed);
                const auto se = spectral_summary(SymmetricMatrix(e.data));
                const auto sp = spectral_summary_lifted(SymmetricMatrix(p.data), e.o);
                add("entk_lambda_max", se.lambda_max);
                add("pntk_lambda_max", sp.lambda_max);
                add("entk_lambda_min", se.lambda_min);
                add("pntk_lambda_min", sp.lambda_min);
                add("rel_eig_diff_max", rel_eig_diff(se, sp, EigStat::max));
                if (se.lambda_min != 0.0) add("rel_eig_diff_min", rel_eig_diff(se, sp, EigStat::min));
                if (se.condition_finite() && sp.condition_finite()) {
                    add("entk_condition", se.condition_number);
                    add("pntk_condition", sp.condition_number);
                    add("rel_eig_diff_cond", rel_eig_diff(se, sp, EigStat::cond));
                }
                if (cfg.output.save_kernels) {
                    const std::string tag = "_w" + std::to_string(width) + "_s" + std::to_string(seed) + "_e" +
                                            std::to_string(snap.epoch);
                    const auto hash = network_hash(snap.net);
                    save_kernel(dir / ("entk" + tag), e.data,
                                {KernelKind::entk, std::nullopt, e.n1, e.n2, e.o, hash, snap.epoch});
                    save_kernel(dir / ("pntk" + tag), p.data,
                                {KernelKind::pntk, p.mode, p.n1, p.n2, e.o, hash, snap.epoch});
                }
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                log << "sweep width=" << width << " seed=" << seed << " epoch=" << snap.epoch
                    << " rel_frobenius_diff=" << num(frob)
                    << " (" << num(std::round(secs * 100) / 100) << " s)\n";
            }
        }
    }
    fit_metrics(report, cfg, {"rel_frobenius_diff", "rel_eig_diff_max", "rel_eig_diff_min", "rel_eig_diff_cond"});
    write_rows(dir / "sweep.csv", report.rows);
    write_fits(dir / "sweep_slopes.csv", report.fits);
    for (const auto& f : report.fits) {
        log << "slope epoch=" << f.epoch << ' ' << f.metric << ": " << num(f.fit.fitted_slope)
            << " (r2 " << num(f.fit.fit_r2) << ")\n";
    }
    return report;
}

namespace {

void dump_predictions(const fs::path& stem, const RegressionOutput& out) {
    auto csv_path = stem;
    csv_path += ".csv";
    auto csv = open_out(csv_path);
    csv << "test_index";
    for (Index c = 0; c < out.predictions.cols(); ++c) csv << ",class_" << c;
    csv << ",argmax\n";
    for (Index i = 0; i < out.predictions.rows(); ++i) {
        csv << i;
        for (Index c = 0; c < out.predictions.cols(); ++c) csv << ',' << num(out.predictions(i, c));
        csv << ',' << out.labels[static_cast<std::size_t>(i)] << '\n';
    }
    json meta;
    meta["kernel_kind"] = to_string(out.kernel_kind);
    meta["mode"] = out.mode ? json(out.mode->to_string()) : json(nullptr);
    meta["jitter"] = out.jitter_used;
    meta["jitter_escalated"] = out.jitter_escalated;
    meta["centered"] = out.centered;
    auto json_path = stem;
    json_path += ".json";
    open_out(json_path) << meta.dump(2) << "\n";
}

}  // namespace

SweepReport cmd_regress(const ExperimentConfig& cfg, std::ostream& log) {
    const auto [train, test] = prepare_data(cfg);
    const auto opts = kernel_options(cfg);
    const fs::path dir = prepare_dir(cfg, "regress", {{"data", train.provenance},
                                                      {"train_points", train.size()},
                                                      {"test_points", test.size()},
                                                      {"relative_jitter", cfg.kernel.jitter},
                                                      {"centered", cfg.kernel.center}});
    fs::create_directories(dir / "predictions");
    RegressionProblem prob;
    prob.train_inputs = train.inputs;
    prob.train_targets = one_hot(train.labels, train.num_classes);
    prob.test_inputs = test.inputs;
    prob.center_with_f0 = cfg.kernel.center;
    prob.relative_jitter = cfg.kernel.jitter;
    const bool want_entk = cfg.kernel.kind != KernelChoice::pntk;
    const bool want_pntk = cfg.kernel.kind != KernelChoice::entk;

    SweepReport report;
    for (auto width : cfg.sweep.widths) {
        for (auto seed : cfg.sweep.seeds) {
            for (const auto& snap : checkpoint_networks(cfg, train, width, seed)) {
                const auto add = [&](const std::string& metric, double value) {
                    report.rows.push_back({width, seed, snap.epoch, metric, value});
                };
                const std::string tag = "_w" + std::to_string(width) + "_s" + std::to_string(seed) + "_e" +
                                        std::to_string(snap.epoch);
                std::optional<RegressionOutput> e, p;
                if (want_entk) {
                    e = predict_entk(snap.net, prob, opts);
                    add("accuracy_entk", accuracy(*e, test.labels));
                    dump_predictions(dir / "predictions" / ("entk" + tag), *e);
                }
                if (want_pntk) {
                    p = predict_pntk(snap.net, prob, cfg.kernel.mode, opts);
                    add("accuracy_pntk", accuracy(*p, test.labels));
                    dump_predictions(dir / "predictions" / ("pntk" + tag), *p);
                }
                log << "regress width=" << width << " seed=" << seed << " epoch=" << snap.epoch;
                if (e && p) {
                    const double abs_diff = prediction_diff(*p, *e, false);
                    const double rel = abs_diff == 0.0 ? 0.0 : prediction_diff(*p, *e, true);
                    add("prediction_diff", rel);
                    add("prediction_diff_abs", abs_diff);
                    add("accuracy_diff", accuracy(*p, test.labels) - accuracy(*e, test.labels));
                    log << " prediction_diff=" << num(rel);
                }
                log << "\n";
            }
        }
    }
    fit_metrics(report, cfg, {"prediction_diff"});
    write_rows(dir / "regress.csv", report.rows);
    write_fits(dir / "regress_slopes.csv", report.fits);
    for (const auto& f : report.fits) {
        log << "slope epoch=" << f.epoch << ' ' << f.metric << ": " << num(f.fit.fitted_slope) << " (r2 "
            << num(f.fit.fit_r2) << ")\n";
    }
    return report;
}

std::vector<KernelArtifact> cmd_kernel(const ExperimentConfig& cfg, std::ostream& log) {
    const auto [train, test] = prepare_data(cfg);
    const auto opts = kernel_options(cfg);
    const fs::path dir = prepare_dir(cfg, "kernel", {{"data", train.provenance}, {"points", train.size()}});
    save_set(dir / "train.ntkd", train);
    std::vector<KernelArtifact> out;
    for (const auto& snap : checkpoint_networks(cfg, train, cfg.net.width, cfg.net.seed)) {
        const std::string tag = "_e" + std::to_string(snap.epoch);
        save_network(dir / ("network" + tag + ".ntkw"), snap.net);
        const auto hash = network_hash(snap.net);
        const auto o = static_cast<Index>(snap.net.output_dim());
        if (cfg.kernel.kind != KernelChoice::pntk) {
            const auto e = entk_matrix(snap.net, train.inputs, train.inputs, opts);
            const std::string stem = "entk" + tag;
            save_kernel(dir / stem, e.data, {KernelKind::entk, std::nullopt, e.n1, e.n2, o, hash, snap.epoch});
            out.push_back({snap.epoch, KernelKind::entk, spectral_summary(SymmetricMatrix(e.data)), stem});
        }
        if (cfg.kernel.kind != KernelChoice::entk) {
            const auto p = pntk_matrix(snap.net, train.inputs, train.inputs, cfg.kernel.mode, opts);
            const std::string stem = "pntk" + tag;
            save_kernel(dir / stem, p.data, {KernelKind::pntk, p.mode, p.n1, p.n2, o, hash, snap.epoch});
            out.push_back({snap.epoch, KernelKind::pntk, spectral_summary(SymmetricMatrix(p.data)), stem});
        }
        log << "kernel epoch=" << snap.epoch << " written\n";
    }
    auto csv = open_out(dir / "kernel_summary.csv");
    csv << "epoch,kind,lambda_max,lambda_min,condition_number,frob_norm,stem\n";
    for (const auto& a : out) {
        csv << a.epoch << ',' << to_string(a.kind) << ',' << num(a.summary.lambda_max) << ','
            << num(a.summary.lambda_min) << ',' << num(a.summary.condition_number) << ','
            << num(a.summary.frob_norm) << ',' << a.stem << '\n';
    }
    return out;
}

std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg, std::ostream& log) {
    const fs::path dir = prepare_dir(cfg, "bench", {{"timing_fields", {"seconds", "entk_median", "pntk_median", "ratio"}}});
    const auto opts = kernel_options(cfg);
    auto raw = open_out(dir / "bench.csv");
    raw << "n,o,width,kind,rep,seconds\n";
    std::vector<BenchRow> rows;
    const auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const auto m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    for (auto n : cfg.bench.n_values) {
        for (auto o : cfg.bench.o_values) {
            for (auto width : cfg.bench.widths) {
                auto spec = network_spec(cfg, cfg.data.dim, o, width);
                const Network net = init_network(spec);
                std::mt19937_64 rng(cfg.net.seed);
                std::normal_distribution<double> normal;
                Matrix x(static_cast<Index>(n), static_cast<Index>(cfg.data.dim));
                for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
                const auto time = [&](auto&& fn) {
                    const auto t0 = std::chrono::steady_clock::now();
                    fn();
                    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                };
                const auto run_entk = [&] { (void)entk_matrix(net, x, x, opts); };
                const auto run_pntk = [&] { (void)pntk_matrix(net, x, x, cfg.kernel.mode, opts); };
                for (std::size_t w = 0; w < cfg.bench.warmup; ++w) {
                    run_entk();
                    run_pntk();
                }
                std::vector<double> te, tp;
                for (std::size_t r = 0; r < std::max<std::size_t>(cfg.bench.repeats, 1); ++r) {
                    te.push_back(time(run_entk));
                    tp.push_back(time(run_pntk));
                    raw << n << ',' << o << ',' << width << ",entk," << r << ',' << num(te.back()) << '\n';
                    raw << n << ',' << o << ',' << width << ",pntk," << r << ',' << num(tp.back()) << '\n';
                }
                rows.push_back({n, o, width, median(te), median(tp)});
                log << "bench N=" << n << " O=" << o << " width=" << width << " entk=" << num(rows.back().entk_median)
                    << "s pntk=" << num(rows.back().pntk_median) << "s ratio=" << num(rows.back().ratio()) << "\n";
            }
        }
    }
    auto summary = open_out(dir / "bench_summary.csv");
    summary << "n,o,width,entk_median,pntk_median,ratio\n";
    for (const auto& r : rows) {
        summary << r.n << ',' << r.o << ',' << r.width << ',' << num(r.entk_median) << ',' << num(r.pntk_median) << ','
                << num(r.ratio()) << '\n';
    }
    return rows;
}

std::string format_bytes(std::uint64_t bytes) {
    const double b = static_cast<double>(bytes);
    const char* si[] = {"B", "kB", "MB", "GB", "TB", "PB", "EB"};
    const char* iec[] = {"B", "KiB", "MiB", "GiB", "TiB", "PiB", "EiB"};
    const auto scaled = [b](double base, const char* const* units) {
        double v = b;
        int u = 0;
        while (v >= base && u < 6) {
            v /= base;
            ++u;
        }
        std::ostringstream o;
        o.setf(std::ios::fixed);
        o.precision(2);
        o << v << ' ' << units[u];
        return o.str();
    };
    return scaled(1000.0, si) + " (" + scaled(1024.0, iec) + ")";
}

EstimateReport cmd_estimate(std::uint64_t n, std::uint64_t o, std::uint64_t bytes, std::ostream& log) {
    EstimateReport r{resource_estimate(n, o, bytes, KernelKind::entk), resource_estimate(n, o, bytes, KernelKind::pntk)};
    const auto line = [&](const char* name, const ResourceEstimate& e) {
        log << name << ": " << e.kernel_bytes << " bytes = " << format_bytes(e.kernel_bytes) << ", " << e.jvp_count
            << " Jacobian-vector products" << (e.saturated ? " (saturated)" : "") << "\n";
    };
    log << "N=" << n << " O=" << o << " element_bytes=" << bytes << "\n";
    line("eNTK", r.entk);
    line("pNTK", r.pntk);
    return r;
}

ALConfig al_config(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t output_dim) {
    ALConfig a;
    a.initial_labeled = cfg.active.initial_labeled;
    a.per_cycle = cfg.active.per_cycle;
    a.cycles = cfg.active.cycles;
    if (cfg.active.acquisition == "random") {
        a.acquisition = Acquisition::random;
    } else {
        a.kernel = cfg.active.acquisition == "entk" ? KernelKind::entk : KernelKind::pntk;
    }
    a.mode = cfg.kernel.mode;
    a.candidate_pool_cap = cfg.active.pool_cap;
    a.ref_set_size = cfg.active.ref_size;
    a.initial_epochs = cfg.active.initial_epochs;
    a.retrain_epochs = cfg.active.retrain_epochs;
    a.warm_start = cfg.active.warm_start;
    a.center_with_f0 = cfg.kernel.center;
    a.relative_jitter = cfg.kernel.jitter;
    a.net = network_spec(cfg, input_dim, output_dim);
    a.train = train_config(cfg);
    a.kernel_opts = kernel_options(cfg);
    a.seed = cfg.net.seed;
    return a;
}

ALTrace cmd_active(const ExperimentConfig& cfg, std::ostream& log) {
    const auto [train, test] = prepare_data(cfg);
    const auto al = al_config(cfg, static_cast<std::size_t>(train.dim()), train.num_classes);
    const fs::path dir = prepare_dir(cfg, "active", {{"data", train.provenance},
                                                     {"functional", kLookaheadFunctional},
                                                     {"pseudo_label", "current model argmax"},
                                                     {"reference_set", "fixed random subset of the initial pool"},
                                                     {"warm_start", al.warm_start},
                                                     {"timing_fields", {"acq_seconds", "total_acq_seconds"}}});
    const auto trace = run_al(al, train, test);
    auto csv = open_out(dir / "trace.csv");
    write_trace_csv(csv, trace);
    json m;
    m["kernel"] = trace.kernel_label;
    m["functional"] = trace.functional;
    m["pool_exhausted"] = trace.pool_exhausted;
    m["total_acq_seconds"] = trace.total_acq_seconds();
    m["final_accuracy"] = trace.final_accuracy();
    json cycles = json::array();
    for (const auto& c : trace.cycles) {
        cycles.push_back({{"cycle", c.cycle},
                          {"labeled_count", c.labeled_count},
                          {"accuracy", c.accuracy},
                          {"acq_seconds", c.acq_seconds},
                          {"escalated_candidates", c.escalated},
                          {"selected", c.selected}});
    }
    m["cycles"] = cycles;
    open_out(dir / "al_run.json") << m.dump(2) << "\n";
    for (const auto& c : trace.cycles) {
        log << "cycle " << c.cycle << ": labeled=" << c.labeled_count << " accuracy=" << num(c.accuracy)
            << " acq=" << num(c.acq_seconds) << "s\n";
    }
    return trace;
}

TrainReport cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
    const auto [train, test] = prepare_data(cfg);
    const fs::path dir = prepare_dir(cfg, "train", {{"data", train.provenance}});
    const Network net = init_network(network_spec(cfg, static_cast<std::size_t>(train.dim()), train.num_classes));
    TrainConfig tc = train_config(cfg);
    tc.checkpoints.clear();
    const auto result = sgd_train(net, train, tc);
    save_network(dir / "network.ntkw", result.net);
    save_set(dir / "train.ntkd", train);
    save_set(dir / "test.ntkd", test);
    TrainReport r;
    r.epoch_loss = result.epoch_loss;
    r.train_accuracy = classification_accuracy(result.net, train);
    r.test_accuracy = classification_accuracy(result.net, test);
    r.network_hash = network_hash(result.net);
    auto csv = open_out(dir / "train_log.csv");
    csv << "epoch,loss\n";
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) csv << e + 1 << ',' << num(r.epoch_loss[e]) << '\n';
    log << "trained " << tc.epochs << " epochs: train accuracy " << num(r.train_accuracy) << ", test accuracy "
        << num(r.test_accuracy) << "\n";
    return r;
}

}  // namespace pntk
