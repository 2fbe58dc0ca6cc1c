#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pntk/commands.hpp"
#include "pntk/regress.hpp"

using namespace pntk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("pntk_cmd_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig tiny(const std::string& name) {
    ExperimentConfig cfg;
    cfg.net.hidden_layers = 1;
    cfg.data.classes = 3;
    cfg.data.per_class = 12;
    cfg.data.dim = 4;
    cfg.data.train_n = 18;
    cfg.data.test_n = 9;
    cfg.sweep.widths = {16, 32, 64};
    cfg.sweep.seeds = {0, 1};
    cfg.output.dir = scratch(name).string();
    return cfg;
}

}  // namespace

TEST_CASE("estimate prints both kernels in SI and binary units") {
    std::ostringstream log;
    const auto r = cmd_estimate(50000, 10, 8, log);
    CHECK(r.entk.kernel_bytes == 2'000'000'000'000ull);
    CHECK(r.pntk.kernel_bytes == 20'000'000'000ull);
    CHECK(log.str().find("eNTK: 2000000000000 bytes = 2.00 TB (1.82 TiB)") != std::string::npos);
    CHECK(log.str().find("pNTK: 20000000000 bytes = 20.00 GB (18.63 GiB)") != std::string::npos);
    CHECK(format_bytes(512) == "512.00 B (512.00 B)");
}

TEST_CASE("sweep rows agree with direct metric calls and write artifacts") {
    auto cfg = tiny("sweep");
    std::ostringstream log;
    const auto report = cmd_sweep(cfg, log);
    const auto [train, test] = prepare_data(cfg);
    auto spec = network_spec(cfg, 4, 3, 32);
    spec.seed = 1;
    const auto net = init_network(spec);
    const double direct = rel_frobenius_diff(entk_matrix(net, train.inputs, train.inputs),
                                             pntk_matrix(net, train.inputs, train.inputs));
    bool found = false;
    for (const auto& r : report.rows) {
        if (r.width == 32 && r.seed == 1 && r.metric == "rel_frobenius_diff") {
            CHECK(r.value == direct);
            found = true;
        }
    }
    CHECK(found);
    CHECK(report.mean_by_width("rel_frobenius_diff", 0).size() == 3);
    CHECK(report.find_fit("rel_frobenius_diff", 0) != nullptr);

    const fs::path dir = cfg.output.dir;
    for (const char* f : {"sweep.csv", "sweep_slopes.csv", "manifest.json", "config.resolved.ini"})
        CHECK(fs::exists(dir / f));
    CHECK(load_config(dir / "config.resolved.ini") == cfg);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["command"] == "sweep");
    CHECK(manifest["version"] == tool_version());
    CHECK(manifest.contains("config_hash"));

    const std::string first = slurp(dir / "sweep.csv");
    std::ostringstream again;
    (void)cmd_sweep(cfg, again);
    CHECK(slurp(dir / "sweep.csv") == first);
}

TEST_CASE("regression with one output reports zero prediction difference") {
    auto cfg = tiny("regress_o1");
    cfg.data.classes = 1;
    cfg.data.per_class = 30;
    cfg.data.train_n = 20;
    cfg.data.test_n = 10;
    std::ostringstream log;
    const auto report = cmd_regress(cfg, log);
    for (const auto& r : report.rows) {
        if (r.metric == "prediction_diff" || r.metric == "prediction_diff_abs") CHECK(r.value == 0.0);
    }
    CHECK(log.str().find("prediction_diff=0\n") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg.output.dir) / "predictions" / "pntk_w16_s0_e0.csv"));
    CHECK(fs::exists(fs::path(cfg.output.dir) / "predictions" / "entk_w16_s0_e0.json"));
}

TEST_CASE("regression accuracies match a direct prediction") {
    auto cfg = tiny("regress");
    cfg.sweep.widths = {32};
    cfg.sweep.seeds = {2};
    std::ostringstream log;
    const auto report = cmd_regress(cfg, log);
    const auto [train, test] = prepare_data(cfg);
    auto spec = network_spec(cfg, 4, 3, 32);
    spec.seed = 2;
    const auto net = init_network(spec);
    RegressionProblem prob{train.inputs, one_hot(train.labels, 3), test.inputs};
    const auto p = predict_pntk(net, prob);
    for (const auto& r : report.rows)
        if (r.metric == "accuracy_pntk") CHECK(r.value == accuracy(p, test.labels));
}

TEST_CASE("kernel, train and active commands write their artifacts") {
    auto cfg = tiny("kernel");
    cfg.net.width = 16;
    cfg.sweep.checkpoints = {0, 2};
    cfg.train.batch_size = 8;
    std::ostringstream log;
    const auto arts = cmd_kernel(cfg, log);
    CHECK(arts.size() == 4);
    const fs::path dir = cfg.output.dir;
    CHECK(fs::exists(dir / "entk_e2.ntkm"));
    CHECK(fs::exists(dir / "pntk_e0.json"));
    CHECK(fs::exists(dir / "network_e2.ntkw"));
    CHECK(load_matrix(dir / "pntk_e0.ntkm").rows() == 18);
    CHECK(load_matrix(dir / "entk_e0.ntkm").rows() == 54);

    auto tcfg = tiny("train");
    tcfg.train.epochs = 3;
    tcfg.train.batch_size = 8;
    const auto tr = cmd_train(tcfg, log);
    CHECK(tr.epoch_loss.size() == 3);
    CHECK(network_hash(load_network(fs::path(tcfg.output.dir) / "network.ntkw")) == tr.network_hash);
    CHECK(load_set(fs::path(tcfg.output.dir) / "test.ntkd").size() == 9);

    auto acfg = tiny("active");
    acfg.data.per_class = 30;
    acfg.data.train_n = 60;
    acfg.data.test_n = 30;
    acfg.active = {10, 5, 2, "pntk", 30, 10, 3, 2, true};
    acfg.train.batch_size = 8;
    const auto trace = cmd_active(acfg, log);
    CHECK(trace.cycles.size() == 3);
    CHECK(fs::exists(fs::path(acfg.output.dir) / "trace.csv"));
    const auto run = nlohmann::json::parse(slurp(fs::path(acfg.output.dir) / "al_run.json"));
    CHECK(run["functional"] == kLookaheadFunctional);
}

TEST_CASE("bench reports paired medians") {
    auto cfg = tiny("bench");
    cfg.bench = {{20}, {3}, {16}, 0, 3};
    std::ostringstream log;
    const auto rows = cmd_bench(cfg, log);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].entk_median > 0.0);
    CHECK(rows[0].pntk_median > 0.0);
    CHECK(fs::exists(fs::path(cfg.output.dir) / "bench_summary.csv"));
}

TEST_CASE("missing data paths are configuration errors") {
    auto cfg = tiny("missing");
    cfg.data.source = DataSource::idx;
    std::ostringstream log;
    try {
        (void)cmd_sweep(cfg, log);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConfigError);
    }
}
