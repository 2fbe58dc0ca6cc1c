#include <doctest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "pntk/active.hpp"
#include "pntk/regress.hpp"

using namespace pntk;

namespace {

struct Setup {
    Network net;
    Matrix labeled, targets, pool, ref;
};

// Labels are the network's own argmax so that pseudo-labels and true labels
// agree on duplicated points.
Setup make_setup(std::size_t width, std::size_t o, Index l, Index p, Index r, std::uint64_t seed) {
    Setup s{oracle::make_net(4, {width, width}, o, seed), oracle::random_matrix(l, 4, seed + 1), {},
            oracle::random_matrix(p, 4, seed + 2), oracle::random_matrix(r, 4, seed + 3)};
    s.targets = one_hot(argmax_rows(forward_batch(s.net, s.labeled)), o);
    return s;
}

// Change of ref-set predictions from adding candidate `c` with its
// pseudo-label, computed by two full regressions.
double scratch_score(const Setup& s, Index c, KernelKind kind, double jitter) {
    const Index l = s.labeled.rows();
    Matrix aug_x(l + 1, s.labeled.cols());
    aug_x << s.labeled, s.pool.row(c);
    const Matrix pseudo = one_hot(argmax_rows(forward_batch(s.net, s.pool.row(c))), s.net.output_dim());
    Matrix aug_y(l + 1, s.targets.cols());
    aug_y << s.targets, pseudo;
    const auto fit = [&](const Matrix& x, const Matrix& y) {
        const Matrix resid = y - forward_batch(s.net, x);
        if (kind == KernelKind::entk) {
            const auto k = entk_train_test(s.net, x, s.ref);
            return regress_block(SymmetricMatrix(k.train), k.cross, resid, jitter).predictions;
        }
        const auto k = pntk_train_test(s.net, x, s.ref, PntkMode::sum());
        return regress_scalar(SymmetricMatrix(k.train), k.cross, resid, jitter).predictions;
    };
    return (fit(aug_x, aug_y) - fit(s.labeled, s.targets)).norm();
}

}  // namespace

TEST_CASE("bordered scores match from-scratch augmented regressions") {
    const auto s = make_setup(24, 3, 12, 6, 5, 1);
    for (auto kind : {KernelKind::entk, KernelKind::pntk}) {
        const auto res = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, kind);
        REQUIRE(res.scores.size() == 6);
        for (Index c = 0; c < 6; ++c) {
            const double ref = scratch_score(s, c, kind, res.jitter);
            CHECK(std::abs(res.scores(c) - ref) <= 1e-8 * std::max(1.0, ref));
            CHECK_FALSE(res.escalated[static_cast<std::size_t>(c)]);
        }
    }
}

TEST_CASE("a duplicate of a labeled point scores near zero") {
    auto s = make_setup(32, 4, 10, 8, 6, 2);
    s.pool.row(3) = s.labeled.row(5);
    for (auto kind : {KernelKind::entk, KernelKind::pntk}) {
        const auto res = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, kind);
        CHECK(res.scores(3) <= 1e-6 * res.scores.maxCoeff());
    }
}

TEST_CASE("single-output scores coincide across kernels") {
    const auto s = make_setup(16, 1, 8, 5, 4, 3);
    const auto e = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, KernelKind::entk);
    const auto p = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, KernelKind::pntk);
    CHECK((e.scores - p.scores).norm() <= 1e-10 * e.scores.norm());
}

TEST_CASE("scores follow the candidates when the pool is reordered") {
    const auto s = make_setup(16, 3, 8, 7, 4, 4);
    const std::vector<Index> perm{6, 2, 0, 5, 1, 4, 3};
    Matrix shuffled(7, 4);
    for (Index i = 0; i < 7; ++i) shuffled.row(i) = s.pool.row(perm[static_cast<std::size_t>(i)]);
    const auto a = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, KernelKind::pntk);
    const auto b = lookahead_scores(s.net, {&s.labeled, &s.targets, &shuffled, &s.ref}, KernelKind::pntk);
    for (Index i = 0; i < 7; ++i)
        CHECK(b.scores(i) == doctest::Approx(a.scores(perm[static_cast<std::size_t>(i)])).epsilon(1e-12));
}

TEST_CASE("pNTK and eNTK usually pick the same best candidate on a wide network") {
    int agree = 0;
    for (std::uint64_t t = 0; t < 10; ++t) {
        const auto s = make_setup(512, 5, 20, 20, 10, 100 + 7 * t);
        const auto e = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, KernelKind::entk);
        const auto p = lookahead_scores(s.net, {&s.labeled, &s.targets, &s.pool, &s.ref}, KernelKind::pntk);
        Index ie = 0, ip = 0;
        e.scores.maxCoeff(&ie);
        p.scores.maxCoeff(&ip);
        agree += ie == ip;
    }
    MESSAGE("argmax agreement " << agree << "/10");
    CHECK(agree >= 8);
}

TEST_CASE("incomplete or mismatched inputs are rejected") {
    const auto s = make_setup(8, 2, 4, 3, 2, 5);
    CHECK_THROWS_AS(lookahead_scores(s.net, {&s.labeled, nullptr, &s.pool, &s.ref}, KernelKind::pntk), Error);
    const Matrix wrong = Matrix::Zero(3, 2);
    CHECK_THROWS_AS(lookahead_scores(s.net, {&s.labeled, &wrong, &s.pool, &s.ref}, KernelKind::pntk), Error);
}

namespace {

ALConfig small_config(const LabeledSet& data) {
    ALConfig cfg;
    cfg.initial_labeled = 20;
    cfg.per_cycle = 10;
    cfg.cycles = 3;
    cfg.candidate_pool_cap = 60;
    cfg.ref_set_size = 20;
    cfg.initial_epochs = 10;
    cfg.retrain_epochs = 5;
    cfg.net.input_dim = static_cast<std::size_t>(data.dim());
    cfg.net.hidden_widths = {32};
    cfg.net.output_dim = data.num_classes;
    cfg.net.seed = 3;
    cfg.train.batch_size = 16;
    cfg.train.lr = 0.05;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("run_al grows the labeled set by per_cycle and never reselects") {
    const auto data = synth_clusters(3, 60, 4, 4.0, 1);
    const auto [train, test] = split(data, {120, 60, 2, true});
    const auto cfg = small_config(train);
    const auto trace = run_al(cfg, train, test);
    REQUIRE(trace.cycles.size() == 4);
    CHECK_FALSE(trace.pool_exhausted);
    CHECK(trace.kernel_label == "pntk");
    CHECK(trace.functional == std::string(kLookaheadFunctional));
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
        CHECK(trace.cycles[i].labeled_count == 20 + 10 * i);
        for (auto idx : trace.cycles[i].selected) CHECK(seen.insert(idx).second);
    }
    CHECK(seen.size() == 30);
    const auto again = run_al(cfg, train, test);
    for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
        CHECK(again.cycles[i].selected == trace.cycles[i].selected);
        CHECK(again.cycles[i].accuracy == trace.cycles[i].accuracy);
    }

    std::ostringstream csv;
    write_trace_csv(csv, trace);
    CHECK(csv.str().rfind("cycle,labeled_count,accuracy,acq_seconds,kernel_kind\n0,20,", 0) == 0);
}

TEST_CASE("a per_cycle equal to the pool consumes it in one cycle") {
    const auto data = synth_clusters(3, 20, 4, 4.0, 2);
    auto cfg = small_config(data);
    cfg.candidate_pool_cap = 25;
    cfg.per_cycle = 25;
    const auto trace = run_al(cfg, data, data);
    REQUIRE(trace.cycles.size() == 2);
    CHECK(trace.cycles[1].selected.size() == 25);
    CHECK(trace.cycles[1].labeled_count == 45);
    CHECK(trace.pool_exhausted);
}

TEST_CASE("look-ahead acquisition is not worse than random on separable data") {
    const auto data = synth_clusters(4, 150, 8, 5.0, 3);
    const auto [train, test] = split(data, {400, 200, 4, true});
    auto cfg = small_config(train);
    cfg.initial_labeled = 12;
    cfg.per_cycle = 8;
    cfg.cycles = 4;
    cfg.candidate_pool_cap = 200;
    cfg.ref_set_size = 60;
    double look = 0.0, rnd = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        cfg.acquisition = Acquisition::lookahead;
        look += run_al(cfg, train, test).final_accuracy();
        cfg.acquisition = Acquisition::random;
        rnd += run_al(cfg, train, test).final_accuracy();
    }
    MESSAGE("look-ahead " << look / 3 << " random " << rnd / 3);
    CHECK(look / 3 >= rnd / 3 - 0.02);
}

TEST_CASE("config validation") {
    ALConfig cfg;
    cfg.net.input_dim = 2;
    cfg.net.hidden_widths = {4};
    cfg.net.output_dim = 2;
    cfg.per_cycle = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.per_cycle = 1;
    cfg.ref_set_size = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    const auto data = synth_clusters(2, 5, 2, 1.0, 0);
    cfg.ref_set_size = 5;
    cfg.initial_labeled = 10;
    CHECK_THROWS_AS(run_al(cfg, data, data), Error);
}
