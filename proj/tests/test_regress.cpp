#include <doctest.h>

#include <vector>

#include "oracles.hpp"
#include "pntk/data.hpp"
#include "pntk/regress.hpp"

using namespace pntk;

namespace {

RegressionProblem problem(Index n, Index m, Index d, std::size_t o, std::uint64_t seed) {
    RegressionProblem p;
    p.train_inputs = oracle::random_matrix(n, d, seed);
    p.test_inputs = oracle::random_matrix(m, d, seed + 1);
    std::vector<std::size_t> labels;
    for (Index i = 0; i < n; ++i) labels.push_back(static_cast<std::size_t>(i) % o);
    p.train_targets = one_hot(labels, o);
    return p;
}

// Dense reference: vec the residual point-major, solve with Gaussian
// elimination, add f0 back.
Matrix dense_entk_prediction(const Network& net, const RegressionProblem& p, double jitter) {
    const Index o = static_cast<Index>(net.output_dim());
    const Index n = p.train_inputs.rows();
    Matrix k = oracle::naive_entk(net, p.train_inputs, p.train_inputs);
    k.diagonal().array() += jitter;
    const Matrix cross = oracle::naive_entk(net, p.test_inputs, p.train_inputs);
    Matrix rhs(n * o, 1);
    for (Index i = 0; i < n; ++i) {
        const Vector r = p.train_targets.row(i).transpose() - oracle::output(net, p.train_inputs.row(i).transpose());
        for (Index c = 0; c < o; ++c) rhs(i * o + c, 0) = r(c);
    }
    const Matrix flat = cross * oracle::gauss_solve(k, rhs);
    Matrix out(p.test_inputs.rows(), o);
    for (Index i = 0; i < out.rows(); ++i) {
        const Vector f0 = oracle::output(net, p.test_inputs.row(i).transpose());
        for (Index c = 0; c < o; ++c) out(i, c) = flat(i * o + c, 0) + f0(c);
    }
    return out;
}

}  // namespace

TEST_CASE("eNTK regression matches a dense Gaussian-elimination solve") {
    const auto net = oracle::make_net(4, {8}, 2, 1);
    auto p = problem(3, 2, 4, 2, 2);
    p.relative_jitter = 1e-6;
    const auto out = predict_entk(net, p);
    CHECK_FALSE(out.jitter_escalated);
    const Matrix ref = dense_entk_prediction(net, p, out.jitter_used);
    CHECK((out.predictions - ref).norm() <= 1e-10 * ref.norm());
    const Matrix k = oracle::naive_entk(net, p.train_inputs, p.train_inputs);
    CHECK(out.jitter_used == doctest::Approx(1e-6 * k.trace() / 6.0).epsilon(1e-12));
}

TEST_CASE("pNTK regression matches per-column solves") {
    const auto net = oracle::make_net(3, {12, 12}, 3, 3);
    auto p = problem(4, 3, 3, 3, 4);
    const auto out = predict_pntk(net, p);
    const Vector v = readout_vector(PntkMode::sum(), 3);
    Matrix k = oracle::naive_pntk(net, p.train_inputs, p.train_inputs, v);
    k.diagonal().array() += out.jitter_used;
    const Matrix cross = oracle::naive_pntk(net, p.test_inputs, p.train_inputs, v);
    for (Index c = 0; c < 3; ++c) {
        Matrix rhs(4, 1);
        for (Index i = 0; i < 4; ++i)
            rhs(i, 0) = p.train_targets(i, c) - oracle::output(net, p.train_inputs.row(i).transpose())(c);
        const Matrix col = cross * oracle::gauss_solve(k, rhs);
        for (Index i = 0; i < 3; ++i) {
            const double ref = col(i, 0) + oracle::output(net, p.test_inputs.row(i).transpose())(c);
            CHECK(out.predictions(i, c) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
    CHECK(out.kernel_kind == KernelKind::pntk);
    REQUIRE(out.mode.has_value());
}

TEST_CASE("scalar and Kronecker-lifted solves agree") {
    const auto net = oracle::make_net(5, {16}, 4, 5);
    const Matrix xtr = oracle::random_matrix(10, 5, 6);
    const Matrix xte = oracle::random_matrix(5, 5, 7);
    const auto k = pntk_train_test(net, xtr, xte, PntkMode::sum());
    const SymmetricMatrix train(k.train);
    const Matrix r = oracle::random_matrix(10, 4, 8);
    const double jitter = absolute_jitter(train, 1e-8);
    const auto a = regress_scalar(train, k.cross, r, jitter);
    const auto b = regress_lifted(train, k.cross, r, jitter);
    CHECK((a.predictions - b.predictions).norm() <= 1e-10 * a.predictions.norm());
}

TEST_CASE("predictions interpolate the training targets") {
    const auto net = oracle::make_net(6, {64, 64}, 3, 9);
    auto p = problem(8, 1, 6, 3, 10);
    p.test_inputs = p.train_inputs;
    p.relative_jitter = 0.0;
    for (const auto& out : {predict_entk(net, p), predict_pntk(net, p)}) {
        CHECK((out.predictions - p.train_targets).cwiseAbs().maxCoeff() <= 1e-6);
        std::vector<std::size_t> labels;
        for (Index i = 0; i < 8; ++i) labels.push_back(static_cast<std::size_t>(i) % 3);
        CHECK(accuracy(out, labels) == 1.0);
    }
}

TEST_CASE("with one output the two regressions coincide") {
    const auto net = oracle::make_net(4, {20}, 1, 11);
    const auto p = problem(6, 4, 4, 1, 12);
    const auto e = predict_entk(net, p);
    const auto q = predict_pntk(net, p);
    CHECK(prediction_diff(e, q, false) == 0.0);
}

TEST_CASE("uncentered regression ignores the network output offset") {
    const auto net = oracle::make_net(3, {10}, 2, 13);
    auto p = problem(5, 2, 3, 2, 14);
    p.center_with_f0 = false;
    const auto out = predict_pntk(net, p);
    CHECK_FALSE(out.centered);
    const auto k = pntk_train_test(net, p.train_inputs, p.test_inputs, PntkMode::sum());
    const SymmetricMatrix train(k.train);
    const auto fit = regress_scalar(train, k.cross, p.train_targets, out.jitter_used);
    CHECK((fit.predictions - out.predictions).norm() <= 1e-12 * out.predictions.norm());
}

TEST_CASE("solutions are invariant to kernel scale and training order") {
    const auto net = oracle::make_net(5, {16}, 3, 15);
    const Matrix xtr = oracle::random_matrix(7, 5, 16);
    const Matrix xte = oracle::random_matrix(3, 5, 17);
    const auto k = entk_train_test(net, xtr, xte);
    const Matrix r = oracle::random_matrix(7, 3, 18);
    const SymmetricMatrix train(k.train);
    const auto base = regress_block(train, k.cross, r, absolute_jitter(train, 1e-8));

    const SymmetricMatrix scaled(5.0 * k.train);
    const auto s = regress_block(scaled, 5.0 * k.cross, r, absolute_jitter(scaled, 1e-8));
    CHECK((s.predictions - base.predictions).norm() <= 1e-9 * base.predictions.norm());

    const std::vector<Index> perm{3, 0, 6, 1, 5, 2, 4};
    Matrix xp(7, 5), rp(7, 3);
    for (Index i = 0; i < 7; ++i) {
        xp.row(i) = xtr.row(perm[static_cast<std::size_t>(i)]);
        rp.row(i) = r.row(perm[static_cast<std::size_t>(i)]);
    }
    const auto kp = entk_train_test(net, xp, xte);
    const SymmetricMatrix trainp(kp.train);
    const auto pm = regress_block(trainp, kp.cross, rp, absolute_jitter(trainp, 1e-8));
    CHECK((pm.predictions - base.predictions).norm() <= 1e-9 * base.predictions.norm());
}

TEST_CASE("argmax breaks ties towards the lowest index") {
    Matrix m(3, 3);
    m << 1, 1, 0,  //
        0, 2, 2,   //
        3, 3, 3;
    CHECK(argmax_rows(m) == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("prediction difference and accuracy by hand") {
    RegressionOutput a, b;
    a.predictions = Matrix::Zero(2, 2);
    b.predictions = Matrix::Zero(2, 2);
    a.predictions << 3, 0, 0, 0;
    b.predictions << 0, 0, 0, 4;
    CHECK(prediction_diff(a, b, false) == doctest::Approx(5.0));
    CHECK(prediction_diff(a, b, true) == doctest::Approx(1.25));
    RegressionOutput z;
    z.predictions = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(prediction_diff(a, z, true), Error);

    RegressionOutput c;
    c.labels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<std::size_t> truth{0, 1, 2, 0, 4, 5, 0, 7, 0, 9};
    CHECK(accuracy(c, truth) == doctest::Approx(0.7));
    CHECK_THROWS_AS(accuracy(c, std::vector<std::size_t>{0, 1}), Error);
}

TEST_CASE("malformed problems are rejected") {
    const auto net = oracle::make_net(3, {8}, 2, 19);
    auto p = problem(4, 2, 3, 2, 20);
    p.train_targets(0, 1) = 1.0;  // two hot entries
    CHECK_THROWS_AS(predict_pntk(net, p), Error);
    auto q = problem(4, 2, 3, 3, 21);
    CHECK_THROWS_AS(predict_entk(net, q), Error);
    auto r = problem(4, 2, 3, 2, 22);
    r.test_inputs = Matrix::Zero(2, 4);
    CHECK_THROWS_AS(predict_entk(net, r), Error);
}

TEST_CASE("accuracy extremes and test-order permutation") {
    RegressionOutput truth;
    truth.predictions = Matrix::Identity(3, 3);
    truth.labels = argmax_rows(truth.predictions);
    CHECK(accuracy(truth, std::vector<std::size_t>{0, 1, 2}) == 1.0);
    RegressionOutput anti;
    anti.predictions.resize(2, 2);
    anti.predictions << 0, 1, 1, 0;
    anti.labels = argmax_rows(anti.predictions);
    CHECK(accuracy(anti, std::vector<std::size_t>{0, 1}) == 0.0);

    const auto net = oracle::make_net(4, {16}, 3, 23);
    auto p = problem(6, 4, 4, 3, 24);
    const auto out = predict_pntk(net, p);
    const std::vector<Index> perm{2, 0, 3, 1};
    Matrix shuffled(4, 4);
    for (Index i = 0; i < 4; ++i) shuffled.row(i) = p.test_inputs.row(perm[static_cast<std::size_t>(i)]);
    p.test_inputs = shuffled;
    const auto again = predict_pntk(net, p);
    for (Index i = 0; i < 4; ++i) {
        const Index src = perm[static_cast<std::size_t>(i)];
        CHECK((again.predictions.row(i) - out.predictions.row(src)).norm() <= 1e-12);
        CHECK(again.labels[static_cast<std::size_t>(i)] == out.labels[static_cast<std::size_t>(src)]);
    }
}
