#include "pntk/active.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "pntk/regress.hpp"
#include "pntk/tangent.hpp"

namespace pntk {

void ALConfig::validate() const {
    if (per_cycle < 1) throw Error(ErrorKind::InvalidArgument, "per_cycle must be >= 1");
    if (initial_labeled < 1) throw Error(ErrorKind::InvalidArgument, "initial_labeled must be >= 1");
    if (acquisition == Acquisition::lookahead && ref_set_size < 1) {
        throw Error(ErrorKind::InvalidArgument, "look-ahead acquisition needs a non-empty reference set");
    }
    if (!(relative_jitter >= 0.0) || !std::isfinite(relative_jitter)) {
        throw Error(ErrorKind::InvalidArgument, "relative_jitter must be finite and >= 0");
    }
    net.validate();
}

double ALTrace::total_acq_seconds() const {
    double s = 0.0;
    for (const auto& c : cycles) s += c.acq_seconds;
    return s;
}

LookaheadScores lookahead_scores(const LookaheadKernels& k, Index readouts, const Matrix& labeled_residual,
                                 const Matrix& candidate_residual, double jitter) {
    const Index lk = k.ll.rows();
    const Index pk = k.pl.rows();
    const Index rk = k.rl.rows();
    const Index c = labeled_residual.cols();
    if (readouts < 1 || k.ll.cols() != lk || k.pl.cols() != lk || k.rl.cols() != lk || k.rp.rows() != rk ||
        k.rp.cols() != pk || k.pp_blocks.rows() != pk || k.pp_blocks.cols() != readouts ||
        labeled_residual.rows() != lk || candidate_residual.rows() != pk || candidate_residual.cols() != c ||
        pk % readouts != 0) {
        throw Error(ErrorKind::ShapeMismatch, "look-ahead kernels and residuals do not line up");
    }

    // One factorization of the labeled Gram serves both the fit and U.
    Matrix rhs(lk, c + pk);
    rhs << labeled_residual, k.pl.transpose();
    const auto sol = solve_psd(SymmetricMatrix(k.ll), rhs, jitter);
    const double lambda = sol.jitter;
    const auto alpha = sol.x.leftCols(c);
    const auto u = sol.x.rightCols(pk);
    const Matrix g = k.rp - k.rl * u;
    const Matrix e_all = candidate_residual - k.pl * alpha;

    const Index p_count = pk / readouts;
    LookaheadScores out;
    out.scores.resize(p_count);
    out.escalated.assign(static_cast<std::size_t>(p_count), false);
    out.jitter = lambda;
    const double floor = std::max(lambda, 1e-12 * k.pp_blocks.cwiseAbs().maxCoeff());
    std::vector<char> escalated(static_cast<std::size_t>(p_count), 0);

#pragma omp parallel for schedule(static)
    for (Index p = 0; p < p_count; ++p) {
        const Index o = p * readouts;
        Matrix s = k.pp_blocks.middleRows(o, readouts) - k.pl.middleRows(o, readouts) * u.middleCols(o, readouts);
        s.diagonal().array() += lambda;
        s = 0.5 * (s + s.transpose()).eval();
        Eigen::LLT<Matrix> llt(s);
        const auto failed = [&] {
            return llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0);
        };
        double extra = floor;
        for (int attempt = 0; attempt < 40 && failed(); ++attempt, extra *= 10.0) {
            escalated[static_cast<std::size_t>(p)] = 1;
            Matrix bumped = s;
            bumped.diagonal().array() += extra;
            llt.compute(bumped);
        }
        if (failed()) {
            out.scores(p) = 0.0;
            continue;
        }
        const Matrix step = llt.solve(e_all.middleRows(o, readouts));
        out.scores(p) = (g.middleCols(o, readouts) * step).norm();
    }
    for (Index p = 0; p < p_count; ++p) out.escalated[static_cast<std::size_t>(p)] = escalated[static_cast<std::size_t>(p)];
    return out;
}

namespace {

// Residual matrix in the (points*k) x c layout used by the scoring core.
Matrix residual_layout(const Matrix& r, Index readouts) {
    if (readouts == 1) return r;
    return Eigen::Map<const Matrix>(r.data(), r.size(), 1);
}

Matrix pseudo_residual(const Matrix& outputs, bool center) {
    Matrix y = Matrix::Zero(outputs.rows(), outputs.cols());
    const auto labels = argmax_rows(outputs);
    for (Index i = 0; i < outputs.rows(); ++i) y(i, static_cast<Index>(labels[static_cast<std::size_t>(i)])) = 1.0;
    return center ? Matrix(y - outputs) : y;
}

}  // namespace

LookaheadScores lookahead_scores(const Network& net, const LookaheadInputs& in, KernelKind kernel,
                                 const PntkMode& mode, bool center_with_f0, double relative_jitter,
                                 const KernelOptions& opts) {
    if (!in.labeled || !in.targets || !in.pool || !in.ref) {
        throw Error(ErrorKind::InvalidArgument, "look-ahead inputs are incomplete");
    }
    if (in.targets->rows() != in.labeled->rows() ||
        static_cast<std::size_t>(in.targets->cols()) != net.output_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "labeled targets must be L x O");
    }
    const Index o = static_cast<Index>(net.output_dim());
    const Matrix seeds = kernel == KernelKind::entk ? Matrix(Matrix::Identity(o, o))
                                                    : Matrix(readout_vector(mode, net.output_dim()).transpose());
    const Index k = seeds.rows();
    const Index l = in.labeled->rows(), p = in.pool->rows(), r = in.ref->rows();
    const std::uint64_t need = kernel_result_bytes(l, l, k) + kernel_result_bytes(p, l, k) * 2 +
                               kernel_result_bytes(r, l, k) + kernel_result_bytes(r, p, k) * 2 +
                               static_cast<std::uint64_t>(p * k * k) * sizeof(double) + opts.panel_bytes;
    if (need > opts.memory_cap) {
        throw MemoryCapError("look-ahead kernels exceed the memory cap", need, opts.memory_cap);
    }

    LookaheadKernels kk;
    {
        const TangentSet ls(net, seeds, *in.labeled);
        const TangentSet ps(net, seeds, *in.pool);
        const TangentSet rs(net, seeds, *in.ref);
        const KernelRequest reqs[] = {
            {&ls, &ls, BlockShape::symmetric, &kk.ll}, {&ps, &ls, BlockShape::full, &kk.pl},
            {&rs, &ls, BlockShape::full, &kk.rl},      {&rs, &ps, BlockShape::full, &kk.rp},
            {&ps, &ps, BlockShape::diagonal, &kk.pp_blocks},
        };
        accumulate_kernels(net, reqs, opts.panel_bytes);
    }

    Matrix labeled_r = *in.targets;
    if (center_with_f0) labeled_r -= forward_batch(net, *in.labeled);
    const Matrix cand_r = pseudo_residual(forward_batch(net, *in.pool), center_with_f0);
    const double jitter = relative_jitter * kk.ll.trace() / static_cast<double>(kk.ll.rows());
    return lookahead_scores(kk, k, residual_layout(labeled_r, k), residual_layout(cand_r, k), jitter);
}

ALTrace run_al(const ALConfig& cfg, const LabeledSet& train_side, const LabeledSet& test) {
    cfg.validate();
    train_side.validate();
    test.validate();
    if (static_cast<std::size_t>(train_side.dim()) != cfg.net.input_dim ||
        static_cast<std::size_t>(test.dim()) != cfg.net.input_dim) {
        throw Error(ErrorKind::ShapeMismatch, "dataset dimension does not match the network input");
    }
    if (train_side.num_classes != cfg.net.output_dim) {
        throw Error(ErrorKind::ShapeMismatch, "dataset class count does not match the network output");
    }
    const auto n = static_cast<std::size_t>(train_side.size());
    if (n <= cfg.initial_labeled) {
        throw Error(ErrorKind::InsufficientData, "training side has no points left for a pool");
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> labeled(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.initial_labeled));
    const std::size_t pool_n = std::min(cfg.candidate_pool_cap, n - cfg.initial_labeled);
    std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(cfg.initial_labeled),
                                  order.begin() + static_cast<std::ptrdiff_t>(cfg.initial_labeled + pool_n));
    std::vector<std::size_t> ref_idx = pool;
    std::shuffle(ref_idx.begin(), ref_idx.end(), rng);
    ref_idx.resize(std::min(cfg.ref_set_size, ref_idx.size()));
    const Matrix ref = train_side.subset(ref_idx).inputs;

    const auto train = [&](const Network& start, std::size_t epochs, std::uint64_t salt) {
        TrainConfig tc = cfg.train;
        tc.epochs = epochs;
        tc.seed = cfg.seed ^ (0x9e3779b97f4a7c15ull * (salt + 1));
        tc.checkpoints.clear();
        return sgd_train(start, train_side.subset(labeled), tc).net;
    };

    Network net = train(init_network(cfg.net), cfg.initial_epochs, 0);
    ALTrace trace;
    trace.kernel_label = cfg.acquisition == Acquisition::random ? "random" : to_string(cfg.kernel);
    trace.cycles.push_back({0, labeled.size(), classification_accuracy(net, test), 0.0, {}, 0});

    for (std::size_t cycle = 1; cycle <= cfg.cycles; ++cycle) {
        if (pool.empty()) {
            trace.pool_exhausted = true;
            break;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Vector scores;
        std::size_t escalated = 0;
        if (cfg.acquisition == Acquisition::random) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            scores.resize(static_cast<Index>(pool.size()));
            for (Index i = 0; i < scores.size(); ++i) scores(i) = u(rng);
        } else {
            const LabeledSet lab = train_side.subset(labeled);
            const Matrix targets = one_hot(lab.labels, lab.num_classes);
            const Matrix pool_x = train_side.subset(pool).inputs;
            const auto res = lookahead_scores(net, {&lab.inputs, &targets, &pool_x, &ref}, cfg.kernel, cfg.mode,
                                              cfg.center_with_f0, cfg.relative_jitter, cfg.kernel_opts);
            scores = res.scores;
            escalated = static_cast<std::size_t>(std::count(res.escalated.begin(), res.escalated.end(), true));
        }
        std::vector<std::size_t> rank(pool.size());
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            return scores(static_cast<Index>(a)) > scores(static_cast<Index>(b));
        });
        const double acq = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::size_t take = std::min(cfg.per_cycle, pool.size());
        rank.resize(take);
        std::vector<std::size_t> selected;
        for (auto r : rank) selected.push_back(pool[r]);
        std::sort(rank.begin(), rank.end(), std::greater<>());
        for (auto r : rank) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(r));
        labeled.insert(labeled.end(), selected.begin(), selected.end());
        if (take < cfg.per_cycle) trace.pool_exhausted = true;

        net = train(cfg.warm_start ? net : init_network(cfg.net), cfg.retrain_epochs, cycle);
        trace.cycles.push_back(
            {cycle, labeled.size(), classification_accuracy(net, test), acq, std::move(selected), escalated});
    }
    return trace;
}

void write_trace_csv(std::ostream& out, const ALTrace& trace) {
    out << "cycle,labeled_count,accuracy,acq_seconds,kernel_kind\n";
    for (const auto& c : trace.cycles) {
        out << c.cycle << ',' << c.labeled_count << ',' << c.accuracy << ',' << c.acq_seconds << ','
            << trace.kernel_label << '\n';
    }
}

}  // namespace pntk
