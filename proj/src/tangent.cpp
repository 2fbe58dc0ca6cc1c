#include "pntk/tangent.hpp"

#include <algorithm>

namespace pntk {

TangentSet::TangentSet(const Network& net, const Matrix& seeds, const Matrix& points)
    : readouts_(seeds.rows()) {
    factors_.resize(static_cast<std::size_t>(points.rows()));
#pragma omp parallel for schedule(dynamic)
    for (Index p = 0; p < points.rows(); ++p) {
        const auto trace = forward(net, points.row(p).transpose());
        factors_[static_cast<std::size_t>(p)] = tangent_factors(net, trace, seeds);
    }
}

void TangentSet::fill_panel(const Network& net, std::size_t begin, std::size_t end,
                            Eigen::Ref<Matrix> panel) const {
    const Index k = readouts_;
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < points(); ++p) {
        materialize(net, factors_[static_cast<std::size_t>(p)], begin, end, panel.middleRows(p * k, k));
    }
}

void accumulate_kernels(const Network& net, std::span<const KernelRequest> requests, std::size_t panel_bytes) {
    std::vector<const TangentSet*> sets;
    const auto slot = [&](const TangentSet* s) {
        auto it = std::find(sets.begin(), sets.end(), s);
        if (it != sets.end()) return static_cast<std::size_t>(it - sets.begin());
        sets.push_back(s);
        return sets.size() - 1;
    };

    struct Bound {
        std::size_t row_slot;
        std::size_t col_slot;
        const KernelRequest* req;
    };
    std::vector<Bound> bound;
    for (const auto& r : requests) {
        if (r.rows == nullptr || r.cols == nullptr || r.out == nullptr) {
            throw Error(ErrorKind::InvalidArgument, "kernel request with null operand");
        }
        if (r.rows->readouts() != r.cols->readouts()) {
            throw Error(ErrorKind::ShapeMismatch, "kernel request mixes readout counts");
        }
        if (r.shape != BlockShape::full && r.rows != r.cols) {
            throw Error(ErrorKind::InvalidArgument, "symmetric/diagonal requests need identical operands");
        }
        const Index k = r.rows->readouts();
        switch (r.shape) {
            case BlockShape::full:
            case BlockShape::symmetric: r.out->setZero(r.rows->rows(), r.cols->rows()); break;
            case BlockShape::diagonal: r.out->setZero(r.rows->rows(), k); break;
        }
        bound.push_back({slot(r.rows), slot(r.cols), &r});
    }
    if (bound.empty()) return;

    Index total_rows = 0;
    for (const auto* s : sets) total_rows += s->rows();
    const std::size_t p = net.param_count();
    const std::size_t budget_cols =
        panel_bytes / (sizeof(double) * static_cast<std::size_t>(std::max<Index>(total_rows, 1)));
    const std::size_t chunk = std::clamp<std::size_t>(budget_cols, 64, std::max<std::size_t>(p, 1));

    std::vector<Matrix> panels;
    for (const auto* s : sets) panels.emplace_back(s->rows(), static_cast<Index>(std::min(chunk, p)));

    for (std::size_t begin = 0; begin < p; begin += chunk) {
        const std::size_t end = std::min(p, begin + chunk);
        const Index w = static_cast<Index>(end - begin);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            sets[i]->fill_panel(net, begin, end, panels[i].leftCols(w));
        }
        for (const auto& b : bound) {
            const auto a = panels[b.row_slot].leftCols(w);
            Matrix& out = *b.req->out;
            switch (b.req->shape) {
                case BlockShape::full:
                    out.noalias() += a * panels[b.col_slot].leftCols(w).transpose();
                    break;
                case BlockShape::symmetric:
                    out.selfadjointView<Eigen::Lower>().rankUpdate(a);
                    break;
                case BlockShape::diagonal: {
                    const Index k = b.req->rows->readouts();
                    for (Index q = 0; q < b.req->rows->points(); ++q) {
                        const auto rows = a.middleRows(q * k, k);
                        out.middleRows(q * k, k).noalias() += rows * rows.transpose();
                    }
                    break;
                }
            }
        }
    }
    for (const auto& b : bound) {
        if (b.req->shape == BlockShape::symmetric) {
            Matrix& out = *b.req->out;
            out.triangularView<Eigen::StrictlyUpper>() = out.transpose().triangularView<Eigen::StrictlyUpper>();
        }
    }
}

}  // namespace pntk
