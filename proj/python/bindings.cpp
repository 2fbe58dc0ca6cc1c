#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pntk/commands.hpp"
#include "pntk/metrics.hpp"
#include "pntk/regress.hpp"

namespace py = pybind11;
using namespace pntk;

namespace {

// Python callers pass readout modes as "sum" or "single_logit:<i>".
PntkMode mode_of(const std::string& s) { return PntkMode::parse(s); }

py::dict regression_dict(const RegressionOutput& out) {
    py::dict d;
    d["predictions"] = out.predictions;
    d["labels"] = out.labels;
    d["kernel_kind"] = to_string(out.kernel_kind);
    d["jitter"] = out.jitter_used;
    d["centered"] = out.centered;
    return d;
}

RegressionProblem problem(const Matrix& x_train, const std::vector<std::size_t>& y_train, std::size_t classes,
                          const Matrix& x_test, bool center, double relative_jitter) {
    RegressionProblem p;
    p.train_inputs = x_train;
    p.train_targets = one_hot(y_train, classes);
    p.test_inputs = x_test;
    p.center_with_f0 = center;
    p.relative_jitter = relative_jitter;
    return p;
}

}  // namespace

PYBIND11_MODULE(_pntk, m) {
    m.doc() = "eNTK / pNTK kernels, kernel regression and resource estimates";
    m.attr("__version__") = tool_version();

    py::register_exception<Error>(m, "PntkError", PyExc_RuntimeError);

    py::class_<Network>(m, "Network")
        .def_property_readonly("depth", &Network::depth)
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("param_count", &Network::param_count)
        .def("weight", [](const Network& n, std::size_t l) { return Matrix(n.weight(l)); })
        .def("forward", [](const Network& n, const Matrix& x) { return forward_batch(n, x); })
        .def("jacobian", [](const Network& n, const Vector& x) { return jacobian(n, x); });

    m.def(
        "init_network",
        [](std::size_t input_dim, std::vector<std::size_t> hidden, std::size_t output_dim,
           const std::string& activation, const std::string& init, std::uint64_t seed) {
            NetworkSpec s;
            s.input_dim = input_dim;
            s.hidden_widths = std::move(hidden);
            s.output_dim = output_dim;
            s.activation = parse_activation(activation);
            s.init = parse_init(init);
            s.seed = seed;
            return init_network(s);
        },
        py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim"), py::arg("activation") = "relu",
        py::arg("init") = "gaussian", py::arg("seed") = 0);

    m.def("entk_block", &entk_block, py::arg("net"), py::arg("x1"), py::arg("x2"));
    m.def(
        "pntk", [](const Network& n, const Vector& a, const Vector& b, const std::string& mode) {
            return pntk::pntk(n, a, b, mode_of(mode));
        },
        py::arg("net"), py::arg("x1"), py::arg("x2"), py::arg("mode") = "sum");
    m.def(
        "entk_matrix", [](const Network& n, const Matrix& x1, const Matrix& x2) { return entk_matrix(n, x1, x2).data; },
        py::arg("net"), py::arg("x1"), py::arg("x2"));
    m.def(
        "pntk_matrix",
        [](const Network& n, const Matrix& x1, const Matrix& x2, const std::string& mode) {
            return pntk_matrix(n, x1, x2, mode_of(mode)).data;
        },
        py::arg("net"), py::arg("x1"), py::arg("x2"), py::arg("mode") = "sum");
    m.def(
        "rel_frobenius_diff",
        [](const Network& n, const Matrix& x) {
            return rel_frobenius_diff(entk_matrix(n, x, x), pntk_matrix(n, x, x));
        },
        py::arg("net"), py::arg("x"), "||pNTK ⊗ I - eNTK||_F / ||eNTK||_F on the Gram of x");

    m.def(
        "predict_entk",
        [](const Network& n, const Matrix& xtr, const std::vector<std::size_t>& ytr, const Matrix& xte, bool center,
           double jitter) {
            return regression_dict(predict_entk(n, problem(xtr, ytr, n.output_dim(), xte, center, jitter)));
        },
        py::arg("net"), py::arg("x_train"), py::arg("y_train"), py::arg("x_test"), py::arg("center") = true,
        py::arg("relative_jitter") = 1e-8);
    m.def(
        "predict_pntk",
        [](const Network& n, const Matrix& xtr, const std::vector<std::size_t>& ytr, const Matrix& xte, bool center,
           double jitter, const std::string& mode) {
            return regression_dict(
                predict_pntk(n, problem(xtr, ytr, n.output_dim(), xte, center, jitter), mode_of(mode)));
        },
        py::arg("net"), py::arg("x_train"), py::arg("y_train"), py::arg("x_test"), py::arg("center") = true,
        py::arg("relative_jitter") = 1e-8, py::arg("mode") = "sum");

    m.def(
        "resource_estimate",
        [](std::uint64_t n, std::uint64_t o, std::uint64_t bytes) {
            const auto e = resource_estimate(n, o, bytes, KernelKind::entk);
            const auto p = resource_estimate(n, o, bytes, KernelKind::pntk);
            py::dict d;
            d["entk_bytes"] = e.kernel_bytes;
            d["entk_jvp"] = e.jvp_count;
            d["pntk_bytes"] = p.kernel_bytes;
            d["pntk_jvp"] = p.jvp_count;
            return d;
        },
        py::arg("n"), py::arg("o"), py::arg("bytes") = 8);

    m.def(
        "synth_clusters",
        [](std::size_t classes, std::size_t per_class, std::size_t dim, double separation, std::uint64_t seed) {
            auto s = synth_clusters(classes, per_class, dim, separation, seed);
            return py::make_tuple(s.inputs, s.labels);
        },
        py::arg("classes"), py::arg("per_class"), py::arg("dim"), py::arg("separation"), py::arg("seed") = 0);
    m.def(
        "load_idx",
        [](const std::filesystem::path& images, const std::filesystem::path& labels) {
            auto s = load_idx(images, labels);
            return py::make_tuple(s.inputs, s.labels);
        },
        py::arg("images"), py::arg("labels"));
}
