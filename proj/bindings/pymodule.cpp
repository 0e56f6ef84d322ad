#include "idwattn/attention.hpp"
#include "idwattn/augment.hpp"
#include "idwattn/data.hpp"
#include "idwattn/error.hpp"
#include "idwattn/model.hpp"
#include "idwattn/optim.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace idw;

namespace {

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix matrix_from_numpy(const NpArray& arr) {
    if (arr.ndim() == 1) {
        Matrix m(1, std::size_t(arr.shape(0)));
        std::memcpy(m.data(), arr.data(), m.size() * sizeof(double));
        return m;
    }
    if (arr.ndim() != 2) throw ShapeError("expected a 1-D or 2-D array");
    Matrix m(std::size_t(arr.shape(0)), std::size_t(arr.shape(1)));
    std::memcpy(m.data(), arr.data(), m.size() * sizeof(double));
    return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
    py::array_t<double> arr({m.rows(), m.cols()});
    std::memcpy(arr.mutable_data(), m.data(), m.size() * sizeof(double));
    return arr;
}

std::vector<double> vector_from_numpy(const NpArray& arr) {
    if (arr.ndim() != 1) throw ShapeError("expected a 1-D array");
    return {arr.data(), arr.data() + arr.shape(0)};
}

Dataset dataset_from_parts(const NpArray& x, const std::vector<int>& y,
                           std::size_t num_classes) {
    Dataset ds;
    ds.x = matrix_from_numpy(x);
    ds.y = y;
    ds.num_classes = num_classes;
    ds.validate();
    return ds;
}

TrainConfig config_from_kwargs(std::size_t batch_size, double lr, std::size_t epochs,
                               std::uint64_t seed, double beta1, double beta2, double adam_eps,
                               bool shuffle) {
    TrainConfig cfg;
    cfg.batch_size = batch_size;
    cfg.lr_max = lr;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.adam_eps = adam_eps;
    cfg.shuffle = shuffle;
    cfg.validate();
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Prototype networks with distance-based attention: score functions, "
              "training, and closed-form low-impact editing.";

    py::register_exception<Error>(m, "Error");

    py::class_<ScoreKind>(m, "ScoreKind")
        .def_static("scaled_dot", &ScoreKind::scaled_dot)
        .def_static("neg_dist", &ScoreKind::neg_dist)
        .def_static("gauss_dist", &ScoreKind::gauss_dist, py::arg("sigma") = 1.0)
        .def_static("inv_dist", &ScoreKind::inv_dist, py::arg("p") = 2.0, py::arg("eps") = 1e-3)
        .def_static("neglog_dist", &ScoreKind::neglog_dist, py::arg("p") = 2.0,
                    py::arg("eps") = 1e-3)
        .def_readonly("p", &ScoreKind::p)
        .def_readonly("eps", &ScoreKind::eps)
        .def_readonly("sigma", &ScoreKind::sigma)
        .def_property_readonly("name", [](const ScoreKind& k) { return std::string(k.name()); })
        .def("__repr__", [](const ScoreKind& k) {
            return "ScoreKind(" + std::string(k.name()) + ", p=" + std::to_string(k.p) +
                   ", eps=" + std::to_string(k.eps) + ", sigma=" + std::to_string(k.sigma) + ")";
        });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&dataset_from_parts), py::arg("x"), py::arg("y"), py::arg("num_classes"))
        .def_property_readonly("x", [](const Dataset& ds) { return matrix_to_numpy(ds.x); })
        .def_property_readonly("y", [](const Dataset& ds) { return ds.y; })
        .def_readonly("num_classes", &Dataset::num_classes)
        .def("__len__", &Dataset::size);

    py::class_<EpochRecord>(m, "EpochRecord")
        .def_readonly("epoch", &EpochRecord::epoch)
        .def_readonly("lr", &EpochRecord::lr)
        .def_readonly("loss", &EpochRecord::loss)
        .def_readonly("train_acc", &EpochRecord::train_acc)
        .def_readonly("test_acc", &EpochRecord::test_acc);

    py::class_<TrainLog>(m, "TrainLog")
        .def_readonly("epochs", &TrainLog::epochs)
        .def("csv", &TrainLog::csv);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init(&config_from_kwargs), py::arg("batch_size") = 10, py::arg("lr") = 0.01,
             py::arg("epochs") = 25, py::arg("seed") = 0, py::arg("beta1") = 0.9,
             py::arg("beta2") = 0.999, py::arg("adam_eps") = 1e-8, py::arg("shuffle") = true)
        .def_readonly("batch_size", &TrainConfig::batch_size)
        .def_readonly("lr", &TrainConfig::lr_max)
        .def_readonly("epochs", &TrainConfig::epochs)
        .def_readonly("seed", &TrainConfig::seed);

    py::class_<AugmentResult>(m, "AugmentResult")
        .def_readonly("applied", &AugmentResult::applied)
        .def_readonly("eta", &AugmentResult::eta)
        .def_readonly("margin", &AugmentResult::margin)
        .def_readonly("pre_class", &AugmentResult::pre_class)
        .def_readonly("post_class", &AugmentResult::post_class);

    py::class_<PrototypeNet>(m, "PrototypeNet")
        .def_property_readonly("keys",
                               [](const PrototypeNet& n) { return matrix_to_numpy(n.keys); })
        .def_property_readonly("values",
                               [](const PrototypeNet& n) { return matrix_to_numpy(n.values); })
        .def_property_readonly("score_kind", [](const PrototypeNet& n) { return n.kind; })
        .def_property_readonly("prototypes", &PrototypeNet::prototypes)
        .def("forward",
             [](const PrototypeNet& n, const NpArray& x) {
                 return matrix_to_numpy(n.forward(matrix_from_numpy(x)));
             })
        .def("attention_weights",
             [](const PrototypeNet& n, const NpArray& x) {
                 return matrix_to_numpy(
                     attend(n.kind, matrix_from_numpy(x), n.keys, n.values).weights);
             })
        .def("save",
             [](const PrototypeNet& n, const std::string& path) { save_model(path, n); });

    py::class_<FcReluNet>(m, "FcReluNet")
        .def_property_readonly("w1", [](const FcReluNet& n) { return matrix_to_numpy(n.w1); })
        .def_property_readonly("w2", [](const FcReluNet& n) { return matrix_to_numpy(n.w2); })
        .def("forward",
             [](const FcReluNet& n, const NpArray& x) {
                 return matrix_to_numpy(n.forward(matrix_from_numpy(x)));
             })
        .def("save", [](const FcReluNet& n, const std::string& path) { save_model(path, n); });

    m.def(
        "pairwise_sq_dist",
        [](const NpArray& q, const NpArray& k) {
            return matrix_to_numpy(pairwise_sq_dist(matrix_from_numpy(q), matrix_from_numpy(k)));
        },
        py::arg("q"), py::arg("k"));
    m.def(
        "softmax_rows",
        [](const NpArray& scores) {
            return matrix_to_numpy(softmax_rows(matrix_from_numpy(scores)));
        },
        py::arg("scores"));
    m.def(
        "idw_weights",
        [](const NpArray& sq_dist, double p, double eps) {
            return matrix_to_numpy(idw_weights(matrix_from_numpy(sq_dist), p, eps));
        },
        py::arg("sq_dist"), py::arg("p") = 2.0, py::arg("eps") = 1e-3);
    m.def(
        "voronoi_limit",
        [](const NpArray& sq_dist, double p, double eps) {
            return matrix_to_numpy(voronoi_limit(matrix_from_numpy(sq_dist), p, eps));
        },
        py::arg("sq_dist"), py::arg("p") = 64.0, py::arg("eps") = 1e-9);
    m.def(
        "score",
        [](const ScoreKind& kind, const NpArray& basis, std::size_t dim) {
            return matrix_to_numpy(score(kind, matrix_from_numpy(basis), dim));
        },
        py::arg("kind"), py::arg("basis"), py::arg("dim"));
    m.def(
        "attend",
        [](const ScoreKind& kind, const NpArray& q, const NpArray& keys, const NpArray& values) {
            const AttentionOut out = attend(kind, matrix_from_numpy(q), matrix_from_numpy(keys),
                                            matrix_from_numpy(values));
            return py::make_tuple(matrix_to_numpy(out.weights), matrix_to_numpy(out.output));
        },
        py::arg("kind"), py::arg("q"), py::arg("keys"), py::arg("values"),
        "Returns (weights, output).");

    m.def(
        "gen_moons",
        [](std::size_t n_train, std::size_t n_test, double noise_std, std::uint64_t seed) {
            return gen_moons({n_train, n_test, noise_std, seed});
        },
        py::arg("n_train") = 100, py::arg("n_test") = 20, py::arg("noise_std") = 0.1,
        py::arg("seed") = 0);
    m.def("load_mnist", &load_mnist, py::arg("dir"), py::call_guard<py::gil_scoped_release>());
    m.def("subset", &subset, py::arg("dataset"), py::arg("n"), py::arg("seed"));

    m.def(
        "init_prototype_net",
        [](const NpArray& train_x, std::size_t classes, std::size_t prototypes,
           const ScoreKind& kind, std::uint64_t seed) {
            Rng rng = Rng(seed).stream("key-init");
            return init_prototype_net(matrix_from_numpy(train_x), classes, prototypes, kind, rng);
        },
        py::arg("train_x"), py::arg("classes"), py::arg("prototypes"), py::arg("kind"),
        py::arg("seed") = 0);
    m.def(
        "init_fc_relu_net",
        [](std::size_t dim, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
            Rng rng = Rng(seed).stream("key-init");
            return init_fc_relu_net(dim, hidden, classes, rng);
        },
        py::arg("dim"), py::arg("hidden"), py::arg("classes"), py::arg("seed") = 0);

    m.def(
        "train",
        [](PrototypeNet& net, const Dataset& train_set, const Dataset& test_set,
           const TrainConfig& cfg) { return train(net, train_set, test_set, cfg); },
        py::arg("net"), py::arg("train_set"), py::arg("test_set"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "train",
        [](FcReluNet& net, const Dataset& train_set, const Dataset& test_set,
           const TrainConfig& cfg) { return train(net, train_set, test_set, cfg); },
        py::arg("net"), py::arg("train_set"), py::arg("test_set"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "evaluate", [](const PrototypeNet& net, const Dataset& ds) { return evaluate(net, ds); },
        py::arg("net"), py::arg("dataset"));
    m.def(
        "evaluate", [](const FcReluNet& net, const Dataset& ds) { return evaluate(net, ds); },
        py::arg("net"), py::arg("dataset"));

    m.def(
        "cross_entropy",
        [](const NpArray& logits, const std::vector<int>& labels) {
            auto [loss, grad] = cross_entropy(matrix_from_numpy(logits), labels);
            return py::make_tuple(loss, matrix_to_numpy(grad));
        },
        py::arg("logits"), py::arg("labels"), "Returns (loss, grad_logits).");
    m.def("cosine_lr", &cosine_lr, py::arg("step"), py::arg("total"), py::arg("lr_max"));

    m.def(
        "sigma_weights",
        [](const NpArray& dists, double p, double eps) {
            return sigma_weights(vector_from_numpy(dists), p, eps);
        },
        py::arg("dists"), py::arg("p") = 2.0, py::arg("eps") = 1e-3);
    m.def(
        "compute_eta",
        [](const NpArray& dists, const NpArray& values, int target_class, double p, double eps) {
            const EtaResult r = compute_eta(vector_from_numpy(dists), matrix_from_numpy(values),
                                            target_class, p, eps);
            return py::make_tuple(r.eta, r.already_target, r.pre_class);
        },
        py::arg("dists"), py::arg("values"), py::arg("target_class"), py::arg("p") = 2.0,
        py::arg("eps") = 1e-3, "Returns (eta, already_target, pre_class).");
    m.def(
        "inject",
        [](const PrototypeNet& net, const NpArray& q, int target_class, double margin) {
            AugmentRequest req;
            req.input = vector_from_numpy(q);
            req.target_class = target_class;
            req.margin = margin;
            return inject(net, req);
        },
        py::arg("net"), py::arg("q"), py::arg("target_class"), py::arg("margin") = -1.0,
        "Returns (grown_net, result).");

    m.def(
        "load_model",
        [](const std::string& path) -> py::object {
            LoadedModel loaded = load_model(path);
            py::dict meta;
            for (const auto& [k, v] : loaded.meta.entries) meta[py::str(k)] = v;
            py::list ledger;
            for (const auto& a : loaded.meta.augments)
                ledger.append(
                    py::make_tuple(a.target_class, a.eta, a.margin, a.pre_class, a.post_class));
            py::object net = std::visit(
                [](auto n) -> py::object { return py::cast(std::move(n)); }, std::move(loaded.net));
            return py::make_tuple(net, meta, ledger);
        },
        py::arg("path"), "Returns (net, meta, augment_ledger).");

    m.attr("__version__") = "0.1.0";
}
