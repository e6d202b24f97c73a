// Python bindings for the core operations: metrics, standardization,
// training, prediction, ensembling, and checkpoint I/O.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tqe/eval.hpp"
#include "tqe/strategies.hpp"
#include "tqe/trainer.hpp"

namespace py = pybind11;
using namespace tqe;

namespace {

std::vector<QEPair> pairs_from(const std::vector<std::tuple<std::string, std::string, double>>& rows) {
    std::vector<QEPair> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        QEPair p;
        p.index = static_cast<std::int64_t>(i);
        p.original = std::get<0>(rows[i]);
        p.translation = std::get<1>(rows[i]);
        p.z_score = std::get<2>(rows[i]);
        out.push_back(p);
    }
    return out;
}

// Owns the model plus the vocabulary it was trained with.
struct PyModel {
    QEModel model;
    Vocab vocab;

    double predict_one(const std::string& original, const std::string& translation) const {
        QEPair p;
        p.original = original;
        p.translation = translation;
        return predict(model, p, vocab);
    }

    std::vector<double> predict_many(
        const std::vector<std::pair<std::string, std::string>>& rows) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& [o, t] : rows) out.push_back(predict_one(o, t));
        return out;
    }

    void save(const std::string& path) const {
        Checkpoint ckpt = to_checkpoint(model);
        embed_vocab(ckpt, vocab);
        save_checkpoint(ckpt, path);
    }

    static PyModel load(const std::string& path) {
        const Checkpoint ckpt = load_checkpoint(path);
        return PyModel{model_from_checkpoint(ckpt), vocab_from_checkpoint(ckpt)};
    }
};

PyModel train_model(const std::vector<std::tuple<std::string, std::string, double>>& rows,
                    const std::string& architecture, std::size_t d_model, std::size_t n_layers,
                    std::size_t n_heads, std::size_t d_ff, std::size_t max_len,
                    std::size_t vocab_size, std::size_t epochs, std::size_t batch_size,
                    double lr_scale, std::uint64_t seed) {
    const auto data = pairs_from(rows);
    std::vector<std::string> texts;
    for (const auto& p : data) {
        texts.push_back(p.original);
        texts.push_back(p.translation);
    }
    PyModel out;
    out.vocab = build_vocab(texts, vocab_size);

    EncoderConfig ecfg;
    ecfg.vocab_size = out.vocab.size();
    ecfg.d_model = d_model;
    ecfg.n_layers = n_layers;
    ecfg.n_heads = n_heads;
    ecfg.d_ff = d_ff;
    ecfg.max_len = max_len;
    ecfg.dropout_rate = 0.0;
    ecfg.seed = seed;
    if (architecture == "mono")
        out.model = make_mono(ecfg);
    else if (architecture == "siamese")
        out.model = make_siamese(ecfg, true);
    else
        throw InvalidConfig("architecture must be mono or siamese");

    TrainingConfig tcfg;
    tcfg.epochs = epochs;
    tcfg.batch_size = batch_size;
    tcfg.lr_scale = lr_scale;
    tcfg.eval_every_steps = 10;
    tcfg.seed = seed;
    train(out.model, data, out.vocab, tcfg, nullptr);
    return out;
}

}  // namespace

PYBIND11_MODULE(_tqe, m) {
    m.doc() = "sentence-level translation quality estimation";

    py::register_exception<Error>(m, "TqeError");

    m.def("pearson", &pearson, py::arg("x"), py::arg("y"));
    m.def("rmse", &rmse, py::arg("preds"), py::arg("golds"));
    m.def("mae", &mae, py::arg("preds"), py::arg("golds"));
    m.def("mse", &mse_loss, py::arg("preds"), py::arg("golds"));
    m.def("zscore", &zscore_standardize, py::arg("scores"));

    m.def(
        "tokenize_ids",
        [](const std::string& text,
           const std::vector<std::tuple<std::string, std::string, double>>& rows,
           std::size_t vocab_size) {
            std::vector<std::string> texts;
            for (const auto& r : rows) {
                texts.push_back(std::get<0>(r));
                texts.push_back(std::get<1>(r));
            }
            return tokenize(text, build_vocab(texts, vocab_size));
        },
        py::arg("text"), py::arg("rows"), py::arg("vocab_size") = 2000,
        "token ids of `text` under a vocabulary built from `rows`");

    m.def(
        "ensemble",
        [](const std::vector<double>& a, const std::vector<double>& b, double weight_a) {
            std::vector<Prediction> pa, pb;
            for (std::size_t i = 0; i < a.size(); ++i)
                pa.push_back({static_cast<std::int64_t>(i), a[i]});
            for (std::size_t i = 0; i < b.size(); ++i)
                pb.push_back({static_cast<std::int64_t>(i), b[i]});
            const auto blended = ensemble_predict(pa, pb, {weight_a, 1.0 - weight_a});
            std::vector<double> out;
            for (const auto& p : blended) out.push_back(p.score);
            return out;
        },
        py::arg("a"), py::arg("b"), py::arg("weight_a") = 0.8);

    m.def(
        "augment",
        [](const std::vector<std::tuple<std::string, std::string, double>>& rows,
           const std::vector<std::pair<std::string, std::string>>& corpus, std::size_t n,
           std::uint64_t seed) {
            std::vector<ParallelPair> pc;
            for (const auto& [s, t] : corpus) pc.push_back({s, t});
            AugmentPolicy policy;
            policy.n_pairs = n;
            policy.seed = seed;
            const auto out = augment_dataset(pairs_from(rows), pc, policy);
            std::vector<std::tuple<std::string, std::string, double>> back;
            for (const auto& p : out) back.emplace_back(p.original, p.translation, p.z_score);
            return back;
        },
        py::arg("rows"), py::arg("corpus"), py::arg("n") = 2000, py::arg("seed") = 777);

    py::class_<PyModel>(m, "Model")
        .def_static("load", &PyModel::load, py::arg("path"))
        .def("save", &PyModel::save, py::arg("path"))
        .def("predict", &PyModel::predict_one, py::arg("original"), py::arg("translation"))
        .def("predict_many", &PyModel::predict_many, py::arg("rows"));

    m.def("train", &train_model, py::arg("rows"), py::arg("architecture") = "mono",
          py::arg("d_model") = 16, py::arg("n_layers") = 1, py::arg("n_heads") = 2,
          py::arg("d_ff") = 32, py::arg("max_len") = 32, py::arg("vocab_size") = 2000,
          py::arg("epochs") = 1, py::arg("batch_size") = 8, py::arg("lr_scale") = 10.0,
          py::arg("seed") = 42, "train a model on (original, translation, z_score) rows");
}
