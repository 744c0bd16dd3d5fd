// SPDX-License-Identifier: Apache-2.0
// Python bindings. Runs are {query_id: [(doc_id, score), ...]}, qrels are
// {query_id: {doc_id: grade}}; embeddings cross as float32 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xmr/answers.hpp"
#include "xmr/config.hpp"
#include "xmr/corpus.hpp"
#include "xmr/embedstore.hpp"
#include "xmr/error.hpp"
#include "xmr/evalir.hpp"
#include "xmr/fusion.hpp"
#include "xmr/search.hpp"
#include "xmr/train.hpp"
#include "xmr/trec.hpp"

namespace py = pybind11;
using namespace xmr;

namespace {

using PyRun = std::map<std::string, std::vector<std::pair<std::string, double>>>;
using PyQrels = std::map<std::string, std::map<std::string, int>>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

PyRun to_py(const RetrievalRun& run) {
    PyRun out;
    for (const auto& [qid, list] : run.queries) {
        auto& dst = out[qid];
        for (const auto& d : list) dst.emplace_back(d.doc_id, d.score);
    }
    return out;
}

RetrievalRun from_py(const PyRun& run, const std::string& tag = "xmr") {
    RetrievalRun out;
    out.tag = tag;
    for (const auto& [qid, list] : run) {
        auto& dst = out.queries[qid];
        for (const auto& [doc, score] : list) dst.push_back({doc, score});
    }
    return out;
}

Qrels qrels_from_py(const PyQrels& q) {
    Qrels out;
    for (const auto& [qid, docs] : q)
        for (const auto& [doc, grade] : docs) out.add(qid, doc, grade);
    return out;
}

PyQrels qrels_to_py(const Qrels& q) {
    PyQrels out;
    for (const auto& [qid, docs] : q.queries()) out[qid] = docs;
    return out;
}

ChannelRuns runs_from_py(const std::map<std::string, PyRun>& runs) {
    ChannelRuns out;
    for (const auto& [ch, r] : runs) out[ch] = from_py(r, ch);
    return out;
}

EmbeddingMatrix make_matrix(const std::string& role, std::vector<std::string> ids, const FloatArray& data) {
    if (data.ndim() != 2) throw validation_error("embedding data must be a 2-D array");
    const auto rows = static_cast<std::size_t>(data.shape(0));
    const auto dim = static_cast<std::size_t>(data.shape(1));
    std::vector<float> values(data.data(), data.data() + rows * dim);
    return {parse_channel_role(role), std::move(ids), std::move(values), dim};
}

py::array_t<float> matrix_array(const EmbeddingMatrix& m) {
    py::array_t<float> out({static_cast<py::ssize_t>(m.count()), static_cast<py::ssize_t>(m.dim())});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

KeyValues kv_from_py(const std::map<std::string, py::object>& config) {
    KeyValues kv;
    for (const auto& [key, value] : config) {
        if (py::isinstance<py::bool_>(value)) kv[key] = value.cast<bool>() ? "true" : "false";
        else kv[key] = py::str(value).cast<std::string>();
    }
    return kv;
}

py::dict checkpoint_dict(const Checkpoint& c) {
    py::dict d;
    d["strategy"] = std::string(to_string(c.strategy));
    d["step"] = c.step;
    d["epoch"] = c.epoch;
    d["val_mrr"] = c.val_mrr;
    d["alpha_image"] = c.params.alpha_image;
    d["alpha_cross"] = c.params.alpha_cross;
    d["tau"] = c.params.tau;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multimodal entity retrieval: exact search, channel fusion, adapter training and evaluation.";
    m.attr("__version__") = XMR_VERSION;

    static py::exception<Error> error_type(m, "XmrError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::handle(error_type)(std::string(to_string(e.category())) + ": " + e.what());
            err.attr("category") = std::string(to_string(e.category()));
            PyErr_SetObject(error_type.ptr(), err.ptr());
        }
    });

    // Embeddings
    py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
        .def(py::init(&make_matrix), py::arg("role"), py::arg("ids"), py::arg("data"))
        .def_property_readonly("role", [](const EmbeddingMatrix& e) { return std::string(to_string(e.role())); })
        .def_property_readonly("dim", &EmbeddingMatrix::dim)
        .def_property_readonly("count", &EmbeddingMatrix::count)
        .def_property_readonly("normalized", &EmbeddingMatrix::normalized)
        .def_property_readonly("ids", &EmbeddingMatrix::ids)
        .def("to_numpy", &matrix_array, "Copy of the rows as a (count, dim) float32 array.")
        .def("__len__", &EmbeddingMatrix::count)
        .def("__repr__", [](const EmbeddingMatrix& e) {
            return "EmbeddingMatrix(role=" + std::string(to_string(e.role())) + ", count=" +
                   std::to_string(e.count()) + ", dim=" + std::to_string(e.dim()) + ")";
        });
    m.def("read_embeddings", &read_embeddings, py::arg("path"));
    m.def("write_embeddings", &write_embeddings, py::arg("matrix"), py::arg("path"));
    m.def("l2_normalize", &l2_normalize, py::arg("matrix"));

    // Search
    m.def(
        "topk",
        [](const EmbeddingMatrix& q, const EmbeddingMatrix& c, std::size_t k, const std::string& channel,
           std::size_t threads, bool require_normalized) {
            py::gil_scoped_release release;
            return to_py(to_run(topk(q, c, k, parse_channel(channel), {threads, require_normalized}), channel));
        },
        py::arg("queries"), py::arg("corpus"), py::arg("k") = 100, py::arg("channel") = "mono",
        py::arg("threads") = 1, py::arg("require_normalized") = true);

    // Runs and qrels
    m.def(
        "read_run", [](const std::filesystem::path& p) { return to_py(read_trec_run(p)); }, py::arg("path"));
    m.def(
        "write_run", [](const PyRun& run, const std::filesystem::path& p, const std::string& tag) {
            write_trec_run(from_py(run, tag), p);
        },
        py::arg("run"), py::arg("path"), py::arg("tag") = "xmr");
    m.def(
        "read_qrels", [](const std::filesystem::path& p) { return qrels_to_py(read_qrels(p)); }, py::arg("path"));
    m.def(
        "write_qrels", [](const PyQrels& q, const std::filesystem::path& p) { write_qrels(qrels_from_py(q), p); },
        py::arg("qrels"), py::arg("path"));

    // Fusion
    m.def(
        "fuse",
        [](const std::map<std::string, PyRun>& runs, const std::map<std::string, double>& weights,
           const std::string& normalization, std::size_t pool_k, std::size_t k) {
            return to_py(fuse(runs_from_py(runs), {weights, parse_normalization(normalization), pool_k}, k));
        },
        py::arg("runs"), py::arg("weights"), py::arg("normalization") = "none", py::arg("pool_k") = 100,
        py::arg("k") = 0);
    m.def(
        "grid_search_weights",
        [](const std::map<std::string, PyRun>& runs, const PyQrels& qrels, double step, const std::string& metric,
           const std::string& normalization, std::size_t pool_k, std::size_t threads) {
            GridSearchOptions o{step, MetricSpec::parse(metric), parse_normalization(normalization), pool_k, threads};
            const auto r = grid_search_weights(runs_from_py(runs), qrels_from_py(qrels), o);
            py::list evaluated;
            for (const auto& p : r.evaluated) evaluated.append(py::make_tuple(p.weights, p.metric));
            py::dict d;
            d["channels"] = r.channels;
            d["weights"] = r.weights;
            d["metric"] = r.metric;
            d["evaluated"] = evaluated;
            return d;
        },
        py::arg("runs"), py::arg("qrels"), py::arg("step") = 0.05, py::arg("metric") = "mrr@100",
        py::arg("normalization") = "none", py::arg("pool_k") = 100, py::arg("threads") = 1);

    // IR evaluation
    m.def(
        "evaluate",
        [](const PyRun& run, const PyQrels& qrels, const std::string& metric) {
            const auto r = evaluate(from_py(run), qrels_from_py(qrels), MetricSpec::parse(metric));
            return py::make_tuple(r.mean, r.per_query);
        },
        py::arg("run"), py::arg("qrels"), py::arg("metric") = "mrr@100",
        "Returns (mean, {query_id: value}).");
    m.def(
        "fisher_randomization",
        [](const std::vector<double>& a, const std::vector<double>& b, std::uint64_t rounds, std::uint64_t seed,
           std::size_t threads, std::size_t exhaustive_max_n) {
            const auto r = fisher_randomization(a, b, {rounds, seed, threads, exhaustive_max_n});
            py::dict d;
            d["p_value"] = r.p_value;
            d["observed"] = r.observed;
            d["exhaustive"] = r.exhaustive;
            d["assignments"] = r.assignments;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("rounds") = 100000, py::arg("seed") = 0, py::arg("threads") = 1,
        py::arg("exhaustive_max_n") = 20);

    // Answers
    m.def("normalize_answer", &normalize_answer, py::arg("answer"));
    m.def(
        "exact_match", [](const std::string& p, const std::vector<std::string>& g) { return exact_match(p, g); },
        py::arg("prediction"), py::arg("golds"));
    m.def(
        "token_f1", [](const std::string& p, const std::vector<std::string>& g) { return token_f1(p, g); },
        py::arg("prediction"), py::arg("golds"));
    m.def(
        "detect_kind",
        [](const std::vector<std::string>& g) { return std::string(to_string(detect_kind(g))); }, py::arg("golds"));
    m.def(
        "soft_match",
        [](const std::string& p, const std::vector<std::string>& g, std::optional<std::string> kind) {
            const auto k = kind ? parse_answer_kind(*kind) : detect_kind(g);
            const auto r = soft_match(p, g, k);
            return py::make_tuple(r.matched, r.parse_failure);
        },
        py::arg("prediction"), py::arg("golds"), py::arg("kind") = py::none(),
        "Returns (matched, parse_failure); the kind is detected from the golds when omitted.");

    // Corpus
    m.def(
        "split_passages",
        [](const std::string& entity_id, const std::string& title, const std::string& body, std::size_t limit) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& p : split_passages({entity_id, title, body, std::nullopt}, limit))
                out.emplace_back(p.passage_id, p.text);
            return out;
        },
        py::arg("entity_id"), py::arg("title"), py::arg("body"), py::arg("limit") = kDefaultPassageWords);
    m.def("split_sentences", [](const std::string& body) { return split_sentences(body); }, py::arg("body"));
    m.def("read_two_column", &read_two_column, py::arg("path"));
    m.def("write_two_column", &write_two_column, py::arg("rows"), py::arg("path"));

    // Training
    m.def(
        "train",
        [](const EmbeddingMatrix& qi, const EmbeddingMatrix& pi, const EmbeddingMatrix& en,
           const std::vector<std::pair<std::string, std::string>>& train_pairs,
           const std::vector<std::pair<std::string, std::string>>& val_pairs,
           const std::map<std::string, py::object>& config, std::optional<std::filesystem::path> checkpoint) {
            const auto cfg = train_config_from(kv_from_py(config));
            TrainLog log;
            TrainState state;
            {
                py::gil_scoped_release release;
                const TripleSet train_set(qi, pi, en, train_pairs), val_set(qi, pi, en, val_pairs);
                state = train(train_set, val_set, cfg, &log);
            }
            const auto best = best_checkpoint(state);
            if (checkpoint) write_checkpoint(best, *checkpoint);
            py::list epochs;
            for (const auto& e : log.epochs) {
                py::dict d;
                d["epoch"] = e.epoch;
                d["train_loss"] = e.train_loss;
                d["val_mrr"] = e.val_mrr;
                d["lr"] = e.lr;
                d["improved"] = e.improved;
                epochs.append(d);
            }
            py::dict out;
            out["initial_val_mrr"] = log.initial_val_mrr;
            out["best_val_mrr"] = state.best_val_mrr;
            out["stop_reason"] = log.stop_reason;
            out["epochs"] = epochs;
            out["checkpoint"] = checkpoint_dict(best);
            return out;
        },
        py::arg("query_images"), py::arg("passage_images"), py::arg("entity_names"), py::arg("train_pairs"),
        py::arg("val_pairs"), py::arg("config") = std::map<std::string, py::object>{},
        py::arg("checkpoint") = py::none(),
        "Trains adapters; config keys match the training config file. Returns a summary dict.");
    m.def(
        "read_checkpoint", [](const std::filesystem::path& p) { return checkpoint_dict(read_checkpoint(p)); },
        py::arg("path"));
    m.def(
        "export_channels",
        [](const std::filesystem::path& ckpt, const EmbeddingMatrix& qi, const EmbeddingMatrix& pi,
           const EmbeddingMatrix& en) {
            auto ex = export_channels(read_checkpoint(ckpt), qi, pi, en);
            return py::make_tuple(std::move(ex.query_images), std::move(ex.passage_images),
                                  std::move(ex.entity_names), ex.alpha_image, ex.alpha_cross);
        },
        py::arg("checkpoint"), py::arg("query_images"), py::arg("passage_images"), py::arg("entity_names"),
        "Returns (query_images, passage_images, entity_names, alpha_image, alpha_cross).");
}
