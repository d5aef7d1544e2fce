#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "textcnnlab/corpus.hpp"
#include "textcnnlab/embedding.hpp"
#include "textcnnlab/interpret.hpp"
#include "textcnnlab/model.hpp"

namespace py = pybind11;
using namespace textcnn;

namespace {

nn::Conv1dParams<float> conv_from_array(py::array_t<float, py::array::c_style> arr) {
  const auto buf = arr.request();
  if (buf.ndim != 3) throw std::invalid_argument("filters must be a [F, S, C] array");
  nn::Conv1dParams<float> p(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]),
                            static_cast<int>(buf.shape[2]));
  std::copy(static_cast<const float*>(buf.ptr),
            static_cast<const float*>(buf.ptr) + arr.size(), p.weights.data.begin());
  return p;
}

py::array_t<float> conv_to_array(const nn::Conv1dParams<float>& p) {
  py::array_t<float> out({p.filters, p.width, p.in_channels});
  std::copy(p.weights.data.begin(), p.weights.data.end(), out.mutable_data());
  return out;
}

EmbeddingMatrix emb_from_array(py::array_t<float, py::array::c_style> arr) {
  const auto buf = arr.request();
  if (buf.ndim != 2) throw std::invalid_argument("embeddings must be a [V+1, I] array");
  EmbeddingMatrix emb(static_cast<int>(buf.shape[0]) - 1, static_cast<int>(buf.shape[1]), "");
  std::copy(static_cast<const float*>(buf.ptr),
            static_cast<const float*>(buf.ptr) + arr.size(), emb.rows.begin());
  return emb;
}

py::dict importance_to_dict(const ImportanceTable& t) {
  py::array_t<double> scores(static_cast<py::ssize_t>(t.score.size()));
  std::copy(t.score.begin(), t.score.end(), scores.mutable_data());
  py::dict d;
  d["scores"] = scores;  // indexed by word id; entry 0 is the pad row
  d["ranking"] = t.ranking;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "textcnn-lab core operations";

  py::class_<FilterRules>(m, "FilterRules")
      .def(py::init<>())
      .def_static("load", &FilterRules::load, py::arg("stopwords_path"),
                  py::arg("dictionary_path"))
      .def_readwrite("strip_html", &FilterRules::strip_html)
      .def_readwrite("drop_numeric", &FilterRules::drop_numeric)
      .def_readwrite("drop_punct", &FilterRules::drop_punct)
      .def("add_stopword",
           [](FilterRules& r, const std::string& w) { r.stopword_set.insert(w); })
      .def("add_dictionary_word",
           [](FilterRules& r, const std::string& w) { r.dictionary_set.insert(w); });

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<std::vector<std::string>, std::vector<int64_t>>(), py::arg("words"),
           py::arg("counts"))
      .def_static("load_tsv", &Vocabulary::load_tsv)
      .def("save_tsv", &Vocabulary::save_tsv)
      .def("__len__", &Vocabulary::size)
      .def("id_of", &Vocabulary::id_of)
      .def("word_of", &Vocabulary::word_of)
      .def_property_readonly("words", &Vocabulary::words)
      .def_property_readonly("hash", &Vocabulary::hash);

  m.def("tokenize_and_filter",
        py::overload_cast<const std::string&, const FilterRules&>(&tokenize_and_filter),
        py::arg("text"), py::arg("rules"));
  m.def("build_vocabulary", &build_vocabulary, py::arg("token_lists"), py::arg("min_count") = 1);
  m.def("encode", &encode, py::arg("tokens"), py::arg("vocab"),
        py::arg("seq_len") = kSequenceLength);
  m.def("prune_vocabulary", &prune_vocabulary, py::arg("vocab"), py::arg("ranked_words"),
        py::arg("keep_fraction"));
  m.def("complement_vocabulary", &complement_vocabulary, py::arg("vocab"),
        py::arg("ranked_words"), py::arg("drop_fraction"));

  m.def(
      "word_importance",
      [](py::array_t<float, py::array::c_style> emb,
         py::array_t<float, py::array::c_style> filters, bool brute) {
        const EmbeddingMatrix e = emb_from_array(emb);
        const auto p = conv_from_array(filters);
        return importance_to_dict(brute ? word_importance_bruteforce(e, p)
                                        : word_importance_fast(e, p));
      },
      py::arg("embeddings"), py::arg("filters"), py::arg("brute") = false,
      "Activation-sum word importance; embeddings are [V+1, I] with row 0 as pad");

  m.def(
      "shuffle_within_filters",
      [](py::array_t<float, py::array::c_style> filters, uint64_t seed) {
        return conv_to_array(shuffle_within_filters(conv_from_array(filters), seed));
      },
      py::arg("filters"), py::arg("seed"));
  m.def(
      "shuffle_across_filters",
      [](py::array_t<float, py::array::c_style> filters, uint64_t seed) {
        return conv_to_array(shuffle_across_filters(conv_from_array(filters), seed));
      },
      py::arg("filters"), py::arg("seed"));
  m.def(
      "randomize_first_layer",
      [](py::array_t<float, py::array::c_style> filters, uint64_t seed) {
        return conv_to_array(randomize_first_layer(conv_from_array(filters), seed));
      },
      py::arg("filters"), py::arg("seed"));

  m.def(
      "kmeans",
      [](py::array_t<float, py::array::c_style> rows, int k, uint64_t seed, int max_iter,
         double tol) {
        const auto buf = rows.request();
        if (buf.ndim != 2) throw std::invalid_argument("rows must be 2-D");
        std::vector<float> data(static_cast<const float*>(buf.ptr),
                                static_cast<const float*>(buf.ptr) + rows.size());
        const Clustering cl =
            kmeans(data, buf.shape[0], static_cast<int>(buf.shape[1]), k, seed, max_iter, tol);
        py::dict d;
        d["assignment"] = cl.assignment;
        d["sse"] = cl.sse;
        d["sizes"] = cl.sizes;
        d["sse_trace"] = cl.sse_trace;
        py::array_t<double> centroids({static_cast<py::ssize_t>(cl.k),
                                       static_cast<py::ssize_t>(cl.dim)});
        std::copy(cl.centroids.begin(), cl.centroids.end(), centroids.mutable_data());
        d["centroids"] = centroids;
        return d;
      },
      py::arg("rows"), py::arg("k"), py::arg("seed") = 1, py::arg("max_iter") = 100,
      py::arg("tol") = 1e-4);

  m.def(
      "pca2",
      [](py::array_t<float, py::array::c_style> rows) {
        const auto buf = rows.request();
        if (buf.ndim != 2) throw std::invalid_argument("rows must be 2-D");
        std::vector<float> data(static_cast<const float*>(buf.ptr),
                                static_cast<const float*>(buf.ptr) + rows.size());
        const Projection2D proj = pca2(data, buf.shape[0], static_cast<int>(buf.shape[1]));
        py::dict d;
        py::array_t<double> coords({static_cast<py::ssize_t>(buf.shape[0]), py::ssize_t{2}});
        std::copy(proj.coords.begin(), proj.coords.end(), coords.mutable_data());
        py::array_t<double> comps({py::ssize_t{2}, static_cast<py::ssize_t>(buf.shape[1])});
        std::copy(proj.components.begin(), proj.components.end(), comps.mutable_data());
        d["coords"] = coords;
        d["components"] = comps;
        d["eigenvalues"] = proj.eigenvalues;
        return d;
      },
      py::arg("rows"));

  m.def(
      "table_param_counts",
      [](int vocab_size, bool emb_trainable) {
        EmbeddingMatrix emb(vocab_size, kEmbeddingDim, "");
        const SentimentCNN model = build_model(vocab_size, emb, emb_trainable, 1);
        const ParamCount pc = count_params(model);
        py::dict d;
        d["total"] = pc.total;
        d["trainable"] = pc.trainable;
        d["frozen"] = pc.frozen;
        py::dict per;
        for (const auto& [name, n] : pc.per_layer) per[py::str(name)] = n;
        d["per_layer"] = per;
        return d;
      },
      py::arg("vocab_size"), py::arg("emb_trainable") = false,
      "Parameter accounting for the reference architecture at a given vocabulary size");
}
