// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "diverge/cli.hpp"
#include "diverge/errors.hpp"
#include "diverge/index.hpp"
#include "diverge/metrics.hpp"
#include "diverge/providers.hpp"
#include "diverge/rerank.hpp"
#include "diverge/websearch.hpp"

namespace py = pybind11;
using namespace diverge;

namespace {

using Vectors = std::vector<std::vector<double>>;

std::vector<Embedding> embeddings(const Vectors& xs) {
    std::vector<Embedding> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.emplace_back(x);
    return out;
}

Vectors plain(const std::vector<Embedding>& xs) {
    Vectors out;
    for (const auto& e : xs) out.emplace_back(e.values().begin(), e.values().end());
    return out;
}

}  // namespace

PYBIND11_MODULE(_diverge, m) {
    m.doc() = "Iteration-aware retrieval reranking and diversity metrics";

    auto base = py::register_exception<Error>(m, "DivergeError");
    py::register_exception<ContractError>(m, "ContractError", base);

    m.def(
        "rerank_indices",
        [](const Vectors& candidates, const std::vector<double>& relevance, const Vectors& memory, double alpha,
           double beta, int k) {
            const auto c = embeddings(candidates);
            const auto mem = embeddings(memory);
            return rerank_indices(c, relevance, mem, alpha, beta, k);
        },
        py::arg("candidates"), py::arg("relevance"), py::arg("memory") = Vectors{}, py::arg("alpha") = 0.7,
        py::arg("beta") = 0.2, py::arg("k") = 5,
        "Greedy iteration-aware MMR over unit vectors; returns candidate indices in pick order.");

    m.def(
        "mmr_indices",
        [](const Vectors& candidates, const std::vector<double>& relevance, double alpha, int k) {
            const auto c = embeddings(candidates);
            return rerank_indices(c, relevance, {}, alpha, 0.0, k);
        },
        py::arg("candidates"), py::arg("relevance"), py::arg("alpha") = 0.7, py::arg("k") = 5);

    m.def(
        "cosine_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return cosine_similarity(Embedding(a), Embedding(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "semantic_diversity", [](const Vectors& xs) { return semantic_diversity(embeddings(xs)); },
        py::arg("vectors"));
    m.def(
        "count_unique", [](const Vectors& xs, double tau) { return count_unique(embeddings(xs), tau); },
        py::arg("vectors"), py::arg("tau") = kDefaultTau);
    m.def("unified_score", &unified_score, py::arg("q_norm"), py::arg("d_norm"));
    m.def("minmax_normalize", &minmax_normalize, py::arg("values"));

    m.def(
        "chunk_windows",
        [](int n, int size, int overlap) {
            std::vector<std::pair<int, int>> out;
            for (const auto& w : chunk_windows(n, size, overlap)) out.emplace_back(w.start, w.end);
            return out;
        },
        py::arg("n_tokens"), py::arg("size") = 512, py::arg("overlap") = 50);

    m.def(
        "filter_url", [](const std::string& url) { return filter_url(url, UrlFilterPolicy::defaults()); },
        py::arg("url"));
    m.def(
        "extract_text", [](const std::string& html) { return extract_text(html); }, py::arg("html"));

    py::class_<HashEmbedder>(m, "HashEmbedder")
        .def(py::init<std::size_t>(), py::arg("dimension") = 64)
        .def_property_readonly("dimension", &HashEmbedder::dimension)
        .def(
            "embed", [](HashEmbedder& e, const std::vector<std::string>& texts) { return plain(e.embed(texts)); },
            py::arg("texts"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
