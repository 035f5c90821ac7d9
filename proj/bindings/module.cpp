// Python bindings for the core operations: ingestion and pairing, bias
// diagnosis, score correction, ranking metrics, run-file text formats, and
// the gradient-overlap sweep. Report formatting and the command-line front
// end stay C++-only; see tools/main.cpp.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "pplbias/causal.hpp"
#include "pplbias/cdc.hpp"
#include "pplbias/datamodel.hpp"
#include "pplbias/error.hpp"
#include "pplbias/metrics.hpp"
#include "pplbias/theorylab.hpp"
#include "pplbias/trec.hpp"

namespace py = pybind11;
using namespace pplbias;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Perplexity-bias diagnosis, correction and evaluation toolkit";

    // Error carries a stable machine-readable code; surface it as a message
    // prefix so callers can match on it without a custom exception type.
    static py::exception<Error> toolkit_error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(toolkit_error.ptr(), (e.code() + ": " + e.what()).c_str());
        }
    });

    py::enum_<Source>(m, "Source")
        .value("human", Source::human)
        .value("generated", Source::generated);

    py::enum_<SampleSelection>(m, "SampleSelection")
        .value("sorted", SampleSelection::sorted)
        .value("seeded_random", SampleSelection::seeded_random);

    py::enum_<BreakCondition>(m, "BreakCondition")
        .value("none", BreakCondition::none)
        .value("collinearity", BreakCondition::collinearity)
        .value("orthogonality", BreakCondition::orthogonality)
        .value("cooperation", BreakCondition::cooperation);

    py::class_<ScoredPair>(m, "ScoredPair")
        .def(py::init<>())
        .def_readwrite("query_id", &ScoredPair::query_id)
        .def_readwrite("doc_id", &ScoredPair::doc_id)
        .def_readwrite("source", &ScoredPair::source)
        .def_readwrite("score", &ScoredPair::score)
        .def_readwrite("perplexity", &ScoredPair::perplexity)
        .def_readwrite("relevance", &ScoredPair::relevance)
        .def_readwrite("has_relevance", &ScoredPair::has_relevance)
        .def_readwrite("temperature", &ScoredPair::temperature)
        .def_readwrite("pair_key", &ScoredPair::pair_key);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("pairs", &Dataset::pairs)
        .def_readwrite("qrels", &Dataset::qrels)
        .def_readwrite("meta", &Dataset::meta)
        .def("__len__", [](const Dataset& ds) { return ds.pairs.size(); });

    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("accepted", &ValidationReport::accepted)
        .def_readonly("skipped", &ValidationReport::skipped)
        .def_readonly("errors", &ValidationReport::errors)
        .def_readonly("messages", &ValidationReport::messages);

    py::class_<EstimationSample>(m, "EstimationSample")
        .def(py::init<>())
        .def_readwrite("query_id", &EstimationSample::query_id)
        .def_readwrite("pair_key", &EstimationSample::pair_key)
        .def_readwrite("r_human", &EstimationSample::r_human)
        .def_readwrite("r_gen", &EstimationSample::r_gen)
        .def_readwrite("p_human", &EstimationSample::p_human)
        .def_readwrite("p_gen", &EstimationSample::p_gen)
        .def_readwrite("temperature", &EstimationSample::temperature);

    py::class_<EstimationSet>(m, "EstimationSet")
        .def_readonly("samples", &EstimationSet::samples)
        .def_readonly("skipped_queries", &EstimationSet::skipped_queries);

    py::class_<Observation>(m, "Observation")
        .def(py::init<>())
        .def(py::init([](int s, double p, double r) { return Observation{s, p, r}; }),
             py::arg("s"), py::arg("p"), py::arg("r"))
        .def_readwrite("s", &Observation::s)
        .def_readwrite("p", &Observation::p)
        .def_readwrite("r", &Observation::r);

    py::class_<BiasEstimate>(m, "BiasEstimate")
        .def_readonly("beta1", &BiasEstimate::beta1)
        .def_readonly("beta2", &BiasEstimate::beta2)
        .def_readonly("a1", &BiasEstimate::a1)
        .def_readonly("a2", &BiasEstimate::a2)
        .def_readonly("se1", &BiasEstimate::se1)
        .def_readonly("se2", &BiasEstimate::se2)
        .def_readonly("p1", &BiasEstimate::p1)
        .def_readonly("p2", &BiasEstimate::p2)
        .def_readonly("n", &BiasEstimate::n)
        .def_readonly("weak_instrument", &BiasEstimate::weak_instrument);

    py::class_<RankedRun>(m, "RankedRun")
        .def(py::init<>())
        .def_readwrite("query_id", &RankedRun::query_id)
        .def_readwrite("ranking", &RankedRun::ranking)
        .def_readwrite("k", &RankedRun::k)
        .def_static("from_scores", &RankedRun::from_scores, py::arg("query_id"),
                    py::arg("entries"), py::arg("k") = 3);

    py::class_<BiasReport>(m, "BiasReport")
        .def_readonly("metric_human", &BiasReport::metric_human)
        .def_readonly("metric_llm", &BiasReport::metric_llm)
        .def_readonly("relative_delta", &BiasReport::relative_delta);

    py::class_<TTestResult>(m, "TTestResult")
        .def_readonly("t", &TTestResult::t)
        .def_readonly("p", &TTestResult::p)
        .def_readonly("dof", &TTestResult::dof);

    py::class_<CdcConfig>(m, "CdcConfig")
        .def(py::init<>())
        .def_readwrite("budget", &CdcConfig::budget)
        .def_readwrite("top_k_correct", &CdcConfig::top_k_correct)
        .def_readwrite("beta2_override", &CdcConfig::beta2_override)
        .def_readwrite("beta2_scale", &CdcConfig::beta2_scale)
        .def_readwrite("selection", &CdcConfig::selection)
        .def_readwrite("seed", &CdcConfig::seed)
        .def_readwrite("corrected_se", &CdcConfig::corrected_se);

    py::class_<CorrectedEntry>(m, "CorrectedEntry")
        .def_readonly("doc_id", &CorrectedEntry::doc_id)
        .def_readonly("raw_score", &CorrectedEntry::raw_score)
        .def_readonly("perplexity", &CorrectedEntry::perplexity)
        .def_readonly("calibrated_score", &CorrectedEntry::calibrated_score)
        .def_readonly("corrected", &CorrectedEntry::corrected);

    py::class_<CorrectedRun>(m, "CorrectedRun")
        .def_readonly("query_id", &CorrectedRun::query_id)
        .def_readonly("entries", &CorrectedRun::entries)
        .def_readonly("beta2_used", &CorrectedRun::beta2_used)
        .def_readonly("corrected_count", &CorrectedRun::corrected_count);

    py::class_<CdcResult>(m, "CdcResult")
        .def_readonly("runs", &CdcResult::runs)
        .def_readonly("estimate", &CdcResult::estimate)
        .def_readonly("beta2_used", &CdcResult::beta2_used);

    py::class_<LabRanges>(m, "LabRanges")
        .def(py::init<>())
        .def_readwrite("l_lo", &LabRanges::l_lo)
        .def_readwrite("l_hi", &LabRanges::l_hi)
        .def_readwrite("d_lo", &LabRanges::d_lo)
        .def_readwrite("d_hi", &LabRanges::d_hi)
        .def_readwrite("n_lo", &LabRanges::n_lo)
        .def_readwrite("n_hi", &LabRanges::n_hi);

    py::class_<IdentityTrial>(m, "IdentityTrial")
        .def_readonly("L", &IdentityTrial::L)
        .def_readonly("D", &IdentityTrial::D)
        .def_readonly("N", &IdentityTrial::N)
        .def_readonly("identity_err", &IdentityTrial::identity_err)
        .def_readonly("fd_err_mlm", &IdentityTrial::fd_err_mlm)
        .def_readonly("fd_err_retrieval", &IdentityTrial::fd_err_retrieval)
        .def_readonly("k_max", &IdentityTrial::k_max)
        .def_readonly("k_bound", &IdentityTrial::k_bound)
        .def_readonly("pass_", &IdentityTrial::pass);

    py::class_<IdentityReport>(m, "IdentityReport")
        .def_readonly("trials", &IdentityReport::trials)
        .def_readonly("pass_rate", &IdentityReport::pass_rate)
        .def_readonly("pass_rate_defined", &IdentityReport::pass_rate_defined)
        .def_readonly("max_identity_err", &IdentityReport::max_identity_err)
        .def_readonly("max_fd_err", &IdentityReport::max_fd_err)
        .def_readonly("k_bound_ok", &IdentityReport::k_bound_ok)
        .def_readonly("rows", &IdentityReport::rows);

    // ingestion and pairing
    m.def("ingest_jsonl", &ingest_jsonl, py::arg("path"));
    m.def("ingest_jsonl_text", &ingest_jsonl_text, py::arg("text"),
          py::arg("origin") = "<memory>");
    m.def("serialize_jsonl", &serialize_jsonl, py::arg("dataset"));
    m.def(
        "validate_jsonl_text",
        [](const std::string& text, const std::optional<Qrels>& qrels) {
            return validate_jsonl_text(text, qrels ? &*qrels : nullptr);
        },
        py::arg("text"), py::arg("qrels") = py::none());
    m.def("default_pair_key", &default_pair_key, py::arg("doc_id"));
    m.def("build_estimation_set", &build_estimation_set, py::arg("train"), py::arg("budget"),
          py::arg("selection") = SampleSelection::sorted, py::arg("seed") = 0);

    // diagnosis
    m.def("diagnose", &diagnose, py::arg("samples"), py::arg("corrected_se") = false);
    m.def("two_stage_iv", &two_stage_iv, py::arg("observations"),
          py::arg("corrected_se") = false);
    m.def("wald_estimator", &wald_estimator, py::arg("observations"));

    // correction
    m.def("correct_scores", &correct_scores, py::arg("run"), py::arg("perplexities"),
          py::arg("beta2"), py::arg("top_k"));
    m.def("run_cdc", &run_cdc, py::arg("train"), py::arg("test_runs"), py::arg("perplexities"),
          py::arg("config"));

    // metrics
    m.def(
        "ndcg_at_k",
        [](const RankedRun& run, const Qrels& qrels, int k) { return ndcg_at_k(run, qrels, k); },
        py::arg("run"), py::arg("qrels"), py::arg("k"));
    m.def("relative_delta", &relative_delta, py::arg("metric_human"), py::arg("metric_llm"));
    m.def("restrict_qrels", &restrict_qrels, py::arg("qrels"), py::arg("sources"),
          py::arg("keep"));
    m.def(
        "per_source_ndcg",
        [](const RankedRun& run, const Qrels& qrels, int k, const SourceMap& sources) {
            return per_source_ndcg(run, qrels, k, sources);
        },
        py::arg("run"), py::arg("qrels"), py::arg("k"), py::arg("sources"));
    m.def(
        "bias_report",
        [](const RankedRun& run, const Qrels& qrels, int k, const SourceMap& sources) {
            return bias_report(run, qrels, k, sources);
        },
        py::arg("run"), py::arg("qrels"), py::arg("k"), py::arg("sources"));
    m.def("pearson", &pearson, py::arg("x"), py::arg("y"));
    m.def("paired_t_test", &paired_t_test, py::arg("a"), py::arg("b"));

    // run-file text formats
    m.def("to_trec_text",
          py::overload_cast<const std::vector<RankedRun>&, const std::string&>(&to_trec_text),
          py::arg("runs"), py::arg("tag"));
    m.def("to_trec_text",
          py::overload_cast<const std::vector<CorrectedRun>&, const std::string&>(&to_trec_text),
          py::arg("runs"), py::arg("tag"));
    m.def("from_trec_text", &from_trec_text, py::arg("text"), py::arg("origin") = "<memory>");
    m.def("to_qrels_text", &to_qrels_text, py::arg("qrels"));
    m.def("from_qrels_text", &from_qrels_text, py::arg("text"), py::arg("origin") = "<memory>");

    // gradient-overlap sweep
    m.def("verify_overlap_identity", &verify_overlap_identity, py::arg("trials"),
          py::arg("ranges") = LabRanges{}, py::arg("seed") = 0,
          py::arg("broken") = BreakCondition::none);
}
