/// @file bindings.cpp
/// @brief Python bindings for corpus handling, pair generation, training and metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mole/cli.hpp"
#include "mole/corpus.hpp"
#include "mole/counterfactual.hpp"
#include "mole/evaluator.hpp"
#include "mole/llm_client.hpp"
#include "mole/metrics.hpp"
#include "mole/synth.hpp"

namespace py = pybind11;
using namespace mole;

namespace {

py::dict report_dict(const metrics::EvalReport& r) {
    auto opt = [](const std::optional<double>& v) -> py::object {
        return v ? py::object(py::float_(*v)) : py::object(py::none());
    };
    py::dict d;
    d["spearman"] = opt(r.spearman);
    d["kendall"] = opt(r.kendall);
    d["qwk"] = opt(r.qwk);
    d["accuracy"] = r.accuracy;
    d["f1_per_class"] = r.f1_per_class;
    d["macro_f1"] = r.macro_f1;
    return d;
}

std::vector<double> distribution(const evaluator::ClassDistribution& d) {
    return {d.probabilities.begin(), d.probabilities.end()};
}

}  // namespace

PYBIND11_MODULE(_mole, m) {
    m.doc() = "Multi-facet counterfactual pair generation and evaluator training";
    m.attr("NUM_GRADES") = kNumGrades;

    auto base = py::register_exception<Error>(m, "MoleError", PyExc_RuntimeError);
    auto metric_error = py::register_exception<metrics::MetricError>(m, "MetricError", base.ptr());
    py::register_exception<metrics::UndefinedMetric>(m, "UndefinedMetric", metric_error.ptr());
    py::register_exception<CorpusError>(m, "CorpusError", base.ptr());
    py::register_exception<evaluator::CheckpointError>(m, "CheckpointError", base.ptr());
    py::register_exception<evaluator::DivergenceError>(m, "DivergenceError", base.ptr());

    // Corpus -----------------------------------------------------------------

    py::enum_<Facet>(m, "Facet")
        .value("coherence", Facet::coherence)
        .value("usefulness", Facet::usefulness)
        .value("creativeness", Facet::creativeness)
        .value("informativeness", Facet::informativeness)
        .value("engagingness", Facet::engagingness);
    m.def("facet_description", [](Facet f) { return std::string(facet_description(f)); });

    py::class_<Document>(m, "Document")
        .def(py::init([](std::string id, std::string body, std::string title, std::optional<int> grade) {
                 return Document{std::move(id), std::move(title), std::move(body), grade};
             }),
             py::arg("id"), py::arg("body"), py::arg("title") = "", py::arg("grade") = py::none())
        .def_readwrite("id", &Document::id)
        .def_readwrite("title", &Document::title)
        .def_readwrite("body", &Document::body)
        .def_readwrite("grade", &Document::grade)
        .def("__repr__", [](const Document& d) {
            return "Document(id='" + d.id + "', grade=" + (d.grade ? std::to_string(*d.grade) : "None") + ")";
        });

    py::class_<Provenance>(m, "Provenance")
        .def_readonly("model", &Provenance::model)
        .def_readonly("template_version", &Provenance::template_version)
        .def_readonly("created_at", &Provenance::created_at)
        .def_readonly("truncated", &Provenance::truncated)
        .def_readonly("config_hash", &Provenance::config_hash);

    py::class_<ContrastivePair>(m, "ContrastivePair")
        .def_readonly("original", &ContrastivePair::original)
        .def_readonly("rewritten", &ContrastivePair::rewritten)
        .def_readonly("facet", &ContrastivePair::facet)
        .def_readonly("issues", &ContrastivePair::issues)
        .def_readonly("provenance", &ContrastivePair::provenance);

    m.def("load_documents",
          [](const std::filesystem::path& p, std::optional<std::pair<double, double>> raw_range) {
              std::optional<GradeBins> bins;
              if (raw_range) bins = GradeBins{raw_range->first, raw_range->second, kNumGrades};
              return load_documents(p, bins);
          },
          py::arg("path"), py::arg("raw_range") = py::none(),
          "Loads a labeled JSONL corpus; raw_range=(lo, hi) bins raw grades into 0..4.");
    m.def("save_documents",
          [](const std::vector<Document>& docs, const std::filesystem::path& p) { save_documents(docs, p); },
          py::arg("documents"), py::arg("path"));
    m.def("load_pairs", &load_pairs, py::arg("path"));
    m.def("save_pairs",
          [](const std::vector<ContrastivePair>& pairs, const std::filesystem::path& p) { save_pairs(pairs, p); },
          py::arg("pairs"), py::arg("path"));
    m.def("bin_grade",
          [](double raw, double lo, double hi) { return bin_grade(raw, GradeBins{lo, hi, kNumGrades}); },
          py::arg("raw"), py::arg("source_min") = 0.0, py::arg("source_max") = 4.0);

    m.def("synthesize",
          [](std::size_t size, std::int64_t seed) {
              synth::SynthConfig c;
              c.size = size;
              c.seed = seed;
              return synth::synthesize(c).documents;
          },
          py::arg("size"), py::arg("seed") = 0);

    // Pair generation --------------------------------------------------------

    m.def("render_issue_prompt", &counterfactual::render_issue_prompt, py::arg("document"), py::arg("facet"));
    m.def("render_rewrite_prompt",
          [](const Document& d, const std::string& issues) { return counterfactual::render_rewrite_prompt(d, issues); },
          py::arg("document"), py::arg("issues"));
    m.def("assign_facets",
          [](const std::vector<Document>& docs, std::int64_t seed) {
              std::vector<Facet> out;
              for (const auto& a : counterfactual::assign_facets(docs, seed)) out.push_back(a.facet);
              return out;
          },
          py::arg("documents"), py::arg("seed"));
    m.def("generate_mock_pairs",
          [](const std::vector<Document>& docs, std::int64_t seed, int parallelism) {
              llm::MockClient client;
              counterfactual::GenerationConfig c;
              c.seed = seed;
              c.parallelism = parallelism;
              py::gil_scoped_release release;
              return counterfactual::build_contrastive_dataset(docs, client, c).pairs;
          },
          py::arg("documents"), py::arg("seed") = 0, py::arg("parallelism") = 1,
          "Builds one contrastive pair per document with the offline mock rewriter.");

    // Evaluator --------------------------------------------------------------

    py::class_<evaluator::ModelParams>(m, "Model")
        .def_property_readonly("dim", [](const evaluator::ModelParams& p) { return p.shape.dim; })
        .def_property_readonly("vocab_size", [](const evaluator::ModelParams& p) { return p.shape.vocab_size; })
        .def("predict",
             [](const evaluator::ModelParams& p, const std::string& text, const std::string& title) {
                 auto r = evaluator::predict_grade(text, p, title);
                 return py::make_tuple(r.grade, distribution(r.distribution));
             },
             py::arg("text"), py::arg("title") = "",
             "Returns (grade, class probabilities).")
        .def("score",
             [](const evaluator::ModelParams& p, const std::string& text, const std::string& title) {
                 Document doc{"", title, text, std::nullopt};
                 auto tokens = evaluator::document_tokens(doc, p.shape.vocab_size);
                 return evaluator::contrast_score(evaluator::encode(tokens, p), p);
             },
             py::arg("text"), py::arg("title") = "", "Contrast-head score; higher means better.")
        .def("save",
             [](const evaluator::ModelParams& p, const std::filesystem::path& path) {
                 evaluator::save_checkpoint(path, p);
             },
             py::arg("path"));
    m.def("load_model",
          [](const std::filesystem::path& p) { return evaluator::load_checkpoint(p).params; }, py::arg("path"));

    m.def("train",
          [](const std::vector<Document>& labeled, const std::vector<ContrastivePair>& pairs, double C,
             std::optional<int> epochs, std::optional<double> lr, std::int64_t seed, std::optional<std::size_t> dim) {
              auto cfg = cli::default_train_config();
              cfg.C = C;
              cfg.seed = seed;
              if (epochs) cfg.epochs = *epochs;
              if (lr) cfg.learning_rate = *lr;
              if (dim) cfg.shape.dim = *dim;
              evaluator::TrainResult r;
              {
                  py::gil_scoped_release release;
                  r = evaluator::train(std::span<const Document>(labeled), std::span<const ContrastivePair>(pairs), cfg);
              }
              py::list log;
              for (const auto& e : r.log) {
                  py::dict d;
                  d["epoch"] = e.epoch;
                  d["cls"] = e.cls;
                  d["ctr"] = e.ctr;
                  d["total"] = e.total;
                  log.append(d);
              }
              return py::make_tuple(std::move(r.params), log);
          },
          py::arg("labeled"), py::arg("pairs") = std::vector<ContrastivePair>{}, py::arg("C") = 10.0,
          py::arg("epochs") = py::none(), py::arg("lr") = py::none(), py::arg("seed") = 0,
          py::arg("dim") = py::none(),
          "Trains on the joint loss and returns (model, per-epoch loss log).");

    // Metrics ----------------------------------------------------------------

    m.def("spearman", [](const std::vector<double>& g, const std::vector<double>& p) { return metrics::spearman(g, p); },
          py::arg("gold"), py::arg("pred"));
    m.def("kendall_tau", [](const std::vector<double>& g, const std::vector<double>& p) { return metrics::kendall_tau(g, p); },
          py::arg("gold"), py::arg("pred"));
    m.def("qwk", [](const std::vector<int>& g, const std::vector<int>& p) { return metrics::qwk(g, p); },
          py::arg("gold"), py::arg("pred"));
    m.def("accuracy", [](const std::vector<int>& g, const std::vector<int>& p) { return metrics::accuracy(g, p); },
          py::arg("gold"), py::arg("pred"));
    m.def("macro_f1", [](const std::vector<int>& g, const std::vector<int>& p) { return metrics::f1_scores(g, p).macro; },
          py::arg("gold"), py::arg("pred"));
    m.def("ttr", [](const std::string& t) { return metrics::ttr(t); }, py::arg("text"));
    m.def("self_bleu", [](const std::vector<std::string>& d, int n) { return metrics::self_bleu(d, n); },
          py::arg("documents"), py::arg("max_n") = 4);
    m.def("evaluate", [](const std::vector<int>& g, const std::vector<int>& p) { return report_dict(metrics::evaluate(g, p)); },
          py::arg("gold"), py::arg("pred"), "All grading metrics; undefined correlations are None.");

    // CLI --------------------------------------------------------------------

    m.def("run_cli",
          [](const std::vector<std::string>& args) {
              std::ostringstream out, err;
              int code;
              {
                  py::gil_scoped_release release;
                  code = cli::run(args, out, err);
              }
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Runs the command-line tool in process; returns (exit code, stdout, stderr).");

}
