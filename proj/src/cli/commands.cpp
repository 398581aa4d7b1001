/// @file commands.cpp
/// @brief Subcommand implementations and CLI11 wiring.

#include "mole/cli.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mole/corpus_json.hpp"
#include "mole/metrics.hpp"
#include "mole/synth.hpp"
#include "mole/text.hpp"

namespace mole::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class ConfigError : public Error {
public:
    using Error::Error;
};

void require_file(const fs::path& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string(what) + " path is required");
    if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path.string());
}

void prepare_out(const fs::path& out) {
    if (out.empty()) throw ConfigError("--out is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory " + out.string());
}

/// Writes effective_config.json and returns the config hash.
std::string record_config(const fs::path& out, const std::string& command, const json& config, std::int64_t seed) {
    const std::string hash = text::sha256_hex(json{{"command", command}, {"config", config}}.dump()).substr(0, 16);
    json effective{{"command", command}, {"config", config}, {"config_hash", hash}, {"seed", seed}};
    write_file_atomic(out / "effective_config.json", effective.dump(2) + "\n");
    return hash;
}

std::string jsonl(const std::vector<json>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    return s;
}

std::optional<GradeBins> bins_from(const std::optional<std::pair<double, double>>& range) {
    if (!range) return std::nullopt;
    return GradeBins{range->first, range->second, kNumGrades};
}

json range_json(const std::optional<std::pair<double, double>>& range) {
    if (!range) return nullptr;
    return json{{"source_min", range->first}, {"source_max", range->second}, {"num_bins", kNumGrades}};
}

json train_config_json(const evaluator::TrainConfig& c) {
    return json{{"C", c.C},
                {"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"dim", c.shape.dim},
                {"vocab_size", c.shape.vocab_size},
                {"activation", evaluator::activation_name(c.shape.activation)},
                {"optimizer", c.optimizer == evaluator::Optimizer::sgd ? "sgd" : "momentum"},
                {"momentum", c.momentum},
                {"init_scale", c.init_scale}};
}

std::string fmt_metric(const std::optional<double>& v) {
    if (!v) return "undef";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

std::string fmt_metric(double v) { return fmt_metric(std::optional<double>(v)); }

std::string pad(std::string s, std::size_t width) {
    // Greek column labels are two bytes, one column.
    std::size_t cols = 0;
    for (unsigned char c : s) cols += (c & 0xC0) != 0x80;
    if (cols < width) s.append(width - cols, ' ');
    return s;
}

std::string row_label(const fs::path& p) {
    auto s = p.string();
    return s.size() > 28 ? "..." + s.substr(s.size() - 25) : s;
}

}  // namespace

evaluator::TrainConfig default_train_config() {
    evaluator::TrainConfig c;
    c.C = 10.0;
    c.learning_rate = 1.0;
    c.epochs = 60;
    c.batch_size = 16;
    c.seed = 0;
    c.shape = evaluator::ModelShape{evaluator::kDefaultVocabSize, 16, evaluator::Activation::tanh};
    c.optimizer = evaluator::Optimizer::sgd;
    c.momentum = 0.9;
    c.init_scale = 0.1;
    return c;
}

// -----------------------------------------------------------------------------
// synth
// -----------------------------------------------------------------------------

int cmd_synth(const SynthOptions& opts, std::ostream& out) {
    if (opts.size == 0) throw ConfigError("--size must be positive");
    prepare_out(opts.out);
    const json config{{"size", opts.size}, {"test_size", opts.test_size}, {"seed", opts.seed}};
    const auto hash = record_config(opts.out, "synth", config, opts.seed);

    synth::SynthConfig sc;
    sc.size = opts.size + opts.test_size;
    sc.seed = opts.seed;
    auto corpus = synth::synthesize(sc);

    std::span<const Document> all(corpus.documents);
    save_documents(all.first(opts.size), opts.out / "corpus.jsonl");
    if (opts.test_size > 0) save_documents(all.subspan(opts.size), opts.out / "test.jsonl");

    std::vector<json> truth;
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        json facets = json::array();
        for (Facet f : corpus.degradations[i]) facets.push_back(facet_name(f));
        truth.push_back(json{{"id", corpus.documents[i].id},
                             {"grade", *corpus.documents[i].grade},
                             {"degradations", facets},
                             {"split", i < opts.size ? "corpus" : "test"},
                             {"config_hash", hash},
                             {"seed", opts.seed}});
    }
    write_file_atomic(opts.out / "ground_truth.jsonl", jsonl(truth));
    out << "synth: wrote " << opts.size << " documents" << (opts.test_size ? " + " + std::to_string(opts.test_size) + " test" : "")
        << " to " << opts.out.string() << "\n";
    return 0;
}

// -----------------------------------------------------------------------------
// generate
// -----------------------------------------------------------------------------

int cmd_generate(const GenerateOptions& opts, std::ostream& out, std::shared_ptr<llm::LlmClient> client) {
    require_file(opts.corpus, "corpus");
    prepare_out(opts.out);
    if (opts.parallelism < 1) throw ConfigError("--parallelism must be >= 1");
    if (opts.max_attempts < 1) throw ConfigError("--max-attempts must be >= 1");

    const json config{{"corpus", opts.corpus.string()},
                      {"mock", opts.mock},
                      {"seed", opts.seed},
                      {"model", opts.model},
                      {"endpoint", opts.mock ? "" : opts.endpoint},
                      {"stage_a_temperature", opts.stage_a_temperature},
                      {"stage_b_temperature", opts.stage_b_temperature},
                      {"max_body_tokens", opts.max_body_tokens},
                      {"max_completion_tokens", opts.max_completion_tokens},
                      {"parallelism", opts.parallelism},
                      {"requests_per_second", opts.requests_per_second},
                      {"max_attempts", opts.max_attempts},
                      {"cache", opts.use_cache}};
    auto docs = load_documents(opts.corpus);
    if (docs.empty()) throw ConfigError("corpus " + opts.corpus.string() + " is empty");
    const auto hash = record_config(opts.out, "generate", config, opts.seed);

    if (!client) {
        if (opts.mock) {
            client = std::make_shared<llm::MockClient>();
        } else {
            llm::HttpConfig http;
            http.endpoint = opts.endpoint;
            http.api_key_env = opts.api_key_env;
            llm::RetryPolicy policy;
            policy.max_attempts = opts.max_attempts;
            llm::ClientLimits limits{opts.parallelism, opts.requests_per_second, static_cast<double>(opts.parallelism)};
            client = std::make_shared<llm::RetryingClient>(std::make_shared<llm::HttpTransport>(http), policy, limits);
        }
    }
    if (opts.use_cache) {
        client = std::make_shared<llm::CachingClient>(client, std::make_shared<llm::DiskCache>(opts.out / "cache"));
    }

    counterfactual::GenerationConfig gc;
    gc.model = opts.model;
    gc.seed = opts.seed;
    gc.stage_a_temperature = opts.stage_a_temperature;
    gc.stage_b_temperature = opts.stage_b_temperature;
    gc.max_body_tokens = opts.max_body_tokens;
    gc.max_completion_tokens = opts.max_completion_tokens;
    gc.parallelism = opts.parallelism;
    gc.config_hash = hash;

    auto dataset = counterfactual::build_contrastive_dataset(docs, *client, gc);
    save_pairs(dataset.pairs, opts.out / "pairs.jsonl");

    std::vector<json> skips;
    for (const auto& s : dataset.skipped) {
        skips.push_back(json{{"index", s.index}, {"document_id", s.document_id}, {"stage", s.stage},
                             {"reason", s.reason}, {"config_hash", hash}, {"seed", opts.seed}});
    }
    write_file_atomic(opts.out / "skipped.jsonl", jsonl(skips));

    const auto& sm = dataset.summary;
    json assigned = json::object(), built = json::object();
    for (Facet f : kAllFacets) {
        assigned[std::string(facet_name(f))] = sm.assigned_per_facet.count(f) ? sm.assigned_per_facet.at(f) : 0;
        built[std::string(facet_name(f))] = sm.built_per_facet.count(f) ? sm.built_per_facet.at(f) : 0;
    }
    json summary{{"documents", sm.documents},
                 {"pairs_built", sm.pairs_built},
                 {"skipped", sm.skipped},
                 {"fresh_completions", sm.fresh_completions},
                 {"cached_completions", sm.cached_completions},
                 {"assigned_per_facet", assigned},
                 {"built_per_facet", built},
                 {"config_hash", hash},
                 {"seed", opts.seed}};
    write_file_atomic(opts.out / "summary.json", summary.dump(2) + "\n");

    out << "generate: " << sm.pairs_built << " pairs, " << sm.skipped << " skipped, " << sm.fresh_completions
        << " fresh completions, " << sm.cached_completions << " cached\n";
    return 0;
}

// -----------------------------------------------------------------------------
// train
// -----------------------------------------------------------------------------

int cmd_train(const TrainOptions& opts, std::ostream& out) {
    require_file(opts.corpus, "corpus");
    if (opts.pairs) require_file(*opts.pairs, "pairs");
    prepare_out(opts.out);

    auto docs = load_documents(opts.corpus, bins_from(opts.grade_range));
    if (docs.empty()) throw ConfigError("corpus " + opts.corpus.string() + " is empty");
    std::vector<ContrastivePair> pairs;
    if (opts.pairs) pairs = load_pairs(*opts.pairs);

    json config{{"corpus", opts.corpus.string()},
                {"pairs", opts.pairs ? json(opts.pairs->string()) : json(nullptr)},
                {"grade_binning", range_json(opts.grade_range)},
                {"train", train_config_json(opts.train)}};
    const auto hash = record_config(opts.out, "train", config, opts.train.seed);

    evaluator::TrainResult result;
    try {
        result = evaluator::train(std::span<const Document>(docs), std::span<const ContrastivePair>(pairs), opts.train);
    } catch (const evaluator::DivergenceError& e) {
        throw evaluator::DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(e.epoch()) + ")", e.epoch());
    }

    json metadata{{"config_hash", hash},
                  {"seed", opts.train.seed},
                  {"train", train_config_json(opts.train)},
                  {"grade_binning", range_json(opts.grade_range)},
                  {"labeled_documents", docs.size()},
                  {"pairs", pairs.size()}};
    evaluator::save_checkpoint(opts.out / "checkpoint.json", result.params, metadata.dump());

    std::vector<json> log;
    for (const auto& e : result.log) {
        log.push_back(json{{"epoch", e.epoch}, {"L_cls", e.cls}, {"L_ctr", e.ctr}, {"L", e.total},
                           {"config_hash", hash}, {"seed", opts.train.seed}});
    }
    write_file_atomic(opts.out / "train_log.jsonl", jsonl(log));

    const auto& first = result.log.front();
    const auto& last = result.log.back();
    out << std::setprecision(6) << "train: " << docs.size() << " labeled, " << pairs.size() << " pairs, C=" << opts.train.C
        << "; L " << first.total << " -> " << last.total << " over " << opts.train.epochs << " epochs\n";
    return 0;
}

// -----------------------------------------------------------------------------
// evaluate
// -----------------------------------------------------------------------------

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out) {
    if (opts.checkpoints.empty() && opts.predictions.empty()) {
        throw ConfigError("evaluate needs --checkpoint or --predictions");
    }
    require_file(opts.test, "test corpus");
    for (const auto& c : opts.checkpoints) require_file(c, "checkpoint");
    for (const auto& p : opts.predictions) require_file(p, "predictions");
    prepare_out(opts.out);

    auto docs = load_documents(opts.test, bins_from(opts.grade_range));
    if (docs.empty()) throw ConfigError("test corpus " + opts.test.string() + " is empty");
    std::vector<int> gold;
    for (const auto& d : docs) {
        if (!d.grade) throw ConfigError("test document '" + d.id + "' has no grade");
        gold.push_back(*d.grade);
    }

    json checkpoints = json::array(), predictions = json::array();
    for (const auto& c : opts.checkpoints) checkpoints.push_back(c.string());
    for (const auto& p : opts.predictions) predictions.push_back(p.string());
    const json config{{"checkpoints", checkpoints},
                      {"predictions", predictions},
                      {"test", opts.test.string()},
                      {"grade_binning", range_json(opts.grade_range)}};
    const auto hash = record_config(opts.out, "evaluate", config, 0);

    struct Row {
        std::string label;
        std::vector<int> pred;
    };
    std::vector<Row> rows;
    for (const auto& path : opts.checkpoints) {
        evaluator::Checkpoint ck;
        try {
            ck = evaluator::load_checkpoint(path);
        } catch (const evaluator::CheckpointError& e) {
            throw ConfigError(std::string("checkpoint/corpus mismatch: ") + e.what());
        }
        Row row{row_label(path), {}};
        for (const auto& d : docs) row.pred.push_back(evaluator::predict_grade(d, ck.params).grade);
        rows.push_back(std::move(row));
    }
    for (const auto& path : opts.predictions) {
        std::map<std::string, int> by_id;
        std::ifstream in(path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            try {
                auto j = json::parse(line);
                by_id[j.at("id").get<std::string>()] = j.at("grade").get<int>();
            } catch (const json::exception& e) {
                throw ConfigError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        Row row{row_label(path), {}};
        for (const auto& d : docs) {
            auto it = by_id.find(d.id);
            if (it == by_id.end()) throw ConfigError(path.string() + " has no prediction for '" + d.id + "'");
            row.pred.push_back(it->second);
        }
        rows.push_back(std::move(row));
    }

    std::ostringstream table;
    table << pad("Model", 30) << pad("ρ", 8) << pad("τ", 8) << pad("QWK", 8) << pad("Acc.(%)", 9);
    for (int g = 0; g < kNumGrades; ++g) table << pad("F1-G" + std::to_string(g), 8);
    table << "Macro-F1\n";

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto report = metrics::evaluate(gold, row.pred);
        json j = report.to_json();

        json extra = json::object();
        std::set<std::string> keys;
        for (const auto& d : docs) {
            for (const auto& [k, v] : d.extra_grades) keys.insert(k);
        }
        for (const auto& k : keys) {
            std::vector<double> g, p;
            for (std::size_t i = 0; i < docs.size(); ++i) {
                auto it = docs[i].extra_grades.find(k);
                if (it == docs[i].extra_grades.end()) continue;
                g.push_back(it->second);
                p.push_back(row.pred[i]);
            }
            try {
                extra[k] = metrics::spearman(g, p);
            } catch (const metrics::MetricError&) {
                extra[k] = nullptr;
            }
        }
        if (!keys.empty()) j["extra_spearman"] = extra;
        j["model"] = row.label;
        j["config_hash"] = hash;
        j["seed"] = 0;
        const auto name = rows.size() == 1 ? std::string("report.json") : "report_" + std::to_string(r) + ".json";
        write_file_atomic(opts.out / name, j.dump(2) + "\n");

        std::vector<json> preds;
        for (std::size_t i = 0; i < docs.size(); ++i) preds.push_back(json{{"id", docs[i].id}, {"grade", row.pred[i]}});
        const auto pname = rows.size() == 1 ? std::string("predictions.jsonl") : "predictions_" + std::to_string(r) + ".jsonl";
        write_file_atomic(opts.out / pname, jsonl(preds));

        table << pad(row.label, 30) << pad(fmt_metric(report.spearman), 8) << pad(fmt_metric(report.kendall), 8)
              << pad(fmt_metric(report.qwk), 8);
        char acc[32];
        std::snprintf(acc, sizeof acc, "%.2f", 100.0 * report.accuracy);
        table << pad(acc, 9);
        for (double f : report.f1_per_class) table << pad(fmt_metric(f), 8);
        table << fmt_metric(report.macro_f1) << "\n";
    }
    write_file_atomic(opts.out / "table.txt", table.str());
    out << table.str();
    return 0;
}

// -----------------------------------------------------------------------------
// Argument parsing
// -----------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (!spdlog::get("mole")) {
        auto logger = spdlog::stderr_color_mt("mole");
        spdlog::set_default_logger(logger);
    }

    CLI::App app{"Multi-facet counterfactual pair generation and evaluator training", "mole"};
    app.set_config("--config", "", "TOML/INI file of option defaults; command-line flags win");
    app.require_subcommand(1);

    SynthOptions synth_opts;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic labeled corpus");
    synth->add_option("--size", synth_opts.size, "Number of documents")->required();
    synth->add_option("--test-size", synth_opts.test_size, "Additional held-out documents written to test.jsonl");
    synth->add_option("--seed", synth_opts.seed, "Generator seed")->required();
    synth->add_option("--out", synth_opts.out, "Output directory")->required();

    GenerateOptions gen_opts;
    auto* gen = app.add_subcommand("generate", "Build counterfactual contrastive pairs");
    gen->add_option("--corpus", gen_opts.corpus, "Labeled corpus JSONL")->required();
    gen->add_option("--out", gen_opts.out, "Output directory")->required();
    gen->add_flag("--mock", gen_opts.mock, "Use the offline mock client");
    gen->add_option("--seed", gen_opts.seed, "Facet assignment seed");
    gen->add_option("--model", gen_opts.model, "Model name sent to the service");
    gen->add_option("--endpoint", gen_opts.endpoint, "Chat-completions URL");
    gen->add_option("--api-key-env", gen_opts.api_key_env, "Environment variable holding the API key");
    gen->add_option("--stage-a-temperature", gen_opts.stage_a_temperature);
    gen->add_option("--stage-b-temperature", gen_opts.stage_b_temperature);
    gen->add_option("--max-body-tokens", gen_opts.max_body_tokens);
    gen->add_option("--max-completion-tokens", gen_opts.max_completion_tokens);
    gen->add_option("--parallelism", gen_opts.parallelism, "Documents in flight");
    gen->add_option("--rps", gen_opts.requests_per_second, "Request rate limit (0 = unlimited)");
    gen->add_option("--max-attempts", gen_opts.max_attempts, "Attempts per request");
    bool no_cache = false;
    gen->add_flag("--no-cache", no_cache, "Disable the on-disk response cache");

    TrainOptions train_opts;
    train_opts.train = default_train_config();
    std::string pairs_path, activation = "tanh", optimizer = "sgd", train_range;
    auto* tr = app.add_subcommand("train", "Train the evaluator on the joint loss");
    tr->add_option("--corpus", train_opts.corpus, "Labeled corpus JSONL")->required();
    tr->add_option("--pairs", pairs_path, "Contrastive pairs JSONL (omit for supervised-only)");
    tr->add_option("--C", train_opts.train.C, "Contrastive loss ratio")->capture_default_str();
    tr->add_option("--out", train_opts.out, "Output directory")->required();
    tr->add_option("--seed", train_opts.train.seed);
    tr->add_option("--epochs", train_opts.train.epochs)->capture_default_str();
    tr->add_option("--lr", train_opts.train.learning_rate)->capture_default_str();
    tr->add_option("--batch-size", train_opts.train.batch_size)->capture_default_str();
    tr->add_option("--dim", train_opts.train.shape.dim)->capture_default_str();
    tr->add_option("--vocab", train_opts.train.shape.vocab_size)->capture_default_str();
    tr->add_option("--activation", activation)->check(CLI::IsMember({"tanh", "identity"}));
    tr->add_option("--optimizer", optimizer)->check(CLI::IsMember({"sgd", "momentum"}));
    tr->add_option("--momentum", train_opts.train.momentum);
    tr->add_option("--init-scale", train_opts.train.init_scale);
    tr->add_option("--grade-range", train_range, "MIN:MAX raw score range to bin onto 0-4");

    EvaluateOptions eval_opts;
    std::string eval_range;
    auto* ev = app.add_subcommand("evaluate", "Score checkpoints or predictions against a labeled test set");
    ev->add_option("--checkpoint", eval_opts.checkpoints, "Checkpoint (repeat to compare)");
    ev->add_option("--predictions", eval_opts.predictions, "Predictions JSONL {id, grade} (repeatable)");
    ev->add_option("--test", eval_opts.test, "Labeled test corpus JSONL")->required();
    ev->add_option("--out", eval_opts.out, "Output directory")->required();
    ev->add_option("--grade-range", eval_range, "MIN:MAX raw score range to bin onto 0-4");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    auto parse_range = [](const std::string& s) -> std::optional<std::pair<double, double>> {
        if (s.empty()) return std::nullopt;
        auto colon = s.find(':');
        if (colon == std::string::npos) throw ConfigError("--grade-range expects MIN:MAX, got '" + s + "'");
        return std::make_pair(std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
    };

    try {
        if (*synth) return cmd_synth(synth_opts, out);
        if (*gen) {
            gen_opts.use_cache = !no_cache;
            return cmd_generate(gen_opts, out);
        }
        if (*tr) {
            if (!pairs_path.empty()) train_opts.pairs = pairs_path;
            train_opts.train.shape.activation = evaluator::parse_activation(activation);
            train_opts.train.optimizer = optimizer == "sgd" ? evaluator::Optimizer::sgd : evaluator::Optimizer::momentum;
            train_opts.grade_range = parse_range(train_range);
            return cmd_train(train_opts, out);
        }
        if (*ev) {
            eval_opts.grade_range = parse_range(eval_range);
            return cmd_evaluate(eval_opts, out);
        }
    } catch (const evaluator::DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace mole::cli
