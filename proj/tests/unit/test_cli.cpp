#include <doctest.h>

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mole/cli.hpp"
#include "mole/corpus.hpp"
#include "mole/metrics.hpp"
#include "mole/synth.hpp"
#include "test_helpers.hpp"

using namespace mole;
using mole::test::read_file;
using mole::test::TempDir;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run mole_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<json> read_jsonl(const std::filesystem::path& p) {
    std::vector<json> rows;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(json::parse(line));
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth is deterministic and covers every grade") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "100", "--seed", "7", "--out", (dir / "a").string()}).code == 0);
    REQUIRE(mole_cli({"synth", "--size", "100", "--seed", "7", "--out", (dir / "b").string()}).code == 0);
    CHECK(read_file(dir / "a" / "corpus.jsonl") == read_file(dir / "b" / "corpus.jsonl"));
    CHECK(read_file(dir / "a" / "ground_truth.jsonl") == read_file(dir / "b" / "ground_truth.jsonl"));

    auto docs = load_documents(dir / "a" / "corpus.jsonl");
    CHECK(docs.size() == 100);
    std::set<int> grades;
    for (const auto& d : docs) grades.insert(*d.grade);
    CHECK(grades.size() == 5);

    auto cfg = json::parse(read_file(dir / "a" / "effective_config.json"));
    CHECK(cfg["seed"] == 7);
    CHECK(cfg["config_hash"].get<std::string>().size() == 16);
    for (const auto& row : read_jsonl(dir / "a" / "ground_truth.jsonl")) {
        CHECK(row["seed"] == 7);
        CHECK(row["config_hash"] == cfg["config_hash"]);
    }
}

TEST_CASE("synth: more degradations never give a higher grade") {
    for (std::size_t size : {5u, 50u, 137u}) {
        auto c = synth::synthesize({size, 13});
        for (std::size_t i = 0; i < c.documents.size(); ++i) {
            CHECK(*c.documents[i].grade == 4 - static_cast<int>(c.degradations[i].size()));
            for (std::size_t j = 0; j < c.documents.size(); ++j) {
                if (c.degradations[i].size() > c.degradations[j].size()) {
                    CHECK(*c.documents[i].grade < *c.documents[j].grade);
                }
            }
        }
    }
}

TEST_CASE("synth: distinct seeds give distinct corpora") {
    auto a = synth::synthesize({30, 1});
    auto b = synth::synthesize({30, 2});
    CHECK(a.documents != b.documents);
}

TEST_CASE("generate --mock on 5 docs, then warm rerun is byte-identical") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "5", "--seed", "1", "--out", dir.path().string()}).code == 0);
    const auto corpus = (dir / "corpus.jsonl").string();
    const auto out = (dir / "gen").string();

    auto first = mole_cli({"generate", "--corpus", corpus, "--out", out, "--mock", "--seed", "4"});
    REQUIRE(first.code == 0);
    const auto pairs_bytes = read_file(dir / "gen" / "pairs.jsonl");
    CHECK(load_pairs(dir / "gen" / "pairs.jsonl").size() == 5);
    auto summary = json::parse(read_file(dir / "gen" / "summary.json"));
    CHECK(summary["pairs_built"] == 5);
    CHECK(summary["fresh_completions"] == 10);
    CHECK(summary["seed"] == 4);
    int assigned = 0;
    for (auto& [k, v] : summary["assigned_per_facet"].items()) assigned += v.get<int>();
    CHECK(assigned == 5);
    CHECK(read_file(dir / "gen" / "skipped.jsonl").empty());

    auto second = mole_cli({"generate", "--corpus", corpus, "--out", out, "--mock", "--seed", "4"});
    REQUIRE(second.code == 0);
    CHECK(read_file(dir / "gen" / "pairs.jsonl") == pairs_bytes);
    summary = json::parse(read_file(dir / "gen" / "summary.json"));
    CHECK(summary["fresh_completions"] == 0);
    CHECK(summary["cached_completions"] == 10);

    for (const auto& p : load_pairs(dir / "gen" / "pairs.jsonl")) {
        CHECK(p.provenance.seed == 4);
        CHECK(p.provenance.config_hash == summary["config_hash"].get<std::string>());
    }
}

TEST_CASE("generate: missing corpus names the path") {
    TempDir dir;
    auto r = mole_cli({"generate", "--corpus", (dir / "absent.jsonl").string(), "--out", (dir / "o").string(), "--mock"});
    CHECK(r.code != 0);
    CHECK(r.err.find("absent.jsonl") != std::string::npos);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("generate without credentials fails cleanly") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "3", "--seed", "1", "--out", dir.path().string()}).code == 0);
    auto r = mole_cli({"generate", "--corpus", (dir / "corpus.jsonl").string(), "--out", (dir / "o").string(),
                       "--api-key-env", "MOLE_TEST_SURELY_UNSET_VARIABLE"});
    CHECK(r.code == 1);
    CHECK(r.err.find("MOLE_TEST_SURELY_UNSET_VARIABLE") != std::string::npos);
}

TEST_CASE("train: C = 0 and omitted pairs give the same loss trajectory") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "40", "--seed", "2", "--out", dir.path().string()}).code == 0);
    const auto corpus = (dir / "corpus.jsonl").string();
    REQUIRE(mole_cli({"generate", "--corpus", corpus, "--out", (dir / "gen").string(), "--mock"}).code == 0);
    const auto pairs = (dir / "gen" / "pairs.jsonl").string();
    const std::vector<std::string> common{"--epochs", "3", "--dim", "6", "--vocab", "256", "--seed", "5"};

    auto args = [&](std::vector<std::string> a) {
        a.insert(a.end(), common.begin(), common.end());
        return a;
    };
    REQUIRE(mole_cli(args({"train", "--corpus", corpus, "--pairs", pairs, "--C", "0", "--out", (dir / "c0").string()})).code == 0);
    REQUIRE(mole_cli(args({"train", "--corpus", corpus, "--out", (dir / "sup").string()})).code == 0);

    auto a = read_jsonl(dir / "c0" / "train_log.jsonl");
    auto b = read_jsonl(dir / "sup" / "train_log.jsonl");
    REQUIRE(a.size() == 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t e = 0; e < a.size(); ++e) {
        CHECK(a[e]["epoch"] == b[e]["epoch"]);
        CHECK(a[e]["L"].get<double>() == b[e]["L"].get<double>());
        CHECK(a[e]["L_cls"].get<double>() == b[e]["L_cls"].get<double>());
        CHECK(a[e]["seed"] == 5);
    }
    auto ca = evaluator::load_checkpoint(dir / "c0" / "checkpoint.json");
    auto cb = evaluator::load_checkpoint(dir / "sup" / "checkpoint.json");
    CHECK(ca.params == cb.params);
}

TEST_CASE("train: same config twice gives identical checkpoints; C defaults to 10") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "30", "--seed", "3", "--out", dir.path().string()}).code == 0);
    const auto corpus = (dir / "corpus.jsonl").string();
    for (const char* name : {"r1", "r2"}) {
        REQUIRE(mole_cli({"train", "--corpus", corpus, "--epochs", "2", "--dim", "4", "--vocab", "128", "--out",
                          (dir / name).string()})
                    .code == 0);
    }
    CHECK(read_file(dir / "r1" / "checkpoint.json") == read_file(dir / "r2" / "checkpoint.json"));
    auto cfg = json::parse(read_file(dir / "r1" / "effective_config.json"));
    CHECK(cfg["config"]["train"]["C"].get<double>() == 10.0);
    CHECK(cli::default_train_config().C == 10.0);
    auto meta = json::parse(evaluator::load_checkpoint(dir / "r1" / "checkpoint.json").metadata_json);
    CHECK(meta["config_hash"] == cfg["config_hash"]);
    CHECK(meta["train"]["C"].get<double>() == 10.0);
}

TEST_CASE("train: divergence exits with the epoch") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "20", "--seed", "3", "--out", dir.path().string()}).code == 0);
    auto r = mole_cli({"train", "--corpus", (dir / "corpus.jsonl").string(), "--lr", "1e200", "--init-scale", "1",
                       "--epochs", "3", "--dim", "4", "--vocab", "64", "--out", (dir / "t").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("evaluate: gold-as-predictions gives an all-ones row") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "25", "--seed", "9", "--out", dir.path().string()}).code == 0);
    std::string preds;
    for (const auto& d : load_documents(dir / "corpus.jsonl")) {
        preds += json{{"id", d.id}, {"grade", *d.grade}}.dump() + "\n";
    }
    mole::test::write_file(dir / "gold_preds.jsonl", preds);
    auto r = mole_cli({"evaluate", "--predictions", (dir / "gold_preds.jsonl").string(), "--test",
                       (dir / "corpus.jsonl").string(), "--out", (dir / "ev").string()});
    REQUIRE(r.code == 0);
    auto report = json::parse(read_file(dir / "ev" / "report.json"));
    for (auto key : {"spearman", "kendall", "qwk", "accuracy", "macro_f1"}) {
        CHECK(report[key].get<double>() == doctest::Approx(1.0));
    }
    CHECK(report["accuracy_percent"].get<double>() == doctest::Approx(100.0));
    CHECK(report["f1_per_class"].size() == 5);
    CHECK(metrics::EvalReport::from_json(report).accuracy == 1.0);
    CHECK(r.out.find("1.000   1.000   1.000   100.00") != std::string::npos);
}

TEST_CASE("evaluate: two checkpoints print aligned rows") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "30", "--test-size", "10", "--seed", "4", "--out", dir.path().string()}).code == 0);
    const auto corpus = (dir / "corpus.jsonl").string();
    for (const char* seed : {"1", "2"}) {
        REQUIRE(mole_cli({"train", "--corpus", corpus, "--epochs", "1", "--dim", "4", "--vocab", "128", "--seed", seed,
                          "--out", (dir / (std::string("m") + seed)).string()})
                    .code == 0);
    }
    auto r = mole_cli({"evaluate", "--checkpoint", (dir / "m1" / "checkpoint.json").string(), "--checkpoint",
                       (dir / "m2" / "checkpoint.json").string(), "--test", (dir / "test.jsonl").string(), "--out",
                       (dir / "ev").string()});
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(dir / "ev" / "report_0.json"));
    CHECK(std::filesystem::exists(dir / "ev" / "report_1.json"));

    std::istringstream table(read_file(dir / "ev" / "table.txt"));
    std::vector<std::string> lines;
    for (std::string line; std::getline(table, line);) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].starts_with("Model"));
    CHECK(lines[0].find("ρ") != std::string::npos);
    CHECK(lines[0].find("Acc.(%)") != std::string::npos);
    CHECK(lines[0].find("F1-G0") != std::string::npos);
    CHECK(lines[0].ends_with("Macro-F1"));
    // Data columns start at the same offsets in both rows.
    CHECK(lines[1].size() == lines[2].size());
    CHECK(lines[1].substr(30, 1) != " ");
    CHECK(lines[2].substr(30, 1) != " ");
    CHECK(lines[1][29] == ' ');
    CHECK(lines[2][29] == ' ');
}

TEST_CASE("evaluate: checkpoint mismatch and missing inputs") {
    TempDir dir;
    REQUIRE(mole_cli({"synth", "--size", "10", "--seed", "4", "--out", dir.path().string()}).code == 0);
    mole::test::write_file(dir / "ck.json", R"({"format":"something else"})");
    auto r = mole_cli({"evaluate", "--checkpoint", (dir / "ck.json").string(), "--test",
                       (dir / "corpus.jsonl").string(), "--out", (dir / "ev").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("mismatch") != std::string::npos);

    r = mole_cli({"evaluate", "--test", (dir / "corpus.jsonl").string(), "--out", (dir / "ev").string()});
    CHECK(r.code == 1);
}

TEST_CASE("config file supplies defaults and flags win") {
    TempDir dir;
    mole::test::write_file(dir / "synth.toml", "[synth]\nsize = 12\nseed = 5\n");
    REQUIRE(mole_cli({"--config", (dir / "synth.toml").string(), "synth", "--seed", "6", "--out",
                      (dir / "o").string()})
                .code == 0);
    auto cfg = json::parse(read_file(dir / "o" / "effective_config.json"));
    CHECK(cfg["config"]["size"] == 12);
    CHECK(cfg["seed"] == 6);
}

TEST_CASE("usage errors exit nonzero") {
    CHECK(mole_cli({}).code != 0);
    CHECK(mole_cli({"frobnicate"}).code != 0);
    CHECK(mole_cli({"synth", "--size", "3"}).code != 0);
    CHECK(mole_cli({"--help"}).code == 0);
}

}  // TEST_SUITE cli
