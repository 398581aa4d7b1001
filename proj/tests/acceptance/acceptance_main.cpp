/// @file acceptance_main.cpp
/// @brief End-to-end acceptance checks. Prints one PASS/FAIL line per
/// criterion and exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "gradcheck.hpp"
#include "mole/cli.hpp"
#include "mole/counterfactual.hpp"
#include "mole/evaluator.hpp"
#include "mole/metrics.hpp"
#include "mole/synth.hpp"
#include "mole/text.hpp"
#include "oracles.hpp"
#include "random_instances.hpp"
#include "test_helpers.hpp"

using namespace mole;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kOracleTol = 1e-12;
constexpr double kLossTol = 1e-12;
constexpr double kJointLossTol = 1e-10;
constexpr double kGradStep = 1e-4;
constexpr double kGradRelTol = 1e-3;
constexpr double kGradDenomFloor = 1e-6;
constexpr double kMinRhoGain = 0.02;
constexpr int kOracleInstances = 1000;
constexpr std::size_t kOracleMaxLen = 20;
constexpr int kExperimentSeeds = 5;
constexpr std::size_t kTrainDocs = 500;
constexpr std::size_t kTestDocs = 200;
constexpr double kOracleBudgetS = 10.0;
constexpr double kGradBudgetS = 30.0;
constexpr double kExperimentBudgetS = 300.0;

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kLn5 = 1.6094379124341003746;
constexpr double kLn5Plus10Ln2 = 8.5409097180335534688;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// -----------------------------------------------------------------------------

Outcome metric_oracles() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    std::string worst_metric = "none";
    std::size_t checked = 0;
    auto track = [&](const char* name, double a, double b) {
        const double e = std::abs(a - b);
        ++checked;
        if (e > worst) {
            worst = e;
            worst_metric = name;
        }
    };
    auto two_values = [](const std::vector<int>& xs) {
        return std::any_of(xs.begin(), xs.end(), [&](int x) { return x != xs[0]; });
    };

    for (int t = 0; t < kOracleInstances; ++t) {
        auto inst = test::random_grades(rng, kOracleMaxLen, kNumGrades, 2);
        // Re-draw until both correlations are defined so every instance counts.
        while (!two_values(inst.gold) || !two_values(inst.pred)) inst = test::random_grades(rng, kOracleMaxLen, kNumGrades, 2);
        const auto g = test::as_double(inst.gold);
        const auto p = test::as_double(inst.pred);
        track("spearman", metrics::spearman(g, p), oracle::spearman(g, p));
        track("kendall_tau", metrics::kendall_tau(g, p), oracle::kendall_tau_b(g, p));
        track("qwk", metrics::qwk(inst.gold, inst.pred), oracle::qwk(inst.gold, inst.pred, kNumGrades));
        track("accuracy", metrics::accuracy(inst.gold, inst.pred), oracle::accuracy(inst.gold, inst.pred));
        const auto f1 = metrics::f1_scores(inst.gold, inst.pred);
        const auto f1_ref = oracle::f1(inst.gold, inst.pred, kNumGrades);
        for (int c = 0; c < kNumGrades; ++c) track("f1_scores", f1.per_class[c], f1_ref[c]);

        const auto s = test::random_text(rng, kOracleMaxLen, 8);
        track("ttr", metrics::ttr(s), oracle::ttr(text::word_tokens(s)));

        std::vector<std::string> docs;
        std::vector<std::vector<std::string>> toks;
        const int ndocs = std::uniform_int_distribution<int>(2, 4)(rng);
        for (int k = 0; k < ndocs; ++k) {
            docs.push_back(test::random_text(rng, kOracleMaxLen, 6));
            toks.push_back(text::word_tokens(docs.back()));
        }
        track("self_bleu", metrics::self_bleu(docs), oracle::self_bleu(toks, 4));
    }
    const double secs = seconds_since(t0);
    return {worst <= kOracleTol && secs < kOracleBudgetS,
            fmt("%d instances, %zu comparisons, max abs err %.2e (%s), %.2fs", kOracleInstances, checked, worst,
                worst_metric.c_str(), secs)};
}

Outcome analytic_losses() {
    using namespace evaluator;
    const double ctr0 = ctr_loss(0.0, 0.0);
    ClassDistribution uniform;
    uniform.probabilities.fill(1.0 / kNumGrades);
    const double cls_u = cls_loss(uniform, 3);

    auto params = ModelParams::zeros({64, 4, Activation::tanh});
    std::vector<LabeledExample> labeled{{tokenize("one labeled item", 64), 2}};
    std::vector<PairExample> pairs{{tokenize("rewritten text", 64), tokenize("original text", 64)}};
    const double joint = joint_loss(labeled, pairs, params, 10.0).total;

    const double e1 = std::abs(ctr0 - kLn2), e2 = std::abs(cls_u - kLn5), e3 = std::abs(joint - kLn5Plus10Ln2);
    return {e1 <= kLossTol && e2 <= kLossTol && e3 <= kJointLossTol,
            fmt("|ctr(0)-ln2|=%.1e |cls(uniform)-ln5|=%.1e |joint-(ln5+10ln2)|=%.1e", e1, e2, e3)};
}

Outcome gradient_check() {
    const auto t0 = Clock::now();
    auto problem = test::tiny_problem(42);
    auto r = test::check_gradient(problem, 10.0, kGradStep, kGradDenomFloor);
    const double secs = seconds_since(t0);
    return {r.max_relative_error <= kGradRelTol && secs < kGradBudgetS,
            fmt("d=8 vocab=50 C=10, %zu coords, max rel err %.2e at %s[%zu], %.2fs", r.coordinates,
                r.max_relative_error, r.worst_block.c_str(), r.worst_index, secs)};
}

Outcome ablation_identity() {
    auto corpus = synth::synthesize({120, 8});
    llm::MockClient mock;
    counterfactual::GenerationConfig gc;
    gc.parallelism = 1;
    auto ds = counterfactual::build_contrastive_dataset(corpus.documents, mock, gc);

    auto cfg = cli::default_train_config();
    cfg.C = 0.0;
    cfg.epochs = 5;
    cfg.seed = 11;
    auto with_pairs = evaluator::train(std::span<const Document>(corpus.documents), std::span<const ContrastivePair>(ds.pairs), cfg);
    auto without = evaluator::train(std::span<const Document>(corpus.documents), std::span<const ContrastivePair>(), cfg);
    const bool same = with_pairs.params == without.params;
    return {same, fmt("%zu pairs, C=0 vs no pairs over %d epochs: parameters %s", ds.pairs.size(), cfg.epochs,
                      same ? "bit-identical" : "differ")};
}

Outcome synthetic_experiment() {
    const auto t0 = Clock::now();
    double sum_joint = 0, sum_sup = 0;
    std::ostringstream per_seed;
    for (int s = 0; s < kExperimentSeeds; ++s) {
        auto corpus = synth::synthesize({kTrainDocs + kTestDocs, 1000 + s});
        std::span<const Document> all(corpus.documents);
        auto train_docs = all.first(kTrainDocs);
        auto test_docs = all.subspan(kTrainDocs);

        llm::MockClient mock;
        counterfactual::GenerationConfig gc;
        gc.seed = s;
        gc.parallelism = 1;
        auto ds = counterfactual::build_contrastive_dataset(train_docs, mock, gc);

        auto cfg = cli::default_train_config();
        cfg.seed = s;
        auto rho = [&](std::span<const ContrastivePair> pairs) {
            auto r = evaluator::train(train_docs, pairs, cfg);
            std::vector<double> gold, pred;
            for (const auto& d : test_docs) {
                gold.push_back(*d.grade);
                pred.push_back(evaluator::predict_grade(d, r.params).grade);
            }
            try {
                return metrics::spearman(gold, pred);
            } catch (const metrics::UndefinedMetric&) {
                return 0.0;  // constant predictions carry no ranking signal
            }
        };
        const double joint = rho(ds.pairs);
        const double sup = rho({});
        sum_joint += joint;
        sum_sup += sup;
        per_seed << fmt(" [%d: %.3f vs %.3f]", s, joint, sup);
    }
    const double secs = seconds_since(t0);
    const double gain = (sum_joint - sum_sup) / kExperimentSeeds;
    return {gain >= kMinRhoGain && secs < kExperimentBudgetS,
            fmt("mean rho joint %.4f vs supervised %.4f, gain %.4f (need >= %.2f), %.1fs;", sum_joint / kExperimentSeeds,
                sum_sup / kExperimentSeeds, gain, kMinRhoGain, secs) +
                per_seed.str()};
}

Outcome prompt_fidelity() {
    const Document doc{"h1", "Harbor", "The harbor was quiet. Gulls circled the empty boats.", 2, {}};
    const auto dir = std::filesystem::path(MOLE_GOLDEN_DIR);
    const auto issue = counterfactual::render_issue_prompt(doc, Facet::coherence);
    const auto rewrite = counterfactual::render_rewrite_prompt(doc, "lacks transitions");
    const bool a = issue == test::read_file(dir / "issue_prompt_coherence_grade2.txt");
    const bool b = rewrite == test::read_file(dir / "rewrite_prompt_lacks_transitions.txt");
    const bool c = issue.find("Given an article quality assessment system") != std::string::npos;
    const bool d = rewrite.find("**Rewritten Article:**") != std::string::npos;
    return {a && b && c && d, fmt("issue golden %s, rewrite golden %s, marker strings %s", a ? "match" : "DIFFER",
                                  b ? "match" : "DIFFER", c && d ? "present" : "MISSING")};
}

Outcome pipeline_idempotence() {
    test::TempDir dir;
    std::ostringstream sink;
    cli::SynthOptions so;
    so.size = 25;
    so.seed = 5;
    so.out = dir.path();
    cli::cmd_synth(so, sink);

    cli::GenerateOptions go;
    go.corpus = dir / "corpus.jsonl";
    go.out = dir / "gen";
    go.mock = true;
    go.seed = 2;
    auto first_client = std::make_shared<llm::MockClient>();
    cli::cmd_generate(go, sink, first_client);
    const auto first = test::read_file(dir / "gen" / "pairs.jsonl");

    auto second_client = std::make_shared<llm::MockClient>();
    cli::cmd_generate(go, sink, second_client);
    const auto second = test::read_file(dir / "gen" / "pairs.jsonl");

    const bool same = !first.empty() && first == second;
    const bool silent = second_client->call_count() == 0;
    return {same && silent, fmt("pairs files %s (%zu bytes); calls: first run %zu, warm rerun %zu",
                                same ? "byte-identical" : "DIFFER", first.size(), first_client->call_count(),
                                second_client->call_count())};
}

Outcome determinism() {
    test::TempDir dir;
    std::ostringstream sink;
    cli::SynthOptions so;
    so.size = 60;
    so.seed = 13;
    so.out = dir / "a";
    cli::cmd_synth(so, sink);
    so.out = dir / "b";
    cli::cmd_synth(so, sink);
    const bool synth_same = test::read_file(dir / "a" / "corpus.jsonl") == test::read_file(dir / "b" / "corpus.jsonl") &&
                            test::read_file(dir / "a" / "ground_truth.jsonl") == test::read_file(dir / "b" / "ground_truth.jsonl");

    auto docs = load_documents(dir / "a" / "corpus.jsonl");
    const bool facets_same = counterfactual::assign_facets(docs, 77) == counterfactual::assign_facets(docs, 77);

    llm::MockClient mock;
    auto ds = counterfactual::build_contrastive_dataset(docs, mock, counterfactual::GenerationConfig{});
    auto cfg = cli::default_train_config();
    cfg.epochs = 5;
    cfg.seed = 3;
    auto r1 = evaluator::train(std::span<const Document>(docs), std::span<const ContrastivePair>(ds.pairs), cfg);
    auto r2 = evaluator::train(std::span<const Document>(docs), std::span<const ContrastivePair>(ds.pairs), cfg);
    const bool train_same = r1.params == r2.params && r1.log == r2.log;
    return {synth_same && facets_same && train_same,
            fmt("synth %s, assign_facets %s, train %s", synth_same ? "identical" : "DIFFER",
                facets_same ? "identical" : "DIFFER", train_same ? "bit-identical" : "DIFFER")};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"metric oracle equivalence", metric_oracles},
        {"analytic loss values", analytic_losses},
        {"gradient correctness", gradient_check},
        {"ablation identity", ablation_identity},
        {"synthetic joint-vs-supervised experiment", synthetic_experiment},
        {"prompt fidelity", prompt_fidelity},
        {"pipeline idempotence", pipeline_idempotence},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
