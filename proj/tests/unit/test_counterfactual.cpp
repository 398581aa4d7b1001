#include <doctest.h>

#include <atomic>

#include "mole/counterfactual.hpp"
#include "mole/templates.hpp"
#include "mole/text.hpp"
#include "test_helpers.hpp"

using namespace mole;
using namespace mole::counterfactual;
using mole::test::read_file;
using mole::test::TempDir;

namespace {

std::string golden(const char* name) { return read_file(std::filesystem::path(MOLE_GOLDEN_DIR) / name); }

const Document kHarbor{"h1", "Harbor", "The harbor was quiet. Gulls circled the empty boats.", 2, {}};

std::vector<Document> labeled(std::size_t n) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        docs.push_back(Document{"doc-" + std::to_string(i), "T" + std::to_string(i),
                                "Sentence one of " + std::to_string(i) + ". Another sentence here.",
                                static_cast<int>(i % 5), {}});
    }
    return docs;
}

/// Fails every stage-A prompt with a transient error; forwards the rest to a mock.
class FailingStage : public llm::Transport {
public:
    explicit FailingStage(std::string_view prefix) : prefix_(prefix) {}
    std::string send(const llm::LlmRequest& r) override {
        ++calls;
        if (r.prompt.starts_with(prefix_)) throw llm::TransientError("HTTP 503");
        return mock_.complete(r).text;
    }
    std::atomic<int> calls{0};

private:
    std::string prefix_;
    llm::MockClient mock_;
};

}  // namespace

TEST_SUITE("counterfactual") {

TEST_CASE("issue prompt byte-matches the golden rendering") {
    const auto p = render_issue_prompt(kHarbor, Facet::coherence);
    CHECK(p == golden("issue_prompt_coherence_grade2.txt"));
    CHECK(p.starts_with("Given an article quality assessment system"));
    CHECK(p.find("each article has a quality grade of 0-4 grades") != std::string::npos);
    CHECK(p.find("the coherence of the article") != std::string::npos);
    CHECK(p.find("**Article Quality Grades:**\n\n2\n") != std::string::npos);
}

TEST_CASE("rewrite prompt byte-matches the golden rendering") {
    const auto p = render_rewrite_prompt(kHarbor, "lacks transitions");
    CHECK(p == golden("rewrite_prompt_lacks_transitions.txt"));
    CHECK(p.ends_with("**Rewritten Article:**"));
    CHECK(p.find("**Issues:**\n\nlacks transitions") != std::string::npos);
}

TEST_CASE("template assets carry the expected slots") {
    for (auto slot : {"{dim_name}", "{dim_description}", "{article}", "{label}"}) {
        CHECK(templates::kIssuePrompt.find(slot) != std::string_view::npos);
    }
    CHECK(templates::kIssuePrompt.find("{title}") == std::string_view::npos);
    for (auto slot : {"{article}", "{issues}"}) CHECK(templates::kRewritePrompt.find(slot) != std::string_view::npos);
}

TEST_CASE("issue prompt ignores the title and needs a grade") {
    auto untitled = kHarbor;
    untitled.title = "";
    CHECK(render_issue_prompt(untitled, Facet::coherence) == render_issue_prompt(kHarbor, Facet::coherence));
    auto unlabeled = kHarbor;
    unlabeled.grade.reset();
    CHECK_THROWS_AS(render_issue_prompt(unlabeled, Facet::coherence), GenerationError);
}

TEST_CASE("rendering is pure") {
    CHECK(render_issue_prompt(kHarbor, Facet::engagingness) == render_issue_prompt(kHarbor, Facet::engagingness));
    CHECK(render_rewrite_prompt(kHarbor, "x") == render_rewrite_prompt(kHarbor, "x"));
}

TEST_CASE("rewrite prompt: braces in issues are substituted once") {
    const auto p = render_rewrite_prompt(kHarbor, "see {article} and {issues}");
    CHECK(p.find("**Issues:**\n\nsee {article} and {issues}\n") != std::string::npos);
    CHECK(p.find("**Article:**\n\nThe harbor was quiet.") != std::string::npos);
}

TEST_CASE("rewrite prompt rejects empty issues") {
    CHECK_THROWS_AS(render_rewrite_prompt(kHarbor, ""), GenerationError);
    CHECK_THROWS_AS(render_rewrite_prompt(kHarbor, " \n\t"), GenerationError);
}

TEST_CASE("assign_facets determinism and cardinality") {
    auto docs = labeled(50);
    CHECK(assign_facets(docs, 9) == assign_facets(docs, 9));
    CHECK(assign_facets(docs, 9) != assign_facets(docs, 10));
    auto one = assign_facets(std::span(docs).first(1), 3);
    REQUIRE(one.size() == 1);
    CHECK(one[0].document_id == "doc-0");
    CHECK(std::find(kAllFacets.begin(), kAllFacets.end(), one[0].facet) != kAllFacets.end());
    std::vector<Document> none;
    CHECK_THROWS_AS(assign_facets(none, 1), GenerationError);
}

TEST_CASE("assign_facets is uniform over 100k documents") {
    std::vector<Document> docs(100000, Document{"x", "", "b", 1, {}});
    for (std::int64_t seed : {0, 1, 12345, -7}) {
        std::map<Facet, int> counts;
        for (const auto& a : assign_facets(docs, seed)) ++counts[a.facet];
        REQUIRE(counts.size() == 5);
        for (const auto& [f, c] : counts) {
            const double share = c / 100000.0;
            CHECK(share >= 0.19);
            CHECK(share <= 0.21);
        }
    }
}

TEST_CASE("truncate_body") {
    bool truncated = true;
    CHECK(truncate_body("One two. Three four.", 10, &truncated) == "One two. Three four.");
    CHECK_FALSE(truncated);
    CHECK(truncate_body("One two. Three four five.", 3, &truncated) == "One two.");
    CHECK(truncated);
    CHECK(truncate_body("One two three four five.", 3, &truncated) == "One two three");
    CHECK(truncated);
}

TEST_CASE("generate_pair with a fixed mock passes outputs through verbatim") {
    const auto issue_prompt = render_issue_prompt(kHarbor, Facet::creativeness);
    const auto rewrite_prompt = render_rewrite_prompt(kHarbor, "ISSUES TEXT");
    llm::MockClient mock({{issue_prompt, "ISSUES TEXT"}, {rewrite_prompt, "REWRITTEN BODY"}});
    GenerationConfig cfg;
    cfg.seed = 5;
    cfg.config_hash = "abc";
    auto outcome = generate_pair(kHarbor, Facet::creativeness, mock, cfg);
    REQUIRE(std::holds_alternative<ContrastivePair>(outcome));
    const auto& pair = std::get<ContrastivePair>(outcome);
    CHECK(pair.issues == "ISSUES TEXT");
    CHECK(pair.rewritten.body == "REWRITTEN BODY");
    CHECK_FALSE(pair.rewritten.grade.has_value());
    CHECK(pair.rewritten.id != pair.original.id);
    CHECK(pair.original == kHarbor);
    CHECK(pair.facet == Facet::creativeness);
    CHECK(&pair.higher() == &pair.rewritten);
    CHECK(pair.provenance.model == cfg.model);
    CHECK(pair.provenance.template_version == templates::kVersion);
    CHECK(pair.provenance.issue_prompt_sha256 == text::sha256_hex(issue_prompt));
    CHECK(pair.provenance.rewrite_prompt_sha256 == text::sha256_hex(rewrite_prompt));
    CHECK(pair.provenance.seed == 5);
    CHECK(pair.provenance.config_hash == "abc");
    CHECK(pair.provenance.stage_b_temperature == cfg.stage_b_temperature);
    CHECK_FALSE(pair.provenance.truncated);
    CHECK_NOTHROW(validate(pair));
}

TEST_CASE("generate_pair: stage A failure after retries yields one stage-A skip") {
    auto transport = std::make_shared<FailingStage>("Given an article quality");
    llm::RetryingClient client(transport, llm::RetryPolicy{3}, {}, [](std::chrono::milliseconds) {});
    auto outcome = generate_pair(kHarbor, Facet::coherence, client, GenerationConfig{}, 7);
    REQUIRE(std::holds_alternative<SkipRecord>(outcome));
    const auto& skip = std::get<SkipRecord>(outcome);
    CHECK(skip.stage == "A");
    CHECK(skip.index == 7);
    CHECK(skip.document_id == "h1");
    CHECK(transport->calls == 3);
}

TEST_CASE("generate_pair: stage B failure and empty rewrite") {
    auto transport = std::make_shared<FailingStage>("The given article has");
    llm::RetryingClient client(transport, llm::RetryPolicy{2}, {}, [](std::chrono::milliseconds) {});
    auto outcome = generate_pair(kHarbor, Facet::usefulness, client, GenerationConfig{});
    REQUIRE(std::holds_alternative<SkipRecord>(outcome));
    CHECK(std::get<SkipRecord>(outcome).stage == "B");

    const auto issue_prompt = render_issue_prompt(kHarbor, Facet::usefulness);
    llm::MockClient empty({{issue_prompt, "issues"}, {render_rewrite_prompt(kHarbor, "issues"), "  "}});
    outcome = generate_pair(kHarbor, Facet::usefulness, empty, GenerationConfig{});
    REQUIRE(std::holds_alternative<SkipRecord>(outcome));
    CHECK(std::get<SkipRecord>(outcome).stage == "B");
}

TEST_CASE("generate_pair truncates long bodies and records it") {
    GenerationConfig cfg;
    cfg.max_body_tokens = 4;
    llm::MockClient mock;
    auto outcome = generate_pair(kHarbor, Facet::usefulness, mock, cfg);
    REQUIRE(std::holds_alternative<ContrastivePair>(outcome));
    const auto& pair = std::get<ContrastivePair>(outcome);
    CHECK(pair.provenance.truncated);
    CHECK(pair.original.body == "The harbor was quiet.");
}

TEST_CASE("build_contrastive_dataset: 10 docs, all-success mock") {
    auto docs = labeled(10);
    llm::MockClient mock;
    GenerationConfig cfg;
    cfg.seed = 21;
    auto ds = build_contrastive_dataset(docs, mock, cfg);
    REQUIRE(ds.pairs.size() == 10);
    CHECK(ds.skipped.empty());
    const auto assignments = assign_facets(docs, 21);
    std::map<Facet, std::size_t> expected;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(ds.pairs[i].original.id == docs[i].id);
        CHECK(ds.pairs[i].facet == assignments[i].facet);
        ++expected[assignments[i].facet];
    }
    CHECK(ds.summary.assigned_per_facet == expected);
    CHECK(ds.summary.built_per_facet == expected);
    CHECK(ds.summary.pairs_built == 10);
    CHECK(ds.summary.fresh_completions == 20);
}

TEST_CASE("build_contrastive_dataset: warm cache gives identical pairs and zero calls") {
    TempDir dir;
    auto docs = labeled(12);
    GenerationConfig cfg;
    cfg.seed = 3;

    auto mock1 = std::make_shared<llm::MockClient>();
    llm::CachingClient cold(mock1, std::make_shared<llm::DiskCache>(dir / "cache"));
    auto first = build_contrastive_dataset(docs, cold, cfg);

    auto mock2 = std::make_shared<llm::MockClient>();
    llm::CachingClient warm(mock2, std::make_shared<llm::DiskCache>(dir / "cache"));
    auto second = build_contrastive_dataset(docs, warm, cfg);

    CHECK(first.pairs == second.pairs);
    CHECK(mock2->call_count() == 0);
    CHECK(second.summary.fresh_completions == 0);
    CHECK(second.summary.cached_completions == 24);
}

TEST_CASE("build_contrastive_dataset: partial failures become skips in order") {
    auto docs = labeled(6);
    class FlakyEven : public llm::LlmClient {
    public:
        llm::LlmResponse complete(const llm::LlmRequest& r) override {
            if (r.prompt.find("Sentence one of 2.") != std::string::npos ||
                r.prompt.find("Sentence one of 4.") != std::string::npos) {
                throw llm::RetriesExhausted(3, "HTTP 503");
            }
            return mock.complete(r);
        }
        llm::MockClient mock;
    } client;
    GenerationConfig cfg;
    cfg.parallelism = 3;
    auto ds = build_contrastive_dataset(docs, client, cfg);
    REQUIRE(ds.pairs.size() == 4);
    REQUIRE(ds.skipped.size() == 2);
    CHECK(ds.skipped[0].index == 2);
    CHECK(ds.skipped[1].index == 4);
    CHECK(ds.skipped[0].stage == "A");
    CHECK(ds.pairs[2].original.id == "doc-3");
    CHECK(ds.summary.skipped == 2);
}

TEST_CASE("build_contrastive_dataset: precondition errors") {
    llm::MockClient mock;
    std::vector<Document> none;
    CHECK_THROWS_AS(build_contrastive_dataset(none, mock, GenerationConfig{}), GenerationError);
    auto docs = labeled(3);
    docs[1].grade.reset();
    CHECK_THROWS_AS(build_contrastive_dataset(docs, mock, GenerationConfig{}), GenerationError);
}

TEST_CASE("pair ordering convention holds across a dataset") {
    auto docs = labeled(20);
    llm::MockClient mock;
    for (const auto& p : build_contrastive_dataset(docs, mock, GenerationConfig{}).pairs) {
        CHECK(&p.higher() == &p.rewritten);
        CHECK(&p.lower() == &p.original);
        CHECK(p.original.grade.has_value());
        CHECK_FALSE(p.rewritten.grade.has_value());
    }
}

}  // TEST_SUITE counterfactual
