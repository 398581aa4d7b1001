/// @file counterfactual.cpp
/// @brief Two-stage counterfactual pair generation.

#include "mole/counterfactual.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <optional>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "mole/templates.hpp"
#include "mole/text.hpp"

namespace mole::counterfactual {

std::string render_issue_prompt(const Document& document, Facet facet) {
    if (!document.grade) {
        throw GenerationError("document '" + document.id + "' has no grade; the issue prompt needs one");
    }
    return templates::render(templates::kIssuePrompt,
                             {{"dim_name", std::string(facet_name(facet))},
                              {"dim_description", std::string(facet_description(facet))},
                              {"article", document.body},
                              {"label", std::to_string(*document.grade)}});
}

std::string render_rewrite_prompt(const Document& document, std::string_view issues) {
    if (text::trim(issues).empty()) {
        throw GenerationError("issues text for document '" + document.id + "' is empty");
    }
    return templates::render(templates::kRewritePrompt,
                             {{"article", document.body}, {"issues", std::string(issues)}});
}

std::vector<FacetAssignment> assign_facets(std::span<const Document> corpus, std::int64_t seed) {
    if (corpus.empty()) throw GenerationError("cannot assign facets to an empty corpus");
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::uniform_int_distribution<std::size_t> pick(0, kAllFacets.size() - 1);
    std::vector<FacetAssignment> out;
    out.reserve(corpus.size());
    for (const auto& doc : corpus) out.push_back({doc.id, kAllFacets[pick(rng)], seed});
    return out;
}

std::string truncate_body(std::string_view body, int max_tokens, bool* truncated) {
    if (truncated) *truncated = false;
    const auto limit = static_cast<std::size_t>(std::max(max_tokens, 1));
    if (text::word_tokens(body).size() <= limit) return std::string(body);

    if (truncated) *truncated = true;
    std::vector<std::string> kept;
    std::size_t used = 0;
    for (auto& sentence : text::split_sentences(body)) {
        const auto n = text::word_tokens(sentence).size();
        if (used + n > limit) {
            if (kept.empty()) {
                // A single overlong sentence: keep its first `limit` words.
                std::string cut;
                std::size_t words = 0;
                std::size_t i = 0;
                while (i < sentence.size() && words < limit) {
                    while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
                    auto j = i;
                    while (j < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[j]))) ++j;
                    if (j > i) {
                        if (!cut.empty()) cut.push_back(' ');
                        cut.append(sentence, i, j - i);
                        words += text::word_tokens(std::string_view(sentence).substr(i, j - i)).size();
                    }
                    i = j;
                }
                kept.push_back(std::move(cut));
            }
            break;
        }
        used += n;
        kept.push_back(std::move(sentence));
    }
    return text::join_sentences(kept);
}

PairOutcome generate_pair(const Document& document, Facet facet, llm::LlmClient& client,
                          const GenerationConfig& config, std::size_t index) {
    auto skip = [&](std::string stage, std::string reason) {
        spdlog::warn("skipping document '{}' (stage {}): {}", document.id, stage, reason);
        return SkipRecord{index, document.id, std::move(stage), std::move(reason)};
    };

    if (!document.grade) return skip("input", "document has no grade");

    bool truncated = false;
    Document source = document;
    source.body = truncate_body(document.body, config.max_body_tokens, &truncated);

    const auto issue_prompt = render_issue_prompt(source, facet);
    llm::LlmResponse issues;
    try {
        issues = client.complete({config.model, issue_prompt, config.stage_a_temperature,
                                  config.max_completion_tokens});
    } catch (const llm::LlmError& e) {
        return skip("A", e.what());
    }
    if (text::trim(issues.text).empty()) return skip("A", "empty issues text");

    const auto rewrite_prompt = render_rewrite_prompt(source, issues.text);
    llm::LlmResponse rewrite;
    try {
        rewrite = client.complete({config.model, rewrite_prompt, config.stage_b_temperature,
                                   config.max_completion_tokens});
    } catch (const llm::LlmError& e) {
        return skip("B", e.what());
    }
    if (text::trim(rewrite.text).empty()) return skip("B", "empty rewrite");

    ContrastivePair pair;
    pair.original = source;
    pair.rewritten = Document{document.id + "#cf-" + std::string(facet_name(facet)), document.title,
                              rewrite.text, std::nullopt, {}};
    pair.facet = facet;
    pair.issues = issues.text;
    pair.provenance = Provenance{config.model,
                                 std::string(templates::kVersion),
                                 text::sha256_hex(issue_prompt),
                                 text::sha256_hex(rewrite_prompt),
                                 rewrite.created_at,
                                 config.stage_a_temperature,
                                 config.stage_b_temperature,
                                 truncated,
                                 config.seed,
                                 config.config_hash};
    return pair;
}

Dataset build_contrastive_dataset(std::span<const Document> corpus, llm::LlmClient& client,
                                  const GenerationConfig& config) {
    if (corpus.empty()) throw GenerationError("corpus is empty");
    for (const auto& doc : corpus) {
        if (!doc.grade) throw GenerationError("document '" + doc.id + "' is unlabeled");
    }
    const auto assignments = assign_facets(corpus, config.seed);

    // Counts every completion routed through the client so the summary can
    // separate fresh work from cache hits.
    class CountingClient : public llm::LlmClient {
    public:
        explicit CountingClient(llm::LlmClient& inner) : inner_(inner) {}
        llm::LlmResponse complete(const llm::LlmRequest& request) override {
            auto r = inner_.complete(request);
            (r.cached ? cached : fresh).fetch_add(1);
            return r;
        }
        std::atomic<std::size_t> fresh{0};
        std::atomic<std::size_t> cached{0};

    private:
        llm::LlmClient& inner_;
    } counting(client);

    std::vector<std::optional<PairOutcome>> outcomes(corpus.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < corpus.size(); i = next.fetch_add(1)) {
            try {
                outcomes[i] = generate_pair(corpus[i], assignments[i].facet, counting, config, i);
            } catch (const std::exception& e) {
                outcomes[i] = SkipRecord{i, corpus[i].id, "internal", e.what()};
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp(config.parallelism, 1, 64));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(workers, corpus.size()); ++w) pool.emplace_back(worker);
        worker();
    }

    Dataset out;
    out.summary.documents = corpus.size();
    for (const auto& a : assignments) ++out.summary.assigned_per_facet[a.facet];
    for (auto& outcome : outcomes) {
        if (auto* pair = std::get_if<ContrastivePair>(&*outcome)) {
            ++out.summary.built_per_facet[pair->facet];
            out.pairs.push_back(std::move(*pair));
        } else {
            out.skipped.push_back(std::get<SkipRecord>(std::move(*outcome)));
        }
    }
    out.summary.pairs_built = out.pairs.size();
    out.summary.skipped = out.skipped.size();
    out.summary.fresh_completions = counting.fresh.load();
    out.summary.cached_completions = counting.cached.load();
    return out;
}

}  // namespace mole::counterfactual
