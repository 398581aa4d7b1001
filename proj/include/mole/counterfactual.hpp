/// @file counterfactual.hpp
/// @brief Facet assignment, the two-stage issue/rewrite prompting protocol,
/// and contrastive dataset assembly.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mole/corpus.hpp"
#include "mole/llm_client.hpp"

namespace mole::counterfactual {

struct FacetAssignment {
    std::string document_id;
    Facet facet = Facet::coherence;
    std::int64_t seed = 0;

    bool operator==(const FacetAssignment&) const = default;
};

struct GenerationConfig {
    std::string model = "gpt-3.5-turbo";
    std::int64_t seed = 0;
    double stage_a_temperature = 0.0;
    double stage_b_temperature = 0.7;
    /// Bodies longer than this (in word tokens) are cut at a sentence boundary.
    int max_body_tokens = 2048;
    /// Completion budget per request.
    int max_completion_tokens = 2048;
    /// Concurrent documents in flight.
    int parallelism = 4;
    /// Recorded in provenance; computed by the caller from the effective config.
    std::string config_hash;
};

struct SkipRecord {
    std::size_t index = 0;
    std::string document_id;
    std::string stage;  ///< "A", "B", or "input"
    std::string reason;

    bool operator==(const SkipRecord&) const = default;
};

using PairOutcome = std::variant<ContrastivePair, SkipRecord>;

struct DatasetSummary {
    std::size_t documents = 0;
    std::size_t pairs_built = 0;
    std::size_t skipped = 0;
    std::size_t fresh_completions = 0;  ///< responses not served from cache
    std::size_t cached_completions = 0;
    std::map<Facet, std::size_t> assigned_per_facet;
    std::map<Facet, std::size_t> built_per_facet;
};

struct Dataset {
    std::vector<ContrastivePair> pairs;  ///< corpus order, skipped documents omitted
    std::vector<SkipRecord> skipped;
    DatasetSummary summary;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

/// Throws GenerationError if the document has no grade.
std::string render_issue_prompt(const Document& document, Facet facet);

/// Throws GenerationError if `issues` is empty or whitespace.
std::string render_rewrite_prompt(const Document& document, std::string_view issues);

/// One uniformly drawn facet per document, in corpus order. Throws
/// GenerationError on an empty corpus.
std::vector<FacetAssignment> assign_facets(std::span<const Document> corpus, std::int64_t seed);

/// Cuts `body` after the last whole sentence that fits within `max_tokens`
/// word tokens. A first sentence that alone exceeds the budget is cut at a
/// word boundary. Returns the body unchanged when it already fits.
std::string truncate_body(std::string_view body, int max_tokens, bool* truncated = nullptr);

/// Runs stage A (issues) then stage B (rewrite). LLM failures in either
/// stage, or an empty rewrite, yield a SkipRecord instead of a pair.
PairOutcome generate_pair(const Document& document, Facet facet, llm::LlmClient& client,
                          const GenerationConfig& config, std::size_t index = 0);

/// Assigns facets and generates one pair per document under bounded
/// parallelism. Output order follows corpus order. Throws GenerationError if
/// the corpus is empty or any document is unlabeled.
Dataset build_contrastive_dataset(std::span<const Document> corpus, llm::LlmClient& client,
                                  const GenerationConfig& config);

}  // namespace mole::counterfactual
