/// @file mock_client.cpp
/// @brief Network-free chat client and the facet-specific mock rewriter.

#include <algorithm>

#include "mole/lexicon.hpp"
#include "mole/llm_client.hpp"
#include "mole/templates.hpp"
#include "mole/text.hpp"

namespace mole::llm {

namespace {

/// Recovers the value substituted for `{slot}` by locating the literal
/// template text on either side of it. Returns nullopt if the text does not
/// look like a rendering of `tmpl`.
std::optional<std::string> extract_slot(std::string_view rendered, std::string_view tmpl,
                                        std::string_view slot) {
    const std::string marker = "{" + std::string(slot) + "}";
    const auto at = tmpl.find(marker);
    if (at == std::string_view::npos) return std::nullopt;
    const auto prev_close = tmpl.rfind('}', at == 0 ? 0 : at - 1);
    const std::size_t before_start = (prev_close == std::string_view::npos || prev_close >= at) ? 0 : prev_close + 1;
    const auto before = tmpl.substr(before_start, at - before_start);
    const auto after_start = at + marker.size();
    const auto next_open = tmpl.find('{', after_start);
    const auto after = tmpl.substr(after_start, next_open == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : next_open - after_start);

    const auto b = rendered.find(before);
    if (b == std::string_view::npos) return std::nullopt;
    const auto start = b + before.size();
    const auto end = after.empty() ? rendered.size() : rendered.rfind(after);
    if (end == std::string_view::npos || end < start) return std::nullopt;
    return std::string(rendered.substr(start, end - start));
}

bool starts_like(std::string_view prompt, std::string_view tmpl) {
    const auto prefix = tmpl.substr(0, std::min<std::size_t>(tmpl.find('{'), 40));
    return prompt.substr(0, prefix.size()) == prefix;
}

std::string mock_issues(Facet facet, std::string_view article) {
    std::string out = "Facet: " + std::string(facet_name(facet)) + "\n";
    out += "- The " + std::string(facet_name(facet)) + " of the article falls short of the top grade.";
    std::vector<std::string> found;
    const auto markers = lexicon::flaw_markers(facet);
    for (const auto& tok : text::word_tokens(article)) {
        if (std::find(markers.begin(), markers.end(), tok) != markers.end() &&
            std::find(found.begin(), found.end(), tok) == found.end()) {
            found.push_back(tok);
        }
    }
    if (!found.empty()) {
        out += "\n- Weak passages use:";
        for (const auto& w : found) out += " " + w;
    }
    return out;
}

std::optional<Facet> facet_from_issues(std::string_view issues) {
    constexpr std::string_view kTag = "Facet: ";
    const auto at = issues.find(kTag);
    if (at == std::string_view::npos) return std::nullopt;
    auto rest = issues.substr(at + kTag.size());
    auto name = text::trim(rest.substr(0, rest.find('\n')));
    for (Facet f : kAllFacets) {
        if (facet_name(f) == name) return f;
    }
    return std::nullopt;
}

}  // namespace

MockClient::MockClient(std::map<std::string, std::string> fixed) : fixed_(std::move(fixed)) {}

std::size_t MockClient::call_count() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

LlmResponse MockClient::complete(const LlmRequest& request) {
    request.validate();
    {
        std::lock_guard lock(mutex_);
        ++calls_;
    }
    const std::string created{kCreatedAt};
    if (auto it = fixed_.find(request.prompt); it != fixed_.end()) {
        return LlmResponse{it->second, false, 1, created};
    }

    if (starts_like(request.prompt, templates::kIssuePrompt)) {
        auto dim = extract_slot(request.prompt, templates::kIssuePrompt, "dim_name");
        auto article = extract_slot(request.prompt, templates::kIssuePrompt, "article");
        if (dim && article) {
            return LlmResponse{mock_issues(parse_facet(*dim), *article), false, 1, created};
        }
    }
    if (starts_like(request.prompt, templates::kRewritePrompt)) {
        auto article = extract_slot(request.prompt, templates::kRewritePrompt, "article");
        auto issues = extract_slot(request.prompt, templates::kRewritePrompt, "issues");
        if (article && issues) {
            if (auto facet = facet_from_issues(*issues)) {
                Document doc{"mock", "", *article, std::nullopt, {}};
                return LlmResponse{mock_rewriter(*facet, doc), false, 1, created};
            }
        }
    }
    throw LlmError("mock client has no response for this prompt");
}

std::string mock_rewriter(Facet facet, const Document& document) {
    if (text::trim(document.body).empty()) return document.body;

    std::vector<std::string> sentences;
    for (auto& s : text::split_sentences(document.body)) {
        if (!lexicon::has_flaw_marker(s, facet)) sentences.push_back(std::move(s));
    }

    auto append_once = [&](std::string_view sentence) {
        if (std::find(sentences.begin(), sentences.end(), sentence) == sentences.end()) {
            sentences.emplace_back(sentence);
        }
    };

    if (facet == Facet::coherence) {
        std::sort(sentences.begin(), sentences.end());
    } else {
        append_once(lexicon::repair_sentence(facet));
        if (facet == Facet::informativeness) {
            for (const auto& fact : lexicon::fact_pool()) append_once(fact);
        }
    }
    return text::join_sentences(sentences);
}

}  // namespace mole::llm
