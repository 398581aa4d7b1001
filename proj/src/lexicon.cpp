/// @file lexicon.cpp
/// @brief Fixed word pools for synthetic documents and the mock rewriter.

#include "mole/lexicon.hpp"

#include <algorithm>
#include <unordered_set>

#include "mole/text.hpp"

namespace mole::lexicon {

namespace {

struct FacetWords {
    std::vector<std::string> flaws;
    std::vector<std::string> strengths;
    std::string repair;
};

const std::array<FacetWords, 5>& facet_words() {
    static const std::array<FacetWords, 5> words = {{
        {{"meanwhile", "randomly", "unrelated", "anyway", "tangent", "jumbled", "abruptly",
          "disjointed", "confusingly", "haphazard", "rambling", "scattered", "muddled", "incoherent",
          "digress", "aside", "regardless", "somehow", "whatever", "sidetrack"},
         {"therefore", "consequently", "firstly", "secondly", "finally", "thus", "structured",
          "logically", "transition", "follows", "outline", "sequence", "organized", "clearly",
          "connects", "builds", "summarizes", "framework", "steps", "flow"},
         "Therefore the outline follows a structured sequence and logically connects the steps."},
        {{"vague", "useless", "irrelevant", "unverified", "rumor", "hearsay", "impractical",
          "pointless", "biased", "onesided", "guesswork", "unsupported", "misleading", "trivial",
          "fluff", "hype", "speculative", "dubious", "unsourced", "hollow"},
         {"practical", "guide", "tips", "solution", "reliable", "evidence", "checklist", "actionable",
          "balanced", "answers", "howto", "recommend", "tested", "verified", "procedure", "advice",
          "benefit", "toolkit", "remedy", "plan"},
         "This practical guide gives reliable tips and an actionable checklist."},
        {{"cliche", "generic", "boilerplate", "template", "copied", "stale", "predictable", "routine",
          "bland", "formulaic", "derivative", "rehashed", "typical", "ordinary", "mundane",
          "repetitive", "standard", "commonplace", "dull", "unoriginal"},
         {"novel", "original", "imaginative", "inventive", "unique", "fresh", "vivid", "metaphor",
          "storytelling", "twist", "inspired", "visionary", "playful", "surprising", "ingenious",
          "daring", "whimsical", "resourceful", "innovative", "artful"},
         "An original metaphor and a surprising twist give the piece vivid storytelling."},
        {{"unknown", "unclear", "missing", "someone", "something", "stuff", "things", "roughly",
          "perhaps", "maybe", "inaccurate", "wrong", "outdated", "incomplete", "shallow", "sparse",
          "empty", "nothing", "guessed", "approximate"},
         {"statistics", "data", "percent", "study", "measured", "survey", "report", "figures",
          "research", "detailed", "specific", "accurate", "documented", "census", "analysis",
          "findings", "sample", "dataset", "published", "quantified"},
         "A detailed study reports accurate figures from the measured data."},
        {{"boring", "tedious", "dry", "monotonous", "lifeless", "wordy", "dense", "sluggish", "flat",
          "plodding", "dreary", "stiff", "droning", "longwinded", "yawn", "tiresome", "bloated",
          "verbose", "inaccessible", "jargon"},
         {"lively", "captivating", "compelling", "exciting", "photo", "video", "interactive",
          "anecdote", "friendly", "accessible", "conversational", "gripping", "delightful",
          "illustrated", "vibrant", "hook", "relatable", "fun", "charming", "spirited"},
         "A lively anecdote and an illustrated photo make the story captivating."},
    }};
    return words;
}

const FacetWords& of(Facet facet) { return facet_words()[static_cast<std::size_t>(facet)]; }

std::vector<std::string> make_neutral_words() {
    static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    std::vector<std::string> syllables;
    for (char c : kConsonants) {
        for (char v : kVowels) syllables.push_back(std::string{c, v});
    }
    const std::size_t n = syllables.size();  // 70
    std::vector<std::string> words;
    words.reserve(800);
    for (std::size_t i = 0; i < 800; ++i) {
        std::size_t idx = (i * 1031 + 17) % (n * n);
        words.push_back(syllables[idx % n] + syllables[idx / n] + "n");
    }
    return words;
}

}  // namespace

std::span<const std::string> flaw_markers(Facet facet) { return of(facet).flaws; }

std::span<const std::string> strength_words(Facet facet) { return of(facet).strengths; }

std::span<const std::string> neutral_words() {
    static const std::vector<std::string> words = make_neutral_words();
    return words;
}

std::span<const std::string> topics() {
    static const std::vector<std::string> words = {
        "garden",  "river",    "market",  "harbor",   "library", "orchard", "railway", "bakery",
        "museum",  "festival", "island",  "mountain", "village", "factory", "kitchen", "bridge",
        "forest",  "stadium",  "airport", "theater",  "canyon",  "glacier", "desert",  "vineyard",
        "clinic",  "school",   "workshop", "lighthouse", "observatory", "aquarium"};
    return words;
}

std::string_view repair_sentence(Facet facet) { return of(facet).repair; }

std::span<const std::string> fact_pool() {
    static const std::vector<std::string> facts = {
        "The published survey lists specific statistics for the sample.",
        "Research findings quantified the change in percent.",
        "The documented analysis cites census figures from the dataset."};
    return facts;
}

bool has_flaw_marker(std::string_view sentence, Facet facet) {
    const auto& flaws = of(facet).flaws;
    for (const auto& tok : text::word_tokens(sentence)) {
        if (std::find(flaws.begin(), flaws.end(), tok) != flaws.end()) return true;
    }
    return false;
}

}  // namespace mole::lexicon
