/// @file lexicon.hpp
/// @brief Word pools shared by the synthetic corpus generator and the mock
/// rewriter: per-facet flaw markers and strength words, a neutral filler
/// vocabulary, and the fixed repair sentences.

#pragma once

#include <span>
#include <string>
#include <string_view>

#include "mole/corpus.hpp"

namespace mole::lexicon {

/// Words whose presence marks a planted flaw on `facet`.
std::span<const std::string> flaw_markers(Facet facet);

/// Words signalling a strength on `facet`.
std::span<const std::string> strength_words(Facet facet);

/// Quality-neutral filler vocabulary.
std::span<const std::string> neutral_words();

/// Topic nouns used for titles.
std::span<const std::string> topics();

/// Sentence the mock rewriter appends when repairing `facet`.
std::string_view repair_sentence(Facet facet);

/// Extra fact sentences appended when repairing informativeness.
std::span<const std::string> fact_pool();

/// True if any word token of `sentence` is a flaw marker of `facet`.
bool has_flaw_marker(std::string_view sentence, Facet facet);

}  // namespace mole::lexicon
