/// @file synth.cpp
/// @brief Synthetic documents whose grade is fixed by planted facet degradations.

#include "mole/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <random>

#include "mole/lexicon.hpp"
#include "mole/text.hpp"

namespace mole::synth {

namespace {

using Rng = std::mt19937_64;

template <typename T>
const T& pick(std::span<const T> pool, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    return pool[d(rng)];
}

/// `k` distinct draws from `pool`.
std::vector<std::string> sample(std::span<const std::string> pool, std::size_t k, Rng& rng) {
    std::vector<std::string> out;
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), std::min(k, pool.size()), rng);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::string make_sentence(std::vector<std::string> words, Rng& rng) {
    std::shuffle(words.begin(), words.end(), rng);
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s.push_back(' ');
        s += w;
    }
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    s.push_back('.');
    return s;
}

std::vector<std::string> neutral(std::size_t n, Rng& rng) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(pick(lexicon::neutral_words(), rng));
    return out;
}

}  // namespace

SynthCorpus synthesize(const SynthConfig& config) {
    if (config.min_filler_sentences < 0 || config.max_filler_sentences < config.min_filler_sentences) {
        throw Error("synth: invalid filler sentence range");
    }
    if (config.words_per_sentence < config.markers_per_flaw + 1 || config.markers_per_flaw < 1) {
        throw Error("synth: words_per_sentence must exceed markers_per_flaw >= 1");
    }
    Rng rng(static_cast<std::uint64_t>(config.seed));
    const auto wps = static_cast<std::size_t>(config.words_per_sentence);
    const auto markers = static_cast<std::size_t>(config.markers_per_flaw);
    constexpr std::size_t kStrengthWords = 2;

    SynthCorpus corpus;
    std::vector<int> block;
    for (std::size_t i = 0; i < config.size; ++i) {
        if (block.empty()) {
            block = {0, 1, 2, 3, 4};
            std::shuffle(block.begin(), block.end(), rng);
        }
        const int k = block.back();
        block.pop_back();

        std::array<Facet, 5> facets = kAllFacets;
        std::shuffle(facets.begin(), facets.end(), rng);
        std::vector<Facet> degraded(facets.begin(), facets.begin() + k);
        std::sort(degraded.begin(), degraded.end());

        const auto& topic = pick(lexicon::topics(), rng);
        std::uniform_int_distribution<int> filler_count(config.min_filler_sentences, config.max_filler_sentences);
        std::vector<std::string> sentences;
        const int fillers = filler_count(rng);
        for (int s = 0; s < fillers; ++s) {
            auto words = neutral(wps - 1, rng);
            words.push_back(topic);
            sentences.push_back(make_sentence(std::move(words), rng));
        }
        for (Facet f : kAllFacets) {
            const bool flawed = std::find(degraded.begin(), degraded.end(), f) != degraded.end();
            auto words = flawed ? sample(lexicon::flaw_markers(f), markers, rng)
                                : sample(lexicon::strength_words(f), kStrengthWords, rng);
            auto filler = neutral(wps - words.size(), rng);
            words.insert(words.end(), filler.begin(), filler.end());
            sentences.push_back(make_sentence(std::move(words), rng));
        }
        std::shuffle(sentences.begin(), sentences.end(), rng);

        char id[64];
        std::snprintf(id, sizeof id, "synth-%lld-%05zu", static_cast<long long>(config.seed), i);
        corpus.documents.push_back(
            Document{id, "Notes on the " + topic, text::join_sentences(sentences), kMaxGrade - k, {}});
        corpus.degradations.push_back(std::move(degraded));
    }
    return corpus;
}

}  // namespace mole::synth
