/// @file corpus.hpp
/// @brief Documents, quality facets, contrastive pairs and their JSONL persistence.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mole/error.hpp"

namespace mole {

inline constexpr int kNumGrades = 5;
inline constexpr int kMinGrade = 0;
inline constexpr int kMaxGrade = 4;

// -----------------------------------------------------------------------------
// Quality facets
// -----------------------------------------------------------------------------

enum class Facet { coherence, usefulness, creativeness, informativeness, engagingness };

inline constexpr std::array<Facet, 5> kAllFacets = {
    Facet::coherence, Facet::usefulness, Facet::creativeness,
    Facet::informativeness, Facet::engagingness};

/// Lowercase facet name as used in prompts and on disk.
std::string_view facet_name(Facet facet);

/// One-sentence definition of the facet, substituted into the issue prompt.
std::string_view facet_description(Facet facet);

/// Inverse of facet_name. Throws CorpusError for unknown names.
Facet parse_facet(std::string_view name);

// -----------------------------------------------------------------------------
// Records
// -----------------------------------------------------------------------------

struct Document {
    std::string id;
    std::string title;
    std::string body;
    std::optional<int> grade;  ///< absent for unlabeled documents
    /// Optional sub-dimension gold labels (e.g. per-trait essay scores).
    std::map<std::string, int> extra_grades;

    bool operator==(const Document&) const = default;
};

/// Where a contrastive pair came from.
struct Provenance {
    std::string model;
    std::string template_version;
    std::string issue_prompt_sha256;
    std::string rewrite_prompt_sha256;
    std::string created_at;
    double stage_a_temperature = 0.0;
    double stage_b_temperature = 0.0;
    bool truncated = false;
    std::int64_t seed = 0;
    std::string config_hash;

    bool operator==(const Provenance&) const = default;
};

/// An (original, counterfactual rewrite) pair. The rewrite is always the
/// higher-quality member.
struct ContrastivePair {
    Document original;
    Document rewritten;
    Facet facet = Facet::coherence;
    std::string issues;
    Provenance provenance;

    const Document& higher() const { return rewritten; }
    const Document& lower() const { return original; }

    bool operator==(const ContrastivePair&) const = default;
};

/// Equal-width mapping of a raw score range onto the 5-point grade scale.
struct GradeBins {
    double source_min = 0;
    double source_max = 4;
    int num_bins = kNumGrades;
};

// -----------------------------------------------------------------------------
// Errors
// -----------------------------------------------------------------------------

class CorpusError : public Error {
public:
    explicit CorpusError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    /// 1-based line of the offending record, or 0 when not line-specific.
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// -----------------------------------------------------------------------------
// Validation and grade binning
// -----------------------------------------------------------------------------

/// Throws CorpusError if the document violates its invariants.
void validate(const Document& doc);
void validate(const ContrastivePair& pair);

int bin_grade(double raw, const GradeBins& bins);

/// Wraps a document in the dialogue QA format presented to the evaluator.
std::string format_qa(std::string_view title, std::string_view article);

// -----------------------------------------------------------------------------
// JSONL persistence
// -----------------------------------------------------------------------------

enum class Schema { labeled, pairs };

/// Loads a labeled corpus. When `raw_range` is given, the on-disk `grade`
/// field holds a raw score in that range and is binned onto 0-4.
std::vector<Document> load_documents(const std::filesystem::path& path,
                                     const std::optional<GradeBins>& raw_range = std::nullopt);
std::vector<ContrastivePair> load_pairs(const std::filesystem::path& path);

/// Validates every record first; nothing is written if any record is invalid.
void save_documents(std::span<const Document> docs, const std::filesystem::path& path);
void save_pairs(std::span<const ContrastivePair> pairs, const std::filesystem::path& path);

/// Writes a whole file atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mole
