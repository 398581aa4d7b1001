/// @file corpus.cpp
/// @brief Facet definitions, record validation, grade binning and JSONL IO.

#include "mole/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mole/corpus_json.hpp"
#include "mole/templates.hpp"
#include "mole/text.hpp"

namespace mole {

using nlohmann::json;

namespace {

struct FacetInfo {
    Facet facet;
    std::string_view name;
    std::string_view description;
};

constexpr std::array<FacetInfo, 5> kFacets = {{
    {Facet::coherence, "coherence",
     "A coherent article is characterized by a logical and organized structure, clear and concise "
     "language, smooth transitions between ideas, and a seamless flow of information, ensuring that "
     "readers can easily follow and comprehend the content."},
    {Facet::usefulness, "usefulness",
     "An article is considered useful when it provides reliable, well-researched information, "
     "presents a comprehensive and balanced perspective, addresses relevant issues or questions, and "
     "offers practical insights or solutions for its intended audience."},
    {Facet::creativeness, "creativeness",
     "An article is considered creative when it demonstrates originality in its approach, offering "
     "unique perspectives, innovative ideas, and engaging storytelling that captivates and inspires "
     "the reader."},
    {Facet::informativeness, "informativeness",
     "An informative article is characterized by its ability to provide accurate, well-researched, "
     "and relevant information in a clear and engaging manner, catering to the needs of its target "
     "audience."},
    {Facet::engagingness, "engagingness",
     "Engaging articles captivate readers through a compelling combination of well-researched and "
     "relevant content, a clear and coherent structure, an accessible writing style, and the "
     "incorporation of multimedia elements that enhance understanding and maintain reader interest."},
}};

const FacetInfo& info(Facet facet) { return kFacets[static_cast<std::size_t>(facet)]; }

std::string grade_range_text() {
    return "[" + std::to_string(kMinGrade) + "," + std::to_string(kMaxGrade) + "]";
}

template <typename T>
T required(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw CorpusError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw CorpusError(std::string("field '") + key + "' has the wrong type");
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

template <typename Record, typename Convert>
std::vector<Record> load_jsonl(const std::filesystem::path& path, Convert convert) {
    if (!std::filesystem::exists(path)) throw CorpusError("no such file: " + path.string());
    auto lines = read_lines(path);
    std::vector<Record> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const std::size_t lineno = i + 1;
        try {
            auto j = json::parse(lines[i]);
            if (!j.is_object()) throw CorpusError("record is not a JSON object");
            records.push_back(convert(j));
        } catch (const json::parse_error& e) {
            throw CorpusError(std::string("malformed JSON: ") + e.what(), lineno);
        } catch (const CorpusError& e) {
            throw CorpusError(e.what(), lineno);
        }
    }
    return records;
}

}  // namespace

// -----------------------------------------------------------------------------
// Facets
// -----------------------------------------------------------------------------

std::string_view facet_name(Facet facet) { return info(facet).name; }

std::string_view facet_description(Facet facet) { return info(facet).description; }

Facet parse_facet(std::string_view name) {
    for (const auto& f : kFacets) {
        if (f.name == name) return f.facet;
    }
    throw CorpusError("unknown facet '" + std::string(name) + "'");
}

// -----------------------------------------------------------------------------
// Validation
// -----------------------------------------------------------------------------

void validate(const Document& doc) {
    if (doc.id.empty()) throw CorpusError("document id is empty");
    if (text::trim(doc.body).empty()) throw CorpusError("document '" + doc.id + "' has an empty body");
    if (doc.grade && (*doc.grade < kMinGrade || *doc.grade > kMaxGrade)) {
        throw CorpusError("document '" + doc.id + "' grade " + std::to_string(*doc.grade) +
                          " outside " + grade_range_text());
    }
}

void validate(const ContrastivePair& pair) {
    validate(pair.original);
    validate(pair.rewritten);
    if (pair.original.id == pair.rewritten.id) {
        throw CorpusError("pair members share id '" + pair.original.id + "'");
    }
    if (pair.rewritten.grade) {
        throw CorpusError("rewritten document '" + pair.rewritten.id + "' must not carry a grade");
    }
}

int bin_grade(double raw, const GradeBins& bins) {
    if (!(bins.source_min < bins.source_max)) {
        throw CorpusError("grade bins need source_min < source_max");
    }
    if (bins.num_bins < 1) throw CorpusError("grade bins need num_bins >= 1");
    if (!std::isfinite(raw) || raw < bins.source_min || raw > bins.source_max) {
        std::ostringstream msg;
        msg << "raw score " << raw << " outside [" << bins.source_min << "," << bins.source_max << "]";
        throw CorpusError(msg.str());
    }
    const double frac = (raw - bins.source_min) / (bins.source_max - bins.source_min);
    const int bin = static_cast<int>(std::floor(frac * bins.num_bins));
    return std::min(bin, bins.num_bins - 1);
}

std::string format_qa(std::string_view title, std::string_view article) {
    return templates::render(templates::kQaFormat, {{"title", std::string(title)},
                                                    {"article_to_be_evaluated", std::string(article)}});
}

// -----------------------------------------------------------------------------
// JSON conversions
// -----------------------------------------------------------------------------

void to_json(json& j, const Document& doc) {
    j = json{{"id", doc.id}, {"title", doc.title}, {"body", doc.body}};
    if (doc.grade) j["grade"] = *doc.grade;
    if (!doc.extra_grades.empty()) j["extra_grades"] = doc.extra_grades;
}

void from_json(const json& j, Document& doc) {
    if (!j.is_object()) throw CorpusError("document is not a JSON object");
    doc.id = required<std::string>(j, "id");
    doc.title = required<std::string>(j, "title");
    doc.body = required<std::string>(j, "body");
    doc.grade.reset();
    if (auto it = j.find("grade"); it != j.end()) {
        if (!it->is_number_integer()) throw CorpusError("field 'grade' must be an integer");
        doc.grade = it->get<int>();
    }
    doc.extra_grades.clear();
    if (auto it = j.find("extra_grades"); it != j.end()) {
        if (!it->is_object()) throw CorpusError("field 'extra_grades' must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_number_integer()) throw CorpusError("extra grade '" + k + "' must be an integer");
            doc.extra_grades[k] = v.get<int>();
        }
    }
}

void to_json(json& j, const Provenance& p) {
    j = json{{"model", p.model},
             {"template_version", p.template_version},
             {"issue_prompt_sha256", p.issue_prompt_sha256},
             {"rewrite_prompt_sha256", p.rewrite_prompt_sha256},
             {"created_at", p.created_at},
             {"stage_a_temperature", p.stage_a_temperature},
             {"stage_b_temperature", p.stage_b_temperature},
             {"truncated", p.truncated},
             {"seed", p.seed},
             {"config_hash", p.config_hash}};
}

void from_json(const json& j, Provenance& p) {
    if (!j.is_object()) throw CorpusError("provenance is not a JSON object");
    p.model = required<std::string>(j, "model");
    p.template_version = required<std::string>(j, "template_version");
    p.issue_prompt_sha256 = required<std::string>(j, "issue_prompt_sha256");
    p.rewrite_prompt_sha256 = required<std::string>(j, "rewrite_prompt_sha256");
    p.created_at = required<std::string>(j, "created_at");
    p.stage_a_temperature = required<double>(j, "stage_a_temperature");
    p.stage_b_temperature = required<double>(j, "stage_b_temperature");
    p.truncated = required<bool>(j, "truncated");
    p.seed = required<std::int64_t>(j, "seed");
    p.config_hash = required<std::string>(j, "config_hash");
}

void to_json(json& j, const ContrastivePair& pair) {
    j = json{{"original", pair.original},
             {"rewritten", pair.rewritten},
             {"facet", facet_name(pair.facet)},
             {"issues", pair.issues},
             {"provenance", pair.provenance}};
}

void from_json(const json& j, ContrastivePair& pair) {
    if (!j.is_object()) throw CorpusError("pair is not a JSON object");
    for (const char* key : {"original", "rewritten", "facet", "issues", "provenance"}) {
        if (!j.contains(key)) throw CorpusError(std::string("missing field '") + key + "'");
    }
    from_json(j.at("original"), pair.original);
    from_json(j.at("rewritten"), pair.rewritten);
    pair.facet = parse_facet(required<std::string>(j, "facet"));
    pair.issues = required<std::string>(j, "issues");
    from_json(j.at("provenance"), pair.provenance);
}

// -----------------------------------------------------------------------------
// JSONL IO
// -----------------------------------------------------------------------------

std::vector<Document> load_documents(const std::filesystem::path& path,
                                     const std::optional<GradeBins>& raw_range) {
    return load_jsonl<Document>(path, [&](const json& j) {
        Document doc;
        if (raw_range) {
            json copy = j;
            auto it = copy.find("grade");
            if (it != copy.end()) {
                if (!it->is_number()) throw CorpusError("field 'grade' must be a number");
                *it = bin_grade(it->get<double>(), *raw_range);
            }
            from_json(copy, doc);
        } else {
            from_json(j, doc);
        }
        validate(doc);
        return doc;
    });
}

std::vector<ContrastivePair> load_pairs(const std::filesystem::path& path) {
    return load_jsonl<ContrastivePair>(path, [](const json& j) {
        ContrastivePair pair;
        from_json(j, pair);
        validate(pair);
        return pair;
    });
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CorpusError("cannot write " + path.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw CorpusError("write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw CorpusError("cannot write " + path.string());
    }
}

namespace {

template <typename Record>
void save_jsonl(std::span<const Record> records, const std::filesystem::path& path) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            validate(records[i]);
        } catch (const CorpusError& e) {
            throw CorpusError(std::string("record ") + std::to_string(i + 1) + ": " + e.what());
        }
    }
    std::string out;
    for (const auto& r : records) {
        out += json(r).dump();
        out.push_back('\n');
    }
    write_file_atomic(path, out);
}

}  // namespace

void save_documents(std::span<const Document> docs, const std::filesystem::path& path) {
    save_jsonl(docs, path);
}

void save_pairs(std::span<const ContrastivePair> pairs, const std::filesystem::path& path) {
    save_jsonl(pairs, path);
}

}  // namespace mole
