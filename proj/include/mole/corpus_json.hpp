/// @file corpus_json.hpp
/// @brief nlohmann::json conversions for corpus records.

#pragma once

#include <nlohmann/json.hpp>

#include "mole/corpus.hpp"

namespace mole {

void to_json(nlohmann::json& j, const Document& doc);
/// Throws CorpusError on missing or mistyped fields; does not check invariants.
void from_json(const nlohmann::json& j, Document& doc);

void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);

void to_json(nlohmann::json& j, const ContrastivePair& pair);
void from_json(const nlohmann::json& j, ContrastivePair& pair);

}  // namespace mole
