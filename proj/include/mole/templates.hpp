/// @file templates.hpp
/// @brief Prompt and dialogue templates compiled in from assets/templates.

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace mole::templates {

/// Version tag recorded in pair provenance; bump when an asset changes.
inline constexpr std::string_view kVersion = "v1";

/// Issue-identification prompt. Slots: {dim_name} {dim_description} {article} {label}.
extern const std::string_view kIssuePrompt;
/// Rewrite prompt. Slots: {article} {issues}.
extern const std::string_view kRewritePrompt;
/// Dialogue QA wrapper. Slots: {title} {article_to_be_evaluated}.
extern const std::string_view kQaFormat;

/// Single-pass `{name}` substitution. Substituted values are copied
/// verbatim and never rescanned; braces whose name has no slot are kept.
std::string render(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& slots);

}  // namespace mole::templates
