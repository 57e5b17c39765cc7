#pragma once

#include <string_view>

namespace anchorframe::detail {

// Generated at build time from data/keywords.txt and data/prompts.txt.
std::string_view builtin_keywords_text();
std::string_view builtin_prompts_text();

}  // namespace anchorframe::detail
