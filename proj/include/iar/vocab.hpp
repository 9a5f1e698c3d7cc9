#pragma once

#include <set>
#include <string>
#include <string_view>

namespace iar::vocab {

enum class Category { punctuation, whitespace, digit, letter, reasoning_marker, other };

std::string_view to_string(Category c);

// Chain-of-thought connectives treated as reasoning markers.
const std::set<std::string, std::less<>>& default_reasoning_markers();

// Byte-level BPE space marker "Ġ" (U+0120) and SentencePiece "▁" (U+2581)
// are stripped before lexicon lookup; "Ċ" (U+010A) and "ĉ" (U+0109) stand for
// newline and tab.
Category classify_token_vocab(std::string_view token);
Category classify_token_vocab(std::string_view token, const std::set<std::string, std::less<>>& markers);

}  // namespace iar::vocab
