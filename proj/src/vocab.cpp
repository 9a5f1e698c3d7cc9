#include "iar/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace iar::vocab {

namespace {

constexpr std::string_view kSpaceMarkers[] = {"\xC4\xA0", "\xE2\x96\x81", " "};
constexpr std::string_view kWhitespaceGlyphs[] = {"\xC4\xA0", "\xC4\x8A", "\xC4\x89", "\xE2\x96\x81",
                                                  " ",        "\n",       "\t",       "\r"};

// Splits the token into whitespace glyphs; returns false if something else
// is present.
bool all_whitespace(std::string_view s) {
    while (!s.empty()) {
        bool matched = false;
        for (auto g : kWhitespaceGlyphs) {
            if (s.starts_with(g)) {
                s.remove_prefix(g.size());
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

std::string_view strip_space_marker(std::string_view s) {
    for (auto m : kSpaceMarkers) {
        if (s.starts_with(m) && s.size() > m.size()) return s.substr(m.size());
    }
    return s;
}

bool all_of_bytes(std::string_view s, int (*pred)(int)) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [pred](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && pred(u) != 0;
    });
}

}  // namespace

std::string_view to_string(Category c) {
    switch (c) {
        case Category::punctuation: return "punctuation";
        case Category::whitespace: return "whitespace";
        case Category::digit: return "digit";
        case Category::letter: return "letter";
        case Category::reasoning_marker: return "reasoning_marker";
        case Category::other: return "other";
    }
    return "other";
}

const std::set<std::string, std::less<>>& default_reasoning_markers() {
    static const std::set<std::string, std::less<>> markers = {
        "So", "Wait", "Okay", "Let", "First", "Total", "Next", "Finally", "The", "I", "That", "Hmm", "Calculate"};
    return markers;
}

Category classify_token_vocab(std::string_view token) {
    return classify_token_vocab(token, default_reasoning_markers());
}

Category classify_token_vocab(std::string_view token, const std::set<std::string, std::less<>>& markers) {
    if (token.empty()) return Category::other;
    if (all_whitespace(token)) return Category::whitespace;
    const std::string_view core = strip_space_marker(token);
    if (markers.find(core) != markers.end()) return Category::reasoning_marker;
    if (all_of_bytes(core, std::ispunct)) return Category::punctuation;
    if (all_of_bytes(core, std::isdigit)) return Category::digit;
    if (core.size() == 1 && all_of_bytes(core, std::isalpha)) return Category::letter;
    return Category::other;
}

}  // namespace iar::vocab
