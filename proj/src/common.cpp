#include "iar/common.hpp"

#include <string>

namespace iar {

std::string_view to_string(Domain d) {
    switch (d) {
        case Domain::math: return "math";
        case Domain::code: return "code";
        case Domain::logic: return "logic";
        case Domain::commonsense: return "commonsense";
    }
    return "unknown";
}

Domain domain_from_string(std::string_view s) {
    for (Domain d : kAllDomains) {
        if (to_string(d) == s) return d;
    }
    throw FormatError("unknown domain '" + std::string(s) + "'");
}

std::size_t intersection_size(const IndexSet& a, const IndexSet& b) {
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

}  // namespace iar
