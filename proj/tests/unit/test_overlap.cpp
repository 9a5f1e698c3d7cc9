#include "iar/overlap.hpp"

#include <doctest.h>

using namespace iar;
using namespace iar::overlap;

namespace {
peaks::PeakSet P(std::string id, IndexSet idx) {
    peaks::PeakSet p;
    p.problem_id = std::move(id);
    p.indices = std::move(idx);
    return p;
}
dtr::DeepSet D(std::string id, IndexSet idx) {
    dtr::DeepSet d;
    d.problem_id = std::move(id);
    d.indices = std::move(idx);
    return d;
}
}  // namespace

TEST_CASE("inclusion ratio") {
    CHECK(*inclusion_ratio(P("a", {1, 2, 3, 4}), D("a", {2, 4, 9})) == doctest::Approx(0.5));
    CHECK_FALSE(inclusion_ratio(P("a", {}), D("a", {1})).has_value());
    CHECK_THROWS_AS(inclusion_ratio(P("a", {1}), D("b", {1})), ConsistencyError);
}

TEST_CASE("pooled and per-problem precision") {
    const std::vector<peaks::PeakSet> ps = {P("a", {1, 2}), P("b", {}), P("c", {0, 5, 6}), P("d", {3})};
    const std::vector<dtr::DeepSet> ds = {D("a", {1, 2, 7, 8}), D("b", {1}), D("c", {5}), D("d", {})};
    // pooled: (2 + 1 + 0) / (2 + 3 + 1)
    CHECK(*token_pool_precision(ps, ds) == doctest::Approx(0.5));
    const auto ppp = per_problem_precision(ps, ds);
    // a: 2/4, c: 1/1, d: empty deep set counts as 0
    CHECK(*ppp.mean == doctest::Approx((0.5 + 1.0 + 0.0) / 3.0));
    CHECK(ppp.empty_deep_set == std::vector<std::string>{"d"});

    const std::vector<peaks::PeakSet> none = {P("a", {}), P("b", {})};
    const std::vector<dtr::DeepSet> some = {D("a", {1}), D("b", {2})};
    CHECK_FALSE(token_pool_precision(none, some).has_value());
    CHECK_FALSE(per_problem_precision(none, some).mean.has_value());
    CHECK_THROWS_AS(token_pool_precision(none, std::span<const dtr::DeepSet>(some).first(1)), AlignmentError);
}

TEST_CASE("containment gives unit pooled precision") {
    const std::vector<peaks::PeakSet> ps = {P("a", {1, 3}), P("b", {0})};
    const std::vector<dtr::DeepSet> ds = {D("a", {0, 1, 2, 3}), D("b", {0, 4})};
    const auto r = overlap_report(ps, ds);
    CHECK(*r.tpp == 1.0);
    CHECK(r.pooled_peaks == 3);
    CHECK(r.pooled_deep == 6);
    CHECK(r.pooled_both == 3);
    REQUIRE(r.problems.size() == 2);
    CHECK(r.problems[0].both == 2);
    CHECK(*r.problems[1].inclusion_ratio == 1.0);
}

TEST_CASE("top-k ranking and vocabulary overlap") {
    const TokenFrequency a = {{"x", 5}, {"y", 5}, {"z", 1}, {"w", 3}};
    const auto top = top_k(a, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].first == "x");  // tie broken lexicographically
    CHECK(top[1].first == "y");
    CHECK(top[2].first == "w");
    const TokenFrequency b = {{"y", 9}, {"w", 8}, {"q", 7}};
    CHECK(vocab_overlap_topk(a, b, 3) == doctest::Approx(2.0 / 3.0));
    // k larger than either table still divides by k
    CHECK(vocab_overlap_topk(a, b, 20) == doctest::Approx(2.0 / 20.0));
    CHECK_THROWS_AS(vocab_overlap_topk(a, {}, 3), ParameterError);
    CHECK_THROWS_AS(vocab_overlap_topk(a, b, 0), ParameterError);
}
