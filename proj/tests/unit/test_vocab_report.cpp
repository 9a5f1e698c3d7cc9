#include "iar/report.hpp"
#include "iar/vocab.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace iar;
using namespace iar::vocab;

TEST_CASE("token categories") {
    CHECK(classify_token_vocab("\xC4\xA0So") == Category::reasoning_marker);
    CHECK(classify_token_vocab("\xE2\x96\x81Wait") == Category::reasoning_marker);
    CHECK(classify_token_vocab("Okay") == Category::reasoning_marker);
    CHECK(classify_token_vocab("\xC4\x8A") == Category::whitespace);
    CHECK(classify_token_vocab("\xC4\xA0") == Category::whitespace);
    CHECK(classify_token_vocab(" \n") == Category::whitespace);
    CHECK(classify_token_vocab(".") == Category::punctuation);
    CHECK(classify_token_vocab("\xC4\xA0:") == Category::punctuation);
    CHECK(classify_token_vocab("42") == Category::digit);
    CHECK(classify_token_vocab("x") == Category::letter);
    CHECK(classify_token_vocab("banana") == Category::other);
    CHECK(classify_token_vocab("") == Category::other);
    const std::set<std::string, std::less<>> custom = {"banana"};
    CHECK(classify_token_vocab("banana", custom) == Category::reasoning_marker);
    CHECK(classify_token_vocab("So", custom) == Category::other);
}

TEST_CASE("cell formatting") {
    using report::Cell;
    CHECK(report::format_cell(Cell(0.12345)) == "0.1235");
    CHECK(report::format_cell(Cell(2.5, 1)) == "2.5");
    CHECK(report::format_cell(Cell(-0.00001)) == "0.0000");
    CHECK(report::format_cell(Cell(std::size_t{7})) == "7");
    CHECK(report::format_cell(Cell::absent()) == "--");
    CHECK(report::format_cell(Cell(Maybe{})) == "--");
    CHECK(report::triplet(-0.71, std::nullopt, 0.2) == "-0.71/--/0.20");
}

TEST_CASE("TSV and JSON rendering") {
    report::Report r;
    r.command = "demo";
    auto& t = r.add_table("first", {"a", "b"});
    r.add_table("second", {"c"}).add_row({"x"});
    t.add_row({1, "tab\there"});
    t.add_row({report::Cell::absent(), 0.5});
    CHECK(r.find("second") != nullptr);
    CHECK(r.find("third") == nullptr);
    CHECK(report::render(r, report::Format::tsv) ==
          "# first\na\tb\n1\ttab\\there\n--\t0.5000\n\n# second\nc\nx\n");
    const auto j = nlohmann::json::parse(report::render(r, report::Format::json));
    CHECK(j["command"] == "demo");
    CHECK(j["tables"][0]["rows"][1]["a"].is_null());
    CHECK(j["tables"][0]["rows"][1]["b"] == 0.5);
    CHECK(j["tables"][0]["rows"][0]["b"] == "tab\there");
    CHECK(report::format_from_string("json") == report::Format::json);
    CHECK_THROWS_AS(report::format_from_string("xml"), ParameterError);
    CHECK_THROWS_AS(t.add_row({1}), ShapeError);
}
