#include "helpers.hpp"

#include "iar/archive.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace iar;
using namespace iar::archive;
using testing_support::join;
using testing_support::js_header;
using testing_support::js_payloads;
using testing_support::split;

TEST_CASE("round trip through bytes and files preserves header and payloads") {
    const auto h = js_header(3);
    const auto payloads = js_payloads(h);
    const std::string bytes = encode_archive(h, payloads);
    CHECK(bytes.substr(0, 4) == "IAR1");

    const Archive a = Archive::from_bytes(bytes);
    REQUIRE(a.size() == 3);
    CHECK(a.header().model_name == "tiny");
    CHECK(a.header().seed == 42);
    CHECK(a.header().mode == Mode::js);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.meta(i).problem_id == h.problems[i].problem_id);
        CHECK(a.meta(i).domain == h.problems[i].domain);
        CHECK(a.meta(i).token_strings == h.problems[i].token_strings);
        CHECK(a.load(i) == payloads[i]);
    }
    CHECK(a.find("p2") == 2u);
    CHECK_FALSE(a.find("nope").has_value());

    const auto path = std::filesystem::temp_directory_path() / "iar_roundtrip_test.iar";
    write_archive(path, h, payloads);
    const Archive f = Archive::open(path);
    for (std::size_t i = 0; i < 3; ++i) CHECK(f.load(i) == payloads[i]);
    std::filesystem::remove(path);
}

TEST_CASE("offsets are relative to the payload region and contiguous") {
    const auto h = js_header(2, 3, 2, 4);
    const auto s = split(encode_archive(h, js_payloads(h)));
    const auto& p0 = s.header["problems"][0]["payload_offsets"];
    const auto& p1 = s.header["problems"][1]["payload_offsets"];
    CHECK(p0["final_states"] == 0);
    CHECK(p0["gold_embedding"] == 3 * 4 * 4);
    CHECK(p0["js_matrix"] == (3 * 4 + 4) * 4);
    CHECK(p1["final_states"] == (3 * 4 + 4 + 3 * 2) * 4);
    CHECK(s.payload.size() == ((3 * 4 + 4 + 3 * 2) + (4 * 4 + 4 + 4 * 2)) * 4);
}

TEST_CASE("raw mode stores tensors in raw order") {
    const auto spec = testing_support::cohort(2, 5, 1);
    const auto g = synth::synth_generate(spec).front();
    const auto s = split(encode_archive(g.header, g.payloads));
    std::vector<std::string> keys;
    for (auto it = s.header["problems"][0]["payload_offsets"].begin();
         it != s.header["problems"][0]["payload_offsets"].end(); ++it)
        keys.push_back(it.key());
    // nlohmann::json orders keys lexicographically on parse; check the values instead.
    const auto& off = s.header["problems"][0]["payload_offsets"];
    CHECK(off["final_states"] < off["gold_embedding"]);
    CHECK(off["gold_embedding"] < off["per_layer_states"]);
    CHECK(off["per_layer_states"] < off["rmsnorm_gain"]);
    CHECK(off["rmsnorm_gain"] < off["unembedding"]);
    CHECK(keys.size() == 5);
}

TEST_CASE("reader rejects malformed files") {
    const auto h = js_header(2);
    const std::string bytes = encode_archive(h, js_payloads(h));
    const auto s = split(bytes);

    SUBCASE("bad magic") {
        std::string b = bytes;
        b[0] = 'X';
        CHECK_THROWS_WITH_AS(Archive::from_bytes(b), "not an IAR archive", FormatError);
    }
    SUBCASE("unsupported version") {
        CHECK_THROWS_WITH_AS(Archive::from_bytes(join(s.header, s.payload, 2)), "unsupported version 2",
                             FormatError);
    }
    SUBCASE("truncated payload") {
        const std::string b = bytes.substr(0, bytes.size() - 4);
        CHECK_THROWS_WITH_AS(Archive::from_bytes(b), "payload underrun at p1", FormatError);
    }
    SUBCASE("trailing bytes") {
        CHECK_THROWS_AS(Archive::from_bytes(bytes + std::string(8, '\0')), FormatError);
    }
    SUBCASE("gap between tensors") {
        auto j = s.header;
        j["problems"][1]["payload_offsets"]["gold_embedding"] =
            j["problems"][1]["payload_offsets"]["gold_embedding"].get<std::uint64_t>() + 4;
        CHECK_THROWS_AS(Archive::from_bytes(join(j, s.payload)), FormatError);
    }
    SUBCASE("overlapping tensors") {
        auto j = s.header;
        j["problems"][0]["payload_offsets"]["js_matrix"] = 0;
        CHECK_THROWS_AS(Archive::from_bytes(join(j, s.payload)), FormatError);
    }
    SUBCASE("missing tensor offset") {
        auto j = s.header;
        j["problems"][0]["payload_offsets"].erase("js_matrix");
        CHECK_THROWS_AS(Archive::from_bytes(join(j, s.payload)), FormatError);
    }
    SUBCASE("header is not JSON") {
        std::string b = bytes;
        b[16] = '#';
        CHECK_THROWS_AS(Archive::from_bytes(b), FormatError);
    }
    SUBCASE("token strings disagree with num_tokens") {
        auto j = s.header;
        j["problems"][0]["token_strings"].erase(0);
        CHECK_THROWS_AS(Archive::from_bytes(join(j, s.payload)), ShapeError);
    }
    SUBCASE("duplicate problem ids") {
        auto j = s.header;
        j["problems"][1]["problem_id"] = "p0";
        CHECK_THROWS_AS(Archive::from_bytes(join(j, s.payload)), FormatError);
    }
}

TEST_CASE("writer rejects bad values naming the problem") {
    auto h = js_header(2);
    auto payloads = js_payloads(h);
    SUBCASE("NaN") {
        payloads[1].final_states[3] = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_WITH_AS(encode_archive(h, payloads), doctest::Contains("p1"), RangeError);
    }
    SUBCASE("js value out of range") {
        payloads[0].js_matrix[0] = 1.5f;
        CHECK_THROWS_WITH_AS(encode_archive(h, payloads), doctest::Contains("p0"), RangeError);
    }
    SUBCASE("wrong tensor size") {
        payloads[0].gold_embedding.pop_back();
        CHECK_THROWS_WITH_AS(encode_archive(h, payloads), doctest::Contains("p0"), ShapeError);
    }
    SUBCASE("raw mode without vocab size") {
        h.mode = Mode::raw;
        CHECK_THROWS_AS(encode_archive(h, payloads), FormatError);
    }
}

TEST_CASE("validate_archive") {
    SUBCASE("clean synthetic archive has no violations") {
        const auto spec = testing_support::cohort(4, 9, 1);
        const auto g = synth::synth_generate(spec).front();
        CHECK(validate_archive(Archive::from_bytes(encode_archive(g.header, g.payloads))).empty());
    }
    SUBCASE("injected NaN and non-zero final column are reported") {
        const auto h = js_header(2, 4, 3, 5);
        std::string bytes = encode_archive(h, js_payloads(h));
        const auto s = split(bytes);
        const std::size_t payload_start = bytes.size() - s.payload.size();
        const float nan = std::numeric_limits<float>::quiet_NaN();
        const float bad_final = 0.25f;
        // p1 gold_embedding[0]
        const std::uint64_t gold = s.header["problems"][1]["payload_offsets"]["gold_embedding"];
        std::memcpy(bytes.data() + payload_start + gold, &nan, 4);
        // p0 token 1, final layer
        const std::uint64_t js = s.header["problems"][0]["payload_offsets"]["js_matrix"];
        std::memcpy(bytes.data() + payload_start + js + (1 * 3 + 2) * 4, &bad_final, 4);

        const auto v = validate_archive(Archive::from_bytes(bytes));
        REQUIRE(v.size() == 2);
        CHECK(v[0].problem_id == "p0");
        CHECK(v[0].tensor == "js_matrix");
        CHECK(v[1].problem_id == "p1");
        CHECK(v[1].tensor == "gold_embedding");
    }
}
