#include "iar/archive.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

namespace iar::archive {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<char, 4> kMagic = {'I', 'A', 'R', '1'};
constexpr std::size_t kPreambleBytes = 4 + 4 + 8;

constexpr std::array<Tensor, 5> kRawTensors = {Tensor::final_states, Tensor::gold_embedding,
                                               Tensor::per_layer_states, Tensor::rmsnorm_gain,
                                               Tensor::unembedding};
constexpr std::array<Tensor, 3> kJsTensors = {Tensor::final_states, Tensor::gold_embedding,
                                              Tensor::js_matrix};

Mode mode_from_string(const std::string& s) {
    if (s == "raw") return Mode::raw;
    if (s == "js") return Mode::js;
    throw FormatError("unknown archive mode '" + s + "'");
}

Decoding decoding_from_string(const std::string& s) {
    if (s == "greedy") return Decoding::greedy;
    if (s == "sampled") return Decoding::sampled;
    throw FormatError("unknown decoding '" + s + "'");
}

template <typename T>
void append_le(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

ordered_json header_to_json(const ArchiveHeader& h) {
    ordered_json j;
    j["model_name"] = h.model_name;
    j["num_layers"] = h.num_layers;
    j["hidden_dim"] = h.hidden_dim;
    j["subsample_dim"] = h.subsample_dim;
    j["vocab_size"] = h.vocab_size ? ordered_json(*h.vocab_size) : ordered_json(nullptr);
    j["mode"] = to_string(h.mode);
    j["decoding"] = to_string(h.decoding);
    j["seed"] = h.seed ? ordered_json(*h.seed) : ordered_json(nullptr);
    j["rmsnorm_eps"] = h.rmsnorm_eps ? ordered_json(*h.rmsnorm_eps) : ordered_json(nullptr);
    ordered_json problems = ordered_json::array();
    const auto tensors = tensors_for(h.mode);
    for (const auto& p : h.problems) {
        ordered_json pj;
        pj["problem_id"] = p.problem_id;
        pj["domain"] = to_string(p.domain);
        pj["num_tokens"] = p.num_tokens;
        pj["token_strings"] = p.token_strings;
        pj["gold_correct"] = p.gold_correct;
        ordered_json offsets = ordered_json::object();
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            offsets[std::string(to_string(tensors[k]))] = p.payload_offsets.at(k);
        }
        pj["payload_offsets"] = std::move(offsets);
        problems.push_back(std::move(pj));
    }
    j["problems"] = std::move(problems);
    return j;
}

ArchiveHeader header_from_json(const nlohmann::json& j) {
    ArchiveHeader h;
    try {
        h.model_name = j.at("model_name").get<std::string>();
        h.num_layers = j.at("num_layers").get<std::size_t>();
        h.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        h.subsample_dim = j.at("subsample_dim").get<std::size_t>();
        if (j.contains("vocab_size") && !j["vocab_size"].is_null())
            h.vocab_size = j["vocab_size"].get<std::size_t>();
        h.mode = mode_from_string(j.at("mode").get<std::string>());
        h.decoding = decoding_from_string(j.at("decoding").get<std::string>());
        if (j.contains("seed") && !j["seed"].is_null()) h.seed = j["seed"].get<std::int64_t>();
        if (j.contains("rmsnorm_eps") && !j["rmsnorm_eps"].is_null())
            h.rmsnorm_eps = j["rmsnorm_eps"].get<double>();
        const auto tensors = tensors_for(h.mode);
        for (const auto& pj : j.at("problems")) {
            ProblemMeta p;
            p.problem_id = pj.at("problem_id").get<std::string>();
            p.domain = domain_from_string(pj.at("domain").get<std::string>());
            p.num_tokens = pj.at("num_tokens").get<std::size_t>();
            p.token_strings = pj.at("token_strings").get<std::vector<std::string>>();
            p.gold_correct = pj.at("gold_correct").get<bool>();
            const auto& offsets = pj.at("payload_offsets");
            for (Tensor t : tensors) {
                p.payload_offsets.push_back(offsets.at(std::string(to_string(t))).get<std::uint64_t>());
            }
            if (offsets.size() != tensors.size()) {
                throw FormatError("problem " + p.problem_id + ": unexpected tensors in payload_offsets");
            }
            h.problems.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed archive header: ") + e.what());
    }
    return h;
}

void check_payload(const ArchiveHeader& h, const ProblemMeta& meta, const ProblemPayload& payload) {
    for (Tensor t : tensors_for(h.mode)) {
        const auto& data = payload.tensor(t);
        const std::size_t expected = tensor_elements(h, meta, t);
        if (data.size() != expected) {
            throw ShapeError("problem " + meta.problem_id + ": tensor " + std::string(to_string(t)) +
                             " has " + std::to_string(data.size()) + " values, expected " +
                             std::to_string(expected));
        }
        for (float v : data) {
            if (!std::isfinite(v)) {
                throw RangeError("problem " + meta.problem_id + ": non-finite value in " +
                                 std::string(to_string(t)));
            }
        }
    }
    if (h.mode == Mode::js) {
        for (float v : payload.js_matrix) {
            if (v < 0.0f || v > 1.0f) {
                throw RangeError("problem " + meta.problem_id + ": js_matrix value " + std::to_string(v) +
                                 " outside [0, 1]");
            }
        }
    }
}

}  // namespace

std::string_view to_string(Tensor t) {
    switch (t) {
        case Tensor::final_states: return "final_states";
        case Tensor::gold_embedding: return "gold_embedding";
        case Tensor::per_layer_states: return "per_layer_states";
        case Tensor::rmsnorm_gain: return "rmsnorm_gain";
        case Tensor::unembedding: return "unembedding";
        case Tensor::js_matrix: return "js_matrix";
    }
    return "unknown";
}

std::string_view to_string(Mode m) { return m == Mode::raw ? "raw" : "js"; }
std::string_view to_string(Decoding d) { return d == Decoding::greedy ? "greedy" : "sampled"; }

std::span<const Tensor> tensors_for(Mode mode) {
    if (mode == Mode::raw) return kRawTensors;
    return kJsTensors;
}

std::vector<float>& ProblemPayload::tensor(Tensor t) {
    return const_cast<std::vector<float>&>(std::as_const(*this).tensor(t));
}

const std::vector<float>& ProblemPayload::tensor(Tensor t) const {
    switch (t) {
        case Tensor::final_states: return final_states;
        case Tensor::gold_embedding: return gold_embedding;
        case Tensor::per_layer_states: return per_layer_states;
        case Tensor::rmsnorm_gain: return rmsnorm_gain;
        case Tensor::unembedding: return unembedding;
        case Tensor::js_matrix: return js_matrix;
    }
    throw ParameterError("unknown tensor");
}

std::size_t tensor_elements(const ArchiveHeader& h, const ProblemMeta& meta, Tensor t) {
    const std::size_t T = meta.num_tokens;
    switch (t) {
        case Tensor::final_states: return T * h.subsample_dim;
        case Tensor::gold_embedding: return h.subsample_dim;
        case Tensor::per_layer_states: return T * h.num_layers * h.hidden_dim;
        case Tensor::rmsnorm_gain: return h.hidden_dim;
        case Tensor::unembedding: return h.vocab_size.value_or(0) * h.hidden_dim;
        case Tensor::js_matrix: return T * h.num_layers;
    }
    return 0;
}

void check_header(const ArchiveHeader& h) {
    if (h.num_layers == 0) throw FormatError("num_layers must be positive");
    if (h.hidden_dim == 0) throw FormatError("hidden_dim must be positive");
    if (h.subsample_dim == 0) throw FormatError("subsample_dim must be positive");
    if (h.subsample_dim > h.hidden_dim) throw FormatError("subsample_dim exceeds hidden_dim");
    if (h.mode == Mode::raw) {
        if (!h.vocab_size || *h.vocab_size == 0) throw FormatError("raw mode requires a positive vocab_size");
        if (!h.rmsnorm_eps || !(*h.rmsnorm_eps > 0.0))
            throw FormatError("raw mode requires a positive rmsnorm_eps");
    }
    std::vector<std::string_view> ids;
    for (const auto& p : h.problems) {
        if (p.num_tokens == 0) throw ShapeError("problem " + p.problem_id + ": token count must be >= 1");
        if (p.token_strings.size() != p.num_tokens) {
            throw ShapeError("problem " + p.problem_id + ": token_strings length " +
                             std::to_string(p.token_strings.size()) + " != T " + std::to_string(p.num_tokens));
        }
        ids.push_back(p.problem_id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw FormatError("duplicate problem_id in archive header");
    }
}

std::string encode_archive(const ArchiveHeader& header, std::span<const ProblemPayload> payloads) {
    if (payloads.size() != header.problems.size()) {
        throw ShapeError("payload count does not match the number of problems in the header");
    }
    check_header(header);

    ArchiveHeader h = header;
    std::uint64_t cursor = 0;
    for (std::size_t i = 0; i < h.problems.size(); ++i) {
        auto& meta = h.problems[i];
        check_payload(h, meta, payloads[i]);
        meta.payload_offsets.clear();
        for (Tensor t : tensors_for(h.mode)) {
            meta.payload_offsets.push_back(cursor);
            cursor += tensor_elements(h, meta, t) * sizeof(float);
        }
    }

    const std::string json_text = header_to_json(h).dump();
    std::string out;
    out.reserve(kPreambleBytes + json_text.size() + cursor);
    out.append(kMagic.data(), kMagic.size());
    append_le<std::uint32_t>(out, kVersion);
    append_le<std::uint64_t>(out, json_text.size());
    out += json_text;
    for (std::size_t i = 0; i < h.problems.size(); ++i) {
        for (Tensor t : tensors_for(h.mode)) {
            const auto& data = payloads[i].tensor(t);
            out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
        }
    }
    return out;
}

void write_archive(const std::filesystem::path& path, const ArchiveHeader& header,
                   std::span<const ProblemPayload> payloads) {
    const std::string bytes = encode_archive(header, payloads);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

// Byte source behind an archive: a file path (re-opened per read so loads
// can run concurrently) or an in-memory buffer.
struct Archive::Source {
    std::filesystem::path path;
    std::string bytes;
    bool in_memory = false;
    std::uint64_t size = 0;

    void read(std::uint64_t offset, std::uint64_t count, char* dst) const {
        if (offset + count > size) throw FormatError("read past end of archive");
        if (in_memory) {
            std::memcpy(dst, bytes.data() + offset, count);
            return;
        }
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path.string());
        in.seekg(static_cast<std::streamoff>(offset));
        in.read(dst, static_cast<std::streamsize>(count));
        if (static_cast<std::uint64_t>(in.gcount()) != count) throw FormatError("short read from archive");
    }
};

namespace {

// Parses preamble + header and checks offsets against the payload size.
std::pair<ArchiveHeader, std::uint64_t> parse_header(const auto& source) {
    if (source.size < kPreambleBytes) throw FormatError("not an IAR archive");
    char pre[kPreambleBytes];
    source.read(0, kPreambleBytes, pre);
    if (std::memcmp(pre, kMagic.data(), kMagic.size()) != 0) throw FormatError("not an IAR archive");
    std::uint32_t version = 0;
    std::memcpy(&version, pre + 4, sizeof version);
    if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version));
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, pre + 8, sizeof header_len);
    if (kPreambleBytes + header_len > source.size) throw FormatError("header extends past end of file");

    std::string text(header_len, '\0');
    source.read(kPreambleBytes, header_len, text.data());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("archive header is not valid JSON: ") + e.what());
    }
    ArchiveHeader h = header_from_json(j);
    check_header(h);

    const std::uint64_t payload_start = kPreambleBytes + header_len;
    const std::uint64_t payload_size = source.size - payload_start;
    std::uint64_t cursor = 0;
    for (const auto& meta : h.problems) {
        const auto tensors = tensors_for(h.mode);
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            if (meta.payload_offsets[k] != cursor) {
                throw FormatError("problem " + meta.problem_id + ": offset of " +
                                  std::string(to_string(tensors[k])) +
                                  " leaves a gap or overlaps the previous tensor");
            }
            cursor += tensor_elements(h, meta, tensors[k]) * sizeof(float);
            if (cursor > payload_size) throw FormatError("payload underrun at " + meta.problem_id);
        }
    }
    if (cursor != payload_size) {
        throw FormatError(std::to_string(payload_size - cursor) + " trailing payload bytes not covered by any tensor");
    }
    return {std::move(h), payload_start};
}

}  // namespace

Archive::Archive(ArchiveHeader header, std::shared_ptr<const Source> source, std::uint64_t payload_start)
    : header_(std::move(header)), source_(std::move(source)), payload_start_(payload_start) {}

Archive Archive::open(const std::filesystem::path& path) {
    auto src = std::make_shared<Source>();
    src->path = path;
    std::error_code ec;
    src->size = std::filesystem::file_size(path, ec);
    if (ec) throw Error("cannot open " + path.string() + ": " + ec.message());
    auto [h, start] = parse_header(*src);
    return Archive(std::move(h), std::move(src), start);
}

Archive Archive::from_bytes(std::string bytes) {
    auto src = std::make_shared<Source>();
    src->bytes = std::move(bytes);
    src->in_memory = true;
    src->size = src->bytes.size();
    auto [h, start] = parse_header(*src);
    return Archive(std::move(h), std::move(src), start);
}

ProblemPayload Archive::load(std::size_t i) const {
    const ProblemMeta& m = meta(i);
    ProblemPayload p;
    const auto tensors = tensors_for(header_.mode);
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        auto& dst = p.tensor(tensors[k]);
        dst.resize(tensor_elements(header_, m, tensors[k]));
        source_->read(payload_start_ + m.payload_offsets[k], dst.size() * sizeof(float),
                      reinterpret_cast<char*>(dst.data()));
    }
    return p;
}

std::optional<std::size_t> Archive::find(std::string_view problem_id) const {
    for (std::size_t i = 0; i < header_.problems.size(); ++i) {
        if (header_.problems[i].problem_id == problem_id) return i;
    }
    return std::nullopt;
}

std::vector<Violation> validate_archive(const Archive& archive) {
    std::vector<Violation> out;
    const auto& h = archive.header();
    for (std::size_t i = 0; i < archive.size(); ++i) {
        const auto& meta = archive.meta(i);
        const ProblemPayload p = archive.load(i);
        for (Tensor t : tensors_for(h.mode)) {
            const auto& data = p.tensor(t);
            const auto bad = std::count_if(data.begin(), data.end(), [](float v) { return !std::isfinite(v); });
            if (bad > 0) {
                out.push_back({meta.problem_id, std::string(to_string(t)),
                               std::to_string(bad) + " non-finite value(s)"});
            }
        }
        if (h.mode != Mode::js) continue;
        const std::size_t L = h.num_layers;
        std::size_t out_of_range = 0;
        std::size_t nonzero_final = 0;
        for (std::size_t t = 0; t < meta.num_tokens; ++t) {
            for (std::size_t l = 0; l < L; ++l) {
                const float v = p.js_matrix[t * L + l];
                if (std::isfinite(v) && (v < 0.0f || v > 1.0f)) ++out_of_range;
            }
            if (p.js_matrix[t * L + L - 1] != 0.0f) ++nonzero_final;
        }
        if (out_of_range > 0) {
            out.push_back({meta.problem_id, "js_matrix",
                           std::to_string(out_of_range) + " value(s) outside [0, 1]"});
        }
        if (nonzero_final > 0) {
            out.push_back({meta.problem_id, "js_matrix",
                           "final layer " + std::to_string(L) + " column is non-zero at " +
                               std::to_string(nonzero_final) + " token(s)"});
        }
    }
    return out;
}

}  // namespace iar::archive
