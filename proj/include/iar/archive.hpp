#pragma once

// On-disk hidden-state archive (".iar").
//
// Layout, all integers and reals little-endian:
//
//   bytes [0, 4)    magic "IAR1"
//   bytes [4, 8)    version, u32 (= 1)
//   bytes [8, 16)   header_length, u64
//   next header_length bytes: UTF-8 JSON header
//   payload region: 32-bit reals, tensors packed back to back
//
// Each problem's "payload_offsets" are byte offsets relative to the start of
// the payload region, one per tensor in on-disk order (see tensors_for). The
// tensors of consecutive problems are contiguous, so every payload byte
// belongs to exactly one tensor.

#include "iar/common.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iar::archive {

inline constexpr std::uint32_t kVersion = 1;

enum class Mode { raw, js };
enum class Decoding { greedy, sampled };

enum class Tensor {
    final_states,      // T x subsample_dim
    gold_embedding,    // subsample_dim
    per_layer_states,  // T x L x d   (raw)
    rmsnorm_gain,      // d           (raw)
    unembedding,       // V x d       (raw)
    js_matrix,         // T x L       (js)
};

std::string_view to_string(Tensor t);
std::string_view to_string(Mode m);
std::string_view to_string(Decoding d);

// Tensors present for a mode, in on-disk order.
std::span<const Tensor> tensors_for(Mode mode);

struct ProblemMeta {
    std::string problem_id;
    Domain domain = Domain::math;
    std::size_t num_tokens = 0;
    std::vector<std::string> token_strings;
    bool gold_correct = false;
    // Filled by the writer; one entry per tensors_for(mode).
    std::vector<std::uint64_t> payload_offsets;
};

struct ArchiveHeader {
    std::string model_name;
    std::size_t num_layers = 0;
    std::size_t hidden_dim = 0;
    std::size_t subsample_dim = 0;
    std::optional<std::size_t> vocab_size;  // raw mode only
    Mode mode = Mode::raw;
    Decoding decoding = Decoding::greedy;
    std::optional<std::int64_t> seed;
    std::optional<double> rmsnorm_eps;  // raw mode only
    std::vector<ProblemMeta> problems;
};

struct ProblemPayload {
    std::vector<float> final_states;
    std::vector<float> gold_embedding;
    std::vector<float> per_layer_states;
    std::vector<float> rmsnorm_gain;
    std::vector<float> unembedding;
    std::vector<float> js_matrix;

    std::vector<float>& tensor(Tensor t);
    const std::vector<float>& tensor(Tensor t) const;

    bool operator==(const ProblemPayload&) const = default;
};

// Number of reals a tensor holds for one problem.
std::size_t tensor_elements(const ArchiveHeader& header, const ProblemMeta& meta, Tensor t);

// Checks header invariants that do not depend on payload values.
void check_header(const ArchiveHeader& header);

// Serializes to the on-disk byte layout. Offsets in the returned bytes are
// computed here; any offsets already present in `header` are ignored.
// Throws ShapeError / RangeError naming the offending problem_id.
std::string encode_archive(const ArchiveHeader& header, std::span<const ProblemPayload> payloads);

void write_archive(const std::filesystem::path& path, const ArchiveHeader& header,
                   std::span<const ProblemPayload> payloads);

// Opened archive. The header is parsed and structurally validated up front;
// payloads are loaded on demand. Safe for concurrent load() calls.
class Archive {
public:
    static Archive open(const std::filesystem::path& path);
    static Archive from_bytes(std::string bytes);

    const ArchiveHeader& header() const noexcept { return header_; }
    std::size_t size() const noexcept { return header_.problems.size(); }
    const ProblemMeta& meta(std::size_t i) const { return header_.problems.at(i); }

    ProblemPayload load(std::size_t i) const;

    // Index of a problem id, or nullopt.
    std::optional<std::size_t> find(std::string_view problem_id) const;

private:
    struct Source;
    Archive(ArchiveHeader header, std::shared_ptr<const Source> source, std::uint64_t payload_start);

    ArchiveHeader header_;
    std::shared_ptr<const Source> source_;
    std::uint64_t payload_start_ = 0;
};

inline Archive read_archive(const std::filesystem::path& path) { return Archive::open(path); }

struct Violation {
    std::string problem_id;
    std::string tensor;
    std::string message;
};

// Lists every value-level invariant violation: non-finite reals, js entries
// outside [0, 1], non-zero final js column. Never throws on bad values.
std::vector<Violation> validate_archive(const Archive& archive);

}  // namespace iar::archive
